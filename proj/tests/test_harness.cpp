#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ymlab/harness.hpp"

using namespace ymlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("ymlab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    int code = run_command(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> r;
    std::stringstream ss(s);
    for (std::string l; std::getline(ss, l);) r.push_back(l);
    return r;
}

const std::string kShortSweep = "2^-4,2^-5,2^-6,2^-7";

}  // namespace

TEST(Config, ParsesEverySection) {
    std::istringstream in(R"(# sweep settings
[sweep]
eps = 2^-4, 2^-5, 0.015625, 2^-7   # trailing comment
ratio_D = 1.25
[point]
p = 0.05, 0, -0.02, 0
g = 1, 0.2, 0, -0.1
eps = 2^-6
[constants]
d0 = 0.7
lambda0 = 0.3
D1 = 0.5
D2 = 2
[numerics]
tol = 1e-5
seed = 99
n_test = 8
threads = 2
pi2 = zero
background = 0.5
[output]
dir = results
)");
    SweepConfig c = parse_config(in);
    ASSERT_EQ(c.eps.size(), 4u);
    EXPECT_DOUBLE_EQ(c.eps[2], 1.0 / 64);
    EXPECT_DOUBLE_EQ(c.eps[3], 1.0 / 128);
    EXPECT_DOUBLE_EQ(c.ratio_D, 1.25);
    EXPECT_DOUBLE_EQ(c.p[2], -0.02);
    EXPECT_DOUBLE_EQ(c.g[1], 0.2);
    EXPECT_DOUBLE_EQ(c.single_eps, 1.0 / 64);
    EXPECT_DOUBLE_EQ(c.tol, 1e-5);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.n_test, 8);
    EXPECT_EQ(c.threads, 2);
    EXPECT_EQ(c.pi2, Pi2Strategy::Zero);
    EXPECT_DOUBLE_EQ(c.background, 0.5);
    EXPECT_EQ(c.out, "results");
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, ErrorsNameTheLine) {
    auto fails = [](const std::string& text, const std::string& needle) {
        std::istringstream in(text);
        try {
            parse_config(in);
        } catch (const ConfigError& e) {
            return std::string(e.what()).find(needle) != std::string::npos;
        }
        return false;
    };
    EXPECT_TRUE(fails("[sweep]\nfoo = 1\n", "line 2"));
    EXPECT_TRUE(fails("[nowhere]\n", "unknown section"));
    EXPECT_TRUE(fails("eps = 1\n", "outside of a section"));
    EXPECT_TRUE(fails("[sweep]\neps 1\n", "key = value"));
    EXPECT_TRUE(fails("[sweep]\neps = 0.1,,0.05\n", "empty entry"));
    EXPECT_TRUE(fails("[numerics]\ntol = abc\n", "cannot parse"));
    EXPECT_TRUE(fails("[point]\np = 1, 2\n", "line 2"));
    EXPECT_TRUE(fails("[numerics]\npi2 = harmonic\n", "line 2"));
    EXPECT_TRUE(fails("[sweep\n", "unterminated"));
}

TEST(Config, ValidationRejectsBadSweeps) {
    SweepConfig c;
    EXPECT_NO_THROW(c.validate());
    c.ratio_D = 3.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SweepConfig{};
    c.eps = {0.1, 0.05, 0.06, 0.01};
    EXPECT_THROW(c.validate(), ConfigError);
    c.eps = {0.1, 0.05, 0.02};
    EXPECT_THROW(c.validate(), ConfigError);
    c = SweepConfig{};
    c.tol = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SweepConfig{};
    c.p = {0.5, 0, 0, 0};
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Cli, ExitCodes) {
    fs::path dir = scratch("exit");
    std::string text;
    EXPECT_EQ(run({"--out", dir.string(), "charge"}, &text), 0);
    EXPECT_NE(text.find("charge 1.00 +- 0.01"), std::string::npos) << text;
    EXPECT_EQ(run({"--out", dir.string(), "energy"}, &text), 0);
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"verify-lemma", "9.9"}), 2);
    EXPECT_EQ(run({"--ratio-D", "3", "charge"}), 2);
    EXPECT_EQ(run({"--eps-list", "0.1,0.2,0.05,0.01", "charge"}), 2);
    EXPECT_EQ(run({"--config", (dir / "missing.cfg").string(), "charge"}), 2);
    EXPECT_EQ(run({"--tol", "1e-18", "charge"}, &text), 3);
    EXPECT_NE(text.find("numerical error"), std::string::npos);
    // the extended-basis diagonal of the first four indices changes sign on this sweep
    EXPECT_EQ(run({"--eps-list", kShortSweep, "--out", dir.string(), "verify-lemma", "5.9"}), 1);
}

TEST(Cli, ReportsAreByteIdenticalOnRepeat) {
    fs::path a = scratch("rep_a"), b = scratch("rep_b");
    ASSERT_EQ(run({"--eps-list", kShortSweep, "--out", a.string(), "verify-lemma", "5.7"}), 0);
    ASSERT_EQ(run({"--eps-list", kShortSweep, "--out", b.string(), "verify-lemma", "5.7"}), 0);
    std::string ca = slurp(a / "report_5.7.csv"), cb = slurp(b / "report_5.7.csv");
    EXPECT_EQ(ca, cb);
    std::vector<std::string> L = lines(ca);
    ASSERT_FALSE(L.empty());
    EXPECT_EQ(L[0], "lemma,quantity,eps,value,predicted_exponent,slope,residual,verdict");
    // 8 quantities per eps
    EXPECT_EQ(L.size(), 1u + 8u * 4u);
    for (std::size_t i = 1; i < L.size(); ++i) {
        EXPECT_EQ(L[i].rfind("5.7,", 0), 0u);
        EXPECT_EQ(std::count(L[i].begin(), L[i].end(), ','), 7);
    }
    std::string svg = slurp(a / "report_5.7.svg");
    EXPECT_NE(svg.find("width=\"1000\" height=\"700\""), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Cli, ThreadCountDoesNotChangeResults) {
    fs::path a = scratch("thr_a"), b = scratch("thr_b");
    ASSERT_EQ(run({"--eps-list", kShortSweep, "--out", a.string(), "verify-lemma", "5.8"}), 0);
    ASSERT_EQ(run({"--eps-list", kShortSweep, "--threads", "2", "--out", b.string(), "verify-lemma", "5.8"}), 0);
    EXPECT_EQ(slurp(a / "report_5.8.csv"), slurp(b / "report_5.8.csv"));
}

TEST(Cli, BuildBasisWritesCoefficientTable) {
    fs::path dir = scratch("basis");
    ASSERT_EQ(run({"--eps-list", kShortSweep, "--out", dir.string(), "build-basis"}), 0);
    std::vector<std::string> L = lines(slurp(dir / "basis.csv"));
    ASSERT_FALSE(L.empty());
    EXPECT_EQ(L[0], "eps,product,kind,i,j,value");
    // per eps and product: 36 coefficients, residual, condition; plus 16 norms
    EXPECT_EQ(L.size(), 1u + 4u * (2u * 38u + 16u));
}

TEST(Cli, DumpFieldLayout) {
    fs::path dir = scratch("dump");
    for (std::string f : {"glued", "extended", "difference"}) {
        ASSERT_EQ(run({"--out", dir.string(), "dump-field", "--field", f, "--grid", "3"}), 0) << f;
        std::vector<std::string> L = lines(slurp(dir / "field.csv"));
        EXPECT_EQ(L[0], "x0,x1,x2,x3,component-index,e1,e2,e3");
        // 81 grid points, 4 components each; the difference skips the centre p = 0
        EXPECT_EQ(L.size(), 1u + (f == "difference" ? 80u : 81u) * 4u) << f;
    }
    EXPECT_EQ(run({"--out", dir.string(), "dump-field", "--field", "nonsense"}), 2);
    EXPECT_EQ(run({"--out", dir.string(), "dump-field", "--grid", "0"}), 2);
}

TEST(Emission, EmptyReportIsHeaderOnly) {
    std::ostringstream os;
    write_report_csv(os, {});
    EXPECT_EQ(os.str(), "lemma,quantity,eps,value,predicted_exponent,slope,residual,verdict\n");
    EstimateReport R;
    R.lemma = "x";
    std::ostringstream svg;
    write_report_svg(svg, R);
    EXPECT_NE(svg.str().find("</svg>"), std::string::npos);
}

TEST(Orchestration, ParallelForRethrows) {
    std::vector<int> hit(10, 0);
    parallel_for(10, 3, [&](int i) { hit[i] = 1; });
    for (int h : hit) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3,
                              [](int i) {
                                  if (i == 7) throw NumericalError("boom");
                              }),
                 NumericalError);
}
