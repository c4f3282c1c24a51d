#pragma once

// Sweep configuration, orchestration, CSV/SVG emission and the command line.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "basis.hpp"
#include "functionals.hpp"
#include "instanton.hpp"
#include "quadrature.hpp"
#include "report.hpp"

namespace ymlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- configuration

struct SweepConfig {
    std::vector<double> eps = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
    double ratio_D = 1.0;  // lambda^2 / eps
    Point4 p{};
    std::array<double, 4> g{1.0, 0.0, 0.0, 0.0};
    ParamConstants constants;
    double tol = 1e-4;
    unsigned long long seed = 20240607ULL;
    int n_test = 32;
    Pi2Strategy pi2 = Pi2Strategy::Regularized;
    double background = 1.0;  // amplitude of the standard background
    int threads = 1;
    std::string out = "out";
    double single_eps = 1.0 / 64;  // for charge, energy and dump-field

    void validate() const {
        if (!(constants.D1 < ratio_D && ratio_D < constants.D2))
            throw ConfigError("ratio_D = " + fmt(ratio_D) + " must lie strictly inside (D1, D2) = (" +
                              fmt(constants.D1) + ", " + fmt(constants.D2) + ")");
        if (eps.size() < 4) throw ConfigError("eps list needs at least 4 values for slope fits");
        for (std::size_t i = 0; i < eps.size(); ++i) {
            if (!(eps[i] > 0.0)) throw ConfigError("eps values must be positive");
            if (i > 0 && !(eps[i] < eps[i - 1])) throw ConfigError("eps list must be strictly decreasing");
        }
        if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("tol must lie in (0, 1)");
        if (n_test < 1) throw ConfigError("n_test must be at least 1");
        if (threads < 1) throw ConfigError("threads must be at least 1");
        if (!(single_eps > 0.0)) throw ConfigError("eps must be positive");
        double gn = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
        if (!(gn > 0.0)) throw ConfigError("g must be a nonzero quaternion");
        try {
            for (double e : eps) point(e);
            point(single_eps);
        } catch (const ParameterSpaceError& ex) {
            throw ConfigError(std::string("parameter point outside the parameter space: ") + ex.what());
        }
    }

    ParamQ point(double e) const {
        return ParamQ::make(p, GroupElement(g[0], g[1], g[2], g[3]), std::sqrt(ratio_D * e), e, constants);
    }

    Family family(double e) const {
        Family f{point(e)};
        f.bg = BackgroundConnection::standard(background);
        f.pi2 = pi2;
        return f;
    }

    static std::string fmt(double v) {
        char b[64];
        std::snprintf(b, sizeof b, "%.6g", v);
        return b;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// a number, or 2^k
inline double parse_number(const std::string& raw, const std::string& what) {
    std::string s = trim(raw);
    try {
        if (s.rfind("2^", 0) == 0) {
            std::size_t used = 0;
            int k = std::stoi(s.substr(2), &used);
            if (used != s.size() - 2) throw std::invalid_argument(s);
            return std::ldexp(1.0, k);
        }
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": cannot parse number '" + s + "'");
    }
}

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> r;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (trim(tok).empty()) throw ConfigError(what + ": empty entry in list");
        r.push_back(parse_number(tok, what));
    }
    if (r.empty()) throw ConfigError(what + ": empty list");
    return r;
}

template <std::size_t N>
std::array<double, N> parse_fixed(const std::string& s, const std::string& what) {
    std::vector<double> v = parse_list(s, what);
    if (v.size() != N) throw ConfigError(what + ": expected " + std::to_string(N) + " values");
    std::array<double, N> r;
    std::copy(v.begin(), v.end(), r.begin());
    return r;
}

inline long long parse_int(const std::string& raw, const std::string& what) {
    std::string s = trim(raw);
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": cannot parse integer '" + s + "'");
    }
}

}  // namespace detail

// Applies one section.key = value setting.
inline void apply_setting(SweepConfig& c, const std::string& section, const std::string& key, const std::string& value) {
    using namespace detail;
    const std::string where = section.empty() ? key : section + "." + key;
    auto is = [&](const char* s, const char* k) { return section == s && key == k; };
    if (is("sweep", "eps")) c.eps = parse_list(value, where);
    else if (is("sweep", "ratio_D")) c.ratio_D = parse_number(value, where);
    else if (is("point", "p")) c.p = parse_fixed<4>(value, where);
    else if (is("point", "g")) c.g = parse_fixed<4>(value, where);
    else if (is("point", "eps")) c.single_eps = parse_number(value, where);
    else if (is("constants", "d0")) c.constants.d0 = parse_number(value, where);
    else if (is("constants", "lambda0")) c.constants.lambda0 = parse_number(value, where);
    else if (is("constants", "D1")) c.constants.D1 = parse_number(value, where);
    else if (is("constants", "D2")) c.constants.D2 = parse_number(value, where);
    else if (is("numerics", "tol")) c.tol = parse_number(value, where);
    else if (is("numerics", "seed")) {
        long long s = parse_int(value, where);
        if (s < 0) throw ConfigError(where + ": seed must be nonnegative");
        c.seed = static_cast<unsigned long long>(s);
    } else if (is("numerics", "n_test")) c.n_test = int(parse_int(value, where));
    else if (is("numerics", "threads")) c.threads = int(parse_int(value, where));
    else if (is("numerics", "pi2")) {
        try {
            c.pi2 = pi2_from_name(trim(value));
        } catch (const std::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
    } else if (is("numerics", "background")) c.background = parse_number(value, where);
    else if (is("output", "dir")) c.out = trim(value);
    else throw ConfigError("unknown setting '" + where + "'");
}

// Grammar: '#' starts a comment; '[name]' opens a section; 'key = value'
// sets a key of the current section. Lists are comma separated and numbers
// may be written 2^k.
inline SweepConfig parse_config(std::istream& in, SweepConfig c = {}) {
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string at = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(at + "unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"sweep", "point", "constants", "numerics", "output"};
            if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return section == k; }) ==
                std::end(known))
                throw ConfigError(at + "unknown section '" + section + "'");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(at + "expected key = value");
        if (section.empty()) throw ConfigError(at + "setting outside of a section");
        try {
            apply_setting(c, section, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(at + e.what());
        }
    }
    return c;
}

inline SweepConfig load_config(const std::string& path, SweepConfig c = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, c);
}

// ---- orchestration

// runs f(0..n-1) on a pool of workers; results are stored by index
template <class F>
void parallel_for(int n, int threads, F&& f) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i; (i = next++) < n;) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct SweepNeeds {
    bool hessian = false;
    bool derivative = false;
};

struct SweepResults {
    std::vector<TangentAnalysis> tangents;
    std::vector<HessianDifferencePoint> hessian;
    std::vector<BasisDerivativePoint> derivative;
};

inline SweepResults run_sweep(const SweepConfig& cfg, SweepNeeds needs) {
    cfg.validate();
    const int n = int(cfg.eps.size());
    SweepResults R;
    R.tangents.resize(n);
    if (needs.hessian) R.hessian.resize(n);
    if (needs.derivative) R.derivative.resize(n);
    parallel_for(n, cfg.threads, [&](int i) {
        Family fam = cfg.family(cfg.eps[i]);
        QuadratureRule rule = analysis_rule(fam.q, cfg.tol);
        R.tangents[i] = analyze_tangents(fam, rule);
        if (needs.hessian)
            R.hessian[i] = hessian_difference_point(R.tangents[i], rule, make_test_fields(cfg.seed, cfg.n_test, fam.q));
        if (needs.derivative)
            R.derivative[i] = basis_derivative_point(R.tangents[i], unit_ball_rule(fam.q.p, fam.q.lambda, cfg.tol));
    });
    return R;
}

inline const std::vector<std::string>& lemma_tags() {
    static const std::vector<std::string> t = {"5.7", "5.8", "5.9", "3.6", "3.7", "3.10"};
    return t;
}

inline SweepNeeds needs_for(const std::vector<std::string>& lemmas) {
    SweepNeeds n;
    for (const auto& l : lemmas) {
        if (l == "3.7") n.hessian = true;
        if (l == "3.10") n.derivative = true;
    }
    return n;
}

inline EstimateReport build_report(const std::string& lemma, const SweepResults& R, double tol) {
    if (lemma == "5.7") return tangent_norm_report(R.tangents, tol);
    if (lemma == "5.8") return basis_report(R.tangents, tol);
    if (lemma == "5.9") return extended_basis_report(R.tangents, tol);
    if (lemma == "3.6") return basis_difference_report(R.tangents, tol);
    if (lemma == "3.7") return hessian_difference_report(R.hessian, tol);
    if (lemma == "3.10") return basis_derivative_report(R.derivative, tol);
    throw ConfigError("unknown lemma '" + lemma + "'");
}

// ---- emission

inline const char* verdict_word(const Quantity& q) {
    if (q.verdict == Verdict::Info) return "INFO";
    return q.pass ? "PASS" : "FAIL";
}

inline std::string num(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.12g", v);
    return b;
}

inline void write_report_csv(std::ostream& os, const std::vector<EstimateReport>& reports) {
    os << "lemma,quantity,eps,value,predicted_exponent,slope,residual,verdict\n";
    for (const auto& R : reports)
        for (const auto& q : R.quantities)
            for (std::size_t i = 0; i < q.eps.size(); ++i)
                os << R.lemma << ',' << q.name << ',' << num(q.eps[i]) << ',' << num(q.values[i]) << ','
                   << num(q.exponent) << ',' << (q.fitted ? num(q.fit.slope) : "") << ','
                   << (q.fitted ? num(q.fit.residual) : "") << ',' << verdict_word(q) << '\n';
}

inline void write_report_table(std::ostream& os, const EstimateReport& R) {
    char line[512];
    std::snprintf(line, sizeof line, "Lemma %s  (quadrature tol %.3g)\n", R.lemma.c_str(), R.tol);
    os << line;
    std::snprintf(line, sizeof line, "  %-28s %8s %9s %9s  %-7s %s\n", "quantity", "expected", "slope", "residual",
                  "verdict", "detail");
    os << line;
    for (const auto& q : R.quantities) {
        std::string slope = q.fitted ? num(std::round(q.fit.slope * 1e4) / 1e4) : "-";
        std::string res = q.fitted ? num(std::round(q.fit.residual * 1e4) / 1e4) : "-";
        std::snprintf(line, sizeof line, "  %-28s %8.3g %9s %9s  %-7s %s\n", q.name.c_str(), q.exponent, slope.c_str(),
                      res.c_str(), verdict_word(q), q.note.c_str());
        os << line;
    }
}

inline void write_basis_csv(std::ostream& os, const std::vector<TangentAnalysis>& sweep) {
    os << "eps,product,kind,i,j,value\n";
    for (const auto& T : sweep) {
        const std::string e = num(T.fam.q.eps);
        for (const GramBasis* B : {&T.ball, &T.weighted}) {
            const char* pn = product_name(B->product);
            for (int i = 0; i < kNumParams; ++i)
                for (int j = 0; j <= i; ++j)
                    os << e << ',' << pn << ",coefficient," << i + 1 << ',' << j + 1 << ',' << num(B->table(i, j)) << '\n';
            os << e << ',' << pn << ",gram_residual,,," << num(B->gram_residual()) << '\n';
            os << e << ',' << pn << ",condition,,," << num(B->condition) << '\n';
        }
        for (int k = 0; k < kNumParams; ++k)
            os << e << ",ball,raw_norm," << k + 1 << ",," << num(T.raw_norm(k)) << '\n';
        for (int k = 0; k < kNumParams; ++k)
            os << e << ",ball,difference_norm," << k + 1 << ",," << num(T.difference_norm(k)) << '\n';
    }
}

// 1000x700 log-log plot of every positive series with its fitted line
inline void write_report_svg(std::ostream& os, const EstimateReport& R) {
    const double W = 1000, H = 700, L = 90, Rm = 260, T = 50, B = 70;
    std::vector<const Quantity*> series;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& q : R.quantities) {
        if (!q.fitted) continue;
        series.push_back(&q);
        for (std::size_t i = 0; i < q.eps.size(); ++i) {
            x0 = std::min(x0, std::log10(q.eps[i]));
            x1 = std::max(x1, std::log10(q.eps[i]));
            y0 = std::min(y0, std::log10(q.values[i]));
            y1 = std::max(y1, std::log10(q.values[i]));
        }
    }
    if (series.empty()) x0 = -3, x1 = -1, y0 = -1, y1 = 1;
    if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
    if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
    double ylo = std::floor(y0), yhi = std::ceil(y1);
    auto px = [&](double lx) { return L + (lx - x0) / (x1 - x0) * (W - L - Rm); };
    auto py = [&](double ly) { return H - B - (ly - ylo) / (yhi - ylo) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    auto f = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.2f", v);
        return std::string(b);
    };
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" height=\"700\" viewBox=\"0 0 1000 700\">\n";
    os << "<rect width=\"1000\" height=\"700\" fill=\"white\"/>\n";
    os << "<text x=\"" << f(L) << "\" y=\"30\" font-family=\"sans-serif\" font-size=\"18\">Lemma " << R.lemma
       << ": log-log scaling in eps</text>\n";
    os << "<rect x=\"" << f(L) << "\" y=\"" << f(T) << "\" width=\"" << f(W - L - Rm) << "\" height=\"" << f(H - T - B)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    // x ticks at the sweep points of the first series, y ticks at decades
    if (!series.empty())
        for (double e : series.front()->eps) {
            double X = px(std::log10(e));
            os << "<line x1=\"" << f(X) << "\" y1=\"" << f(H - B) << "\" x2=\"" << f(X) << "\" y2=\"" << f(H - B + 6)
               << "\" stroke=\"black\"/>\n";
            os << "<text x=\"" << f(X) << "\" y=\"" << f(H - B + 22) << "\" font-family=\"sans-serif\" font-size=\"12\" "
               << "text-anchor=\"middle\">" << num(e) << "</text>\n";
        }
    int step = std::max(1, int((yhi - ylo) / 10));
    for (double d = ylo; d <= yhi + 1e-9; d += step) {
        double Y = py(d);
        os << "<line x1=\"" << f(L - 6) << "\" y1=\"" << f(Y) << "\" x2=\"" << f(W - Rm) << "\" y2=\"" << f(Y)
           << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << f(L - 10) << "\" y=\"" << f(Y + 4) << "\" font-family=\"sans-serif\" font-size=\"12\" "
           << "text-anchor=\"end\">1e" << int(d) << "</text>\n";
    }
    os << "<text x=\"" << f((L + W - Rm) / 2) << "\" y=\"" << f(H - 20)
       << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">eps</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const Quantity& q = *series[s];
        const char* col = colors[s % 10];
        for (std::size_t i = 0; i < q.eps.size(); ++i)
            os << "<circle cx=\"" << f(px(std::log10(q.eps[i]))) << "\" cy=\"" << f(py(std::log10(q.values[i])))
               << "\" r=\"4\" fill=\"" << col << "\"/>\n";
        // fitted line, natural-log fit drawn in log10 coordinates
        double a = *std::min_element(q.eps.begin(), q.eps.end()), b = *std::max_element(q.eps.begin(), q.eps.end());
        auto fy = [&](double e) { return (q.fit.intercept + q.fit.slope * std::log(e)) / std::log(10.0); };
        os << "<line x1=\"" << f(px(std::log10(a))) << "\" y1=\"" << f(py(fy(a))) << "\" x2=\"" << f(px(std::log10(b)))
           << "\" y2=\"" << f(py(fy(b))) << "\" stroke=\"" << col << "\" stroke-width=\"1.5\"/>\n";
        double ly = T + 16 + 18 * double(s);
        os << "<rect x=\"" << f(W - Rm + 15) << "\" y=\"" << f(ly - 9) << "\" width=\"10\" height=\"10\" fill=\"" << col
           << "\"/>\n";
        os << "<text x=\"" << f(W - Rm + 30) << "\" y=\"" << f(ly) << "\" font-family=\"sans-serif\" font-size=\"11\">"
           << q.name << " (" << f(q.fit.slope) << ")</text>\n";
    }
    os << "</svg>\n";
}

inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// <out>/report_<lemma>.csv and .svg for each report
inline void emit_outputs(const std::vector<EstimateReport>& reports, const SweepConfig& cfg) {
    namespace fs = std::filesystem;
    fs::path dir(cfg.out);
    for (const auto& R : reports) {
        write_file(dir / ("report_" + R.lemma + ".csv"), [&](std::ostream& os) { write_report_csv(os, {R}); });
        write_file(dir / ("report_" + R.lemma + ".svg"), [&](std::ostream& os) { write_report_svg(os, R); });
    }
}

// ---- field dump

// grid of n^4 points on [-1,1]^4 (n = 1 gives p)
inline std::vector<Point4> dump_grid(const Point4& p, int n) {
    std::vector<Point4> pts;
    if (n <= 1) return {p};
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    auto t = [n](int k) { return -1.0 + 2.0 * k / (n - 1); };
                    pts.push_back({t(a), t(b), t(c), t(d)});
                }
    return pts;
}

// x0..x3, component-index, e1..e3 rows; the chart follows the glued split,
// and points where the chosen field is singular are skipped
inline void dump_field(std::ostream& os, const std::string& which, const SweepConfig& cfg, int n) {
    Family fam = cfg.family(cfg.single_eps);
    ChartedConnection A = which == "extended" ? fam.extended() : fam.glued();
    FormField inner = A.inner_field(), outer = A.outer_field();
    FormField diff = difference_b(fam.q, fam.bg, fam.pi2);
    if (which != "glued" && which != "extended" && which != "difference")
        throw ConfigError("dump-field: unknown field '" + which + "' (glued, extended, difference)");
    os << "x0,x1,x2,x3,component-index,e1,e2,e3\n";
    for (const Point4& x : dump_grid(fam.q.p, n)) {
        if (norm4(sub4(x, fam.q.p)) == 0.0 && which == "difference") continue;
        FormValue<double> v = which == "difference" ? diff(x) : (A.in_inner(x) ? inner(x) : outer(x));
        for (int i = 0; i < v.size(); ++i) {
            const AlgElement& c = v.component(i);
            os << num(x[0]) << ',' << num(x[1]) << ',' << num(x[2]) << ',' << num(x[3]) << ',' << i << ','
               << num(c.c[0]) << ',' << num(c.c[1]) << ',' << num(c.c[2]) << '\n';
        }
    }
}

// ---- command line

enum ExitCode { kExitPass = 0, kExitVerdict = 1, kExitConfig = 2, kExitNumerical = 3 };

inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    CLI::App app{"Numerical checks for the glued instanton family", "ymlab_cli"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, eps_list, out_dir, field = "glued", lemma;
    std::optional<double> ratio_D, tol, eps_single;
    std::optional<unsigned long long> seed;
    std::optional<int> threads;
    int grid = 5;
    app.add_option("--config", config_path, "config file (key = value grammar with [sections])");
    app.add_option("--eps-list", eps_list, "comma separated, strictly decreasing eps values (2^-k allowed)");
    app.add_option("--ratio-D", ratio_D, "lambda^2 / eps");
    app.add_option("--tol", tol, "relative quadrature tolerance");
    app.add_option("--seed", seed, "test-field seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads for the sweep");
    app.add_option("--eps", eps_single, "eps for charge, energy and dump-field");

    auto* c_charge = app.add_subcommand("charge", "topological charge of the extension");
    auto* c_energy = app.add_subcommand("energy", "eps^2 YM_eps of the extension against 8 pi^2");
    auto* c_basis = app.add_subcommand("build-basis", "Gram-Schmidt bases over the sweep (basis.csv)");
    auto* c_scaling = app.add_subcommand("verify-scaling", "scaling reports for 5.7, 5.8, 5.9 and 3.6");
    auto* c_lemma = app.add_subcommand("verify-lemma", "one scaling report");
    c_lemma->add_option("lemma", lemma, "5.7 | 5.8 | 5.9 | 3.6 | 3.7 | 3.10")->required();
    auto* c_dump = app.add_subcommand("dump-field", "write a field to <out>/field.csv");
    c_dump->add_option("--field", field, "glued | extended | difference");
    c_dump->add_option("--grid", grid, "points per axis on [-1,1]^4");
    auto* c_all = app.add_subcommand("all", "every check and every output");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitConfig;
    }

    try {
        SweepConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path, cfg);
        if (!eps_list.empty()) cfg.eps = detail::parse_list(eps_list, "--eps-list");
        if (ratio_D) cfg.ratio_D = *ratio_D;
        if (tol) cfg.tol = *tol;
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (eps_single) cfg.single_eps = *eps_single;
        if (!out_dir.empty()) cfg.out = out_dir;
        cfg.validate();
        namespace fs = std::filesystem;

        auto run_charge = [&]() {
            ChartedConnection At = cfg.family(cfg.single_eps).extended();
            QuadratureRule rule = r4_rule(At.q.p, At.q.lambda, cfg.tol);
            ChargeResult c = charge(At, rule);
            char b[200];
            std::snprintf(b, sizeof b, "charge %.2f +- 0.01  (value %.8f, eps %.6g, tail fraction %.2e)\n", c.value,
                          c.value, cfg.single_eps, c.tail_fraction);
            out << b;
            return std::abs(c.value - 1.0) <= 0.01;
        };
        auto run_energy = [&]() {
            ChartedConnection At = cfg.family(cfg.single_eps).extended();
            QuadratureRule rule = r4_rule(At.q.p, At.q.lambda, cfg.tol);
            double e = cfg.single_eps * cfg.single_eps * ym_eps(At, rule);
            double target = 8.0 * std::numbers::pi * std::numbers::pi;
            char b[200];
            std::snprintf(b, sizeof b, "eps^2 YM_eps = %.8f, 8 pi^2 = %.8f, relative error %.2e\n", e, target,
                          std::abs(e / target - 1.0));
            out << b;
            return std::abs(e / target - 1.0) <= 0.01;
        };
        auto run_reports = [&](const std::vector<std::string>& lemmas, bool basis_csv) {
            SweepResults R = run_sweep(cfg, needs_for(lemmas));
            std::vector<EstimateReport> reps;
            for (const auto& l : lemmas) reps.push_back(build_report(l, R, cfg.tol));
            for (const auto& r : reps) {
                write_report_table(out, r);
                out << '\n';
            }
            emit_outputs(reps, cfg);
            if (basis_csv) write_file(fs::path(cfg.out) / "basis.csv", [&](std::ostream& os) { write_basis_csv(os, R.tangents); });
            if (lemmas.size() > 1)
                write_file(fs::path(cfg.out) / "reports.csv", [&](std::ostream& os) { write_report_csv(os, reps); });
            return std::all_of(reps.begin(), reps.end(), [](const EstimateReport& r) { return r.all_pass(); });
        };

        bool ok = true;
        if (c_charge->parsed()) ok = run_charge();
        else if (c_energy->parsed()) ok = run_energy();
        else if (c_basis->parsed()) {
            SweepResults R = run_sweep(cfg, {});
            write_file(fs::path(cfg.out) / "basis.csv", [&](std::ostream& os) { write_basis_csv(os, R.tangents); });
            for (const auto& T : R.tangents) {
                char b[200];
                std::snprintf(b, sizeof b, "eps %-10.6g ball residual %.2e  weighted residual %.2e  condition %.3g\n",
                              T.fam.q.eps, T.ball.gram_residual(), T.weighted.gram_residual(), T.ball.condition);
                out << b;
                ok = ok && T.ball.gram_residual() <= 1e-8 && T.weighted.gram_residual() <= 1e-8;
            }
        } else if (c_scaling->parsed()) ok = run_reports({"5.7", "5.8", "5.9", "3.6"}, false);
        else if (c_lemma->parsed()) {
            if (std::find(lemma_tags().begin(), lemma_tags().end(), lemma) == lemma_tags().end())
                throw ConfigError("unknown lemma '" + lemma + "' (5.7, 5.8, 5.9, 3.6, 3.7, 3.10)");
            ok = run_reports({lemma}, false);
        } else if (c_dump->parsed()) {
            if (grid < 1 || grid > 41) throw ConfigError("--grid must lie in [1, 41]");
            write_file(fs::path(cfg.out) / "field.csv", [&](std::ostream& os) { dump_field(os, field, cfg, grid); });
            out << "wrote " << (fs::path(cfg.out) / "field.csv").string() << '\n';
        } else if (c_all->parsed()) {
            bool a = run_charge();
            bool b = run_energy();
            bool c = run_reports(lemma_tags(), true);
            ok = a && b && c;
        }
        out << (ok ? "all verdicts pass\n" : "verdict failure\n");
        return ok ? kExitPass : kExitVerdict;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args, out, err);
}

}  // namespace ymlab
