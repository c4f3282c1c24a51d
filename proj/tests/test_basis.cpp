#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "ymlab/basis.hpp"

using namespace ymlab;

namespace {

constexpr double kPi = std::numbers::pi;

Mat8 random_spd(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    Mat8 M;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) M(i, j) = N(rng);
    return M * M.transpose() + 0.1 * Mat8::Identity();
}

// a_0 = c0 e1 + x1 e2 (dx^0 component), everything else zero
FormField probe_field(double c0, double lin) {
    return make_field(1, Domain::r4(), [c0, lin](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        OneForm<T> a{};
        a[0].c[0] = T(c0);
        a[0].c[1] = lin * x[1];
        return from_one_form(a);
    });
}

FormField constant_connection(int comp) {
    return make_field(1, Domain::r4(), [comp](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        OneForm<T> a{};
        a[0].c[comp] = T(1.0);
        return from_one_form(a);
    });
}

Family sample_family(Pi2Strategy s = Pi2Strategy::Regularized, BackgroundConnection bg = BackgroundConnection::standard()) {
    const double eps = 1.0 / 64;
    Family f;
    f.q = ParamQ::make({0.05, 0, -0.02, 0}, GroupElement(1, 0.2, 0, -0.1), std::sqrt(eps), eps);
    f.bg = bg;
    f.pi2 = s;
    return f;
}

}  // namespace

TEST(GramSchmidt, OrthonormalisesAndMatchesRecursion) {
    for (unsigned seed : {1u, 2u, 3u}) {
        Mat8 G = random_spd(seed);
        GramBasis B = gram_schmidt(G, Product::Ball);
        EXPECT_LT(B.gram_residual(), 1e-12);
        // triangular: f_i only uses r_1..r_i
        for (int i = 0; i < 8; ++i)
            for (int k = i + 1; k < 8; ++k) EXPECT_EQ(B.C(i, k), 0.0);
        EXPECT_LT((B.q_by_recursion() - B.C).cwiseAbs().maxCoeff(), 1e-10 * B.C.cwiseAbs().maxCoeff());
        for (int i = 0; i < 8; ++i) EXPECT_GT(B.table(i, i), 0.0);
    }
}

TEST(GramSchmidt, RejectsDependentAndNullFields) {
    Mat8 G = random_spd(4);
    Mat8 D = G;
    D.row(5) = G.row(2);
    D.col(5) = G.col(2);
    D(5, 5) = G(2, 2);
    EXPECT_THROW(gram_schmidt(D, Product::Ball), NumericalError);
    Mat8 Z = G;
    Z.row(3).setZero();
    Z.col(3).setZero();
    EXPECT_THROW(gram_schmidt(Z, Product::Ball), NumericalError);
}

TEST(BallProduct, PolynomialFieldClosedForm) {
    QuadratureRule R = unit_ball_rule({0, 0, 0, 0}, 0.1, 1e-4);
    // |e1|^2 = |e2|^2 = 1/2; int_B 1 = pi^2/2, int_B x1^2 = pi^2/12
    FormField a = probe_field(1.0, 1.0), zero = make_field(1, Domain::r4(), [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        return from_one_form(OneForm<T>{});
    });
    double n2 = inner_ball(a, a, zero, 0.1, R);
    double expect = 0.5 * kPi * kPi / 2 + 0.5 * kPi * kPi / 12 + 0.5 * kPi * kPi / 2;
    EXPECT_NEAR(n2, expect, 1e-6 * expect);
}

TEST(BallProduct, CovariantTermUsesEpsBracket) {
    QuadratureRule R = unit_ball_rule({0, 0, 0, 0}, 0.1, 1e-4);
    // a = e1 dx0, A = e2 dx0: nabla_0 a_0 = eps [e2, e1] = -eps e3
    FormField a = probe_field(1.0, 0.0), A = constant_connection(1);
    for (double eps : {1.0, 0.25}) {
        double n2 = inner_ball(a, a, A, eps, R);
        double expect = 0.5 * (1 + eps * eps) * kPi * kPi / 2;
        EXPECT_NEAR(n2, expect, 1e-10 * expect);
    }
    // symmetric and bilinear
    FormField b = probe_field(0.3, -2.0);
    EXPECT_NEAR(inner_ball(a, b, A, 0.5, R), inner_ball(b, a, A, 0.5, R), 1e-12);
}

TEST(WeightedProduct, NonDecayingFieldIsRejected) {
    QuadratureRule R = weighted_r4_rule({0, 0, 0, 0}, 0.1, 1e-4);
    ChartedField a = ChartedField::single(probe_field(1.0, 0.0));
    EXPECT_THROW(inner_weighted(a, a, ConnectionView::trivial(), 0.1, R), NumericalError);
}

class TangentBasis : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fam_ = new Family(sample_family());
        T_ = new TangentAnalysis(analyze_tangents(*fam_, analysis_rule(fam_->q, 1e-4)));
    }
    static void TearDownTestSuite() {
        delete T_;
        delete fam_;
    }
    static Family* fam_;
    static TangentAnalysis* T_;
};
Family* TangentBasis::fam_ = nullptr;
TangentAnalysis* TangentBasis::T_ = nullptr;

TEST_F(TangentBasis, BallGramAgreesWithPairwiseProduct) {
    const Family& f = *fam_;
    ConnectionView A = ConnectionView::of(f.glued());
    QuadratureRule R = unit_ball_rule(f.q.p, f.q.lambda, 1e-4);
    for (int k : {0, 4, 7}) {
        double v = inner_ball(raw_field(f, k), raw_field(f, k), A, f.q.eps, R);
        EXPECT_NEAR(v, T_->G_ball(k, k), 1e-6 * T_->G_ball(k, k)) << param_name(k);
    }
    double v = inner_ball(raw_field(f, 0), raw_field(f, 7), A, f.q.eps, R);
    EXPECT_NEAR(v, T_->G_ball(0, 7), 1e-6 * std::sqrt(T_->G_ball(0, 0) * T_->G_ball(7, 7)));
}

TEST_F(TangentBasis, BasisIsOrthonormalUnderTheBallProduct) {
    const Family& f = *fam_;
    EXPECT_LT(T_->ball.gram_residual(), 1e-10);
    EXPECT_LT(T_->weighted.gram_residual(), 1e-10);
    ConnectionView A = ConnectionView::of(f.glued());
    QuadratureRule R = unit_ball_rule(f.q.p, f.q.lambda, 1e-4);
    for (auto [i, j] : {std::pair{0, 0}, {0, 4}, {3, 7}, {7, 7}}) {
        double v = inner_ball(basis_field(f, T_->ball, i), basis_field(f, T_->ball, j), A, f.q.eps, R);
        EXPECT_NEAR(v, i == j ? 1.0 : 0.0, 1e-6);
    }
}

TEST_F(TangentBasis, ProjectionIsOrthogonalToTheBasis) {
    const Family& f = *fam_;
    QuadratureRule R = unit_ball_rule(f.q.p, f.q.lambda, 1e-4);
    // a field outside the span: the second p1-derivative
    auto v = [&f](const Point4& x, Chart c) { return d2A_dp1p1(f.q, f.bg, f.pi2, x, c); };
    Projection P = project_perp_stats(v, f, T_->ball, R);
    EXPECT_LE(P.max_residual_pairing, 1e-8 * P.norm_v);
    EXPECT_GT(P.norm_perp, 0.0);
    EXPECT_NEAR(P.norm_perp * P.norm_perp + P.coeff.squaredNorm(), P.norm_v * P.norm_v, 1e-8 * P.norm_v * P.norm_v);
    // a basis element projects to zero
    Projection Q = project_perp_stats(basis_field(f, T_->ball, 2).jet, f, T_->ball, R);
    EXPECT_LT(Q.norm_perp, 1e-6);
    EXPECT_NEAR(Q.coeff(2), 1.0, 1e-8);
}

TEST(Tangents, IdenticalConnectionsHaveZeroDifference) {
    // with PI2 = I2 and no background the glued connection is the extension
    Family f = sample_family(Pi2Strategy::Identity, BackgroundConnection::none());
    TangentAnalysis T = analyze_tangents(f, analysis_rule(f.q, 1e-4));
    for (int i = 0; i < kNumParams; ++i) EXPECT_LT(T.difference_norm(i), 1e-10) << i;
}

TEST(Tangents, NormsAgreeAtThreeGroupPoints) {
    // a constant gauge rotation is an isometry of the ball product when the background is absent
    std::array<double, kNumParams> ref{};
    int n = 0;
    for (GroupElement g : {GroupElement(), GroupElement(1, 0.2, 0, -0.1), GroupElement(0.1, -0.7, 0.4, 0.5)}) {
        Family f = sample_family(Pi2Strategy::Regularized, BackgroundConnection::none());
        f.q.g = g;
        TangentAnalysis T = analyze_tangents(f, analysis_rule(f.q, 1e-4));
        for (int k = 0; k < kNumParams; ++k) {
            if (n == 0) ref[k] = T.raw_norm(k);
            EXPECT_NEAR(T.raw_norm(k), ref[k], 1e-9 * ref[k]) << param_name(k);
        }
        ++n;
    }
}
