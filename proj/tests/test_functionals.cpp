#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "ymlab/functionals.hpp"

using namespace ymlab;

namespace {

constexpr double kPi = std::numbers::pi;

ParamQ make_q(double eps, GroupElement g = GroupElement(1, 0.2, 0, -0.1)) {
    return ParamQ::make({0.05, 0, -0.02, 0}, g, std::sqrt(eps), eps);
}

// smooth connection on the unit ball with nonzero curvature and brackets
FormField smooth_connection() {
    return make_field(1, Domain::r4(), [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        using std::sin;
        OneForm<T> a{};
        for (int mu = 0; mu < 4; ++mu)
            for (int k = 0; k < 3; ++k) a[mu].c[k] = 0.3 * sin(1.0 * (mu + 1) * x[(mu + k) % 4] + 0.5 * k) + 0.1 * x[k];
        return from_one_form(a);
    });
}

ChartedField test_direction(int which) {
    TestField t;
    t.scale = 0.6;
    t.center = {0.1 * which, -0.05, 0.0, 0.1};
    for (int mu = 0; mu < 4; ++mu)
        for (int k = 0; k < 3; ++k) t.V[mu][k] = std::cos(1.7 * mu + 0.9 * k + which);
    return {[t](const Point4& x, Chart) { return t.outer(seeded_s4(x)); }};
}

ChartedField combination(double s, const ChartedField& a, double t, const ChartedField& b) {
    return {[=](const Point4& x, Chart c) { return add(mul(s, a.jet(x, c)), mul(t, b.jet(x, c))); }};
}

Quantity quantity(Verdict v, double exponent, std::vector<double> values, double lo = 0, double hi = 0) {
    Quantity q;
    q.verdict = v;
    q.exponent = exponent;
    q.lo = lo;
    q.hi = hi;
    double e = 1.0 / 16;
    for (double val : values) {
        q.add(e, val);
        e /= 2;
    }
    q.evaluate();
    return q;
}

}  // namespace

TEST(Functionals, ZeroConnection) {
    QuadratureRule R = unit_ball_rule({0, 0, 0, 0}, 0.1, 1e-4);
    EXPECT_EQ(ym_eps(ConnectionJet::zero(0.1), R), 0.0);
    EXPECT_EQ(charge(ConnectionJet::zero(0.1), R).value, 0.0);
}

TEST(Functionals, ExtensionEnergyIsTopological) {
    for (double eps : {1.0 / 16, 1.0 / 64, 1.0 / 256}) {
        ParamQ q = make_q(eps);
        QuadratureRule R = analysis_rule(q, 1e-4);
        ChartedConnection At = extended_connection(q);
        double e = eps * eps * ym_eps(At, R);
        EXPECT_NEAR(e, 8 * kPi * kPi, 1e-6 * 8 * kPi * kPi) << eps;
        ChargeResult c = charge(At, R);
        EXPECT_NEAR(c.value, 1.0, 1e-6) << eps;
        EXPECT_LT(c.tail_fraction, 1e-3);
    }
}

TEST(Functionals, GluedChargeAndEnergyBound) {
    for (double eps : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        ParamQ q = make_q(eps);
        QuadratureRule R = analysis_rule(q, 1e-4);
        ChartedConnection A = glued_connection(q, BackgroundConnection::standard(), Pi2Strategy::Regularized);
        double c = charge(A, R).value;
        EXPECT_NEAR(c, 1.0, 1e-2) << eps;
        // |F|^2 >= <F,*F> pointwise, so eps^2 YM >= 8 pi^2 |charge|
        EXPECT_GE(eps * eps * ym_eps(A, R), 8 * kPi * kPi * std::abs(c) * (1 - 1e-6)) << eps;
    }
}

TEST(Functionals, ConstantGaugeInvariance) {
    const double eps = 1.0 / 64;
    QuadratureRule R = analysis_rule(make_q(eps), 1e-4);
    double ref_ym = 0, ref_c = 0;
    bool first = true;
    for (GroupElement g : {GroupElement(), GroupElement(1, 0.2, 0, -0.1), GroupElement(0.1, -0.7, 0.4, 0.5)}) {
        ChartedConnection A = glued_connection(make_q(eps, g), BackgroundConnection::none(), Pi2Strategy::Regularized);
        double y = ym_eps(A, R), c = charge(A, R).value;
        if (first) {
            ref_ym = y;
            ref_c = c;
            first = false;
        }
        EXPECT_NEAR(y, ref_ym, 1e-10 * ref_ym);
        EXPECT_NEAR(c, ref_c, 1e-10);
    }
    // -g names the same connection
    GroupElement g(0.1, -0.7, 0.4, 0.5);
    ChartedConnection A = glued_connection(make_q(eps, g), BackgroundConnection::standard(), Pi2Strategy::Regularized);
    ChartedConnection B = glued_connection(make_q(eps, -g), BackgroundConnection::standard(), Pi2Strategy::Regularized);
    EXPECT_NEAR(ym_eps(A, R), ym_eps(B, R), 1e-12 * ym_eps(A, R));
}

TEST(Functionals, GradientIsDerivativeOfEnergy) {
    QuadratureRule R = unit_ball_rule({0, 0, 0, 0}, 0.2, 1e-4);
    for (double eps : {1.0, 0.3}) {
        ConnectionJet A = ConnectionJet::single(smooth_connection(), eps);
        ChartedField a = test_direction(1);
        // ym(A + t a) is a quartic in t, so the 5-point stencil is exact up to rounding
        auto f = [&](double t) { return ym_eps(A.plus(t, a), R); };
        double g = grad_pairing(A, a, R);
        EXPECT_NEAR(g, oracle::d1(f, 0.0, 0.1), 1e-9 * (1 + std::abs(g)));
        double h = hessian_form(A, a, a, R);
        EXPECT_NEAR(h, oracle::d2(f, 0.0, 0.1), 1e-8 * (1 + std::abs(h)));
    }
    // linear in the direction; vanishes at the flat connection
    ConnectionJet A = ConnectionJet::single(smooth_connection(), 0.5);
    ChartedField a = test_direction(1), b = test_direction(2);
    double lin = grad_pairing(A, combination(2.0, a, -3.0, b), R);
    EXPECT_NEAR(lin, 2.0 * grad_pairing(A, a, R) - 3.0 * grad_pairing(A, b, R), 1e-10 * (1 + std::abs(lin)));
    EXPECT_EQ(grad_pairing(ConnectionJet::zero(0.5), a, R), 0.0);
}

TEST(Functionals, HessianIsSymmetricBilinear) {
    QuadratureRule R = unit_ball_rule({0, 0, 0, 0}, 0.2, 1e-4);
    ConnectionJet A = ConnectionJet::single(smooth_connection(), 0.5);
    ChartedField a = test_direction(1), b = test_direction(2), c = test_direction(3);
    double ab = hessian_form(A, a, b, R), ba = hessian_form(A, b, a, R);
    EXPECT_NEAR(ab, ba, 1e-10 * (1 + std::abs(ab)));
    double lhs = hessian_form(A, combination(1.5, a, 0.5, c), b, R);
    double rhs = 1.5 * ab + 0.5 * hessian_form(A, c, b, R);
    EXPECT_NEAR(lhs, rhs, 1e-10 * (1 + std::abs(lhs)));
    // at the trivial connection only the derivative term remains
    ConnectionJet Z = ConnectionJet::zero(0.5);
    double d = 2.0 * integrate_nodes(R, false, [&](const Point4& x, Chart ch) {
        Jet1 aj = a.jet(x, ch);
        Two da = cov_d(OneForm<double>{}, aj, 0.5);
        return dot2(da, da);
    });
    EXPECT_NEAR(hessian_form(Z, a, a, R), d, 1e-12 * d);
}

TEST(Functionals, NonFiniteDensityNamesTheNode) {
    QuadratureRule R = unit_ball_rule({0, 0, 0, 0}, 0.2, 1e-4);
    try {
        integrate_nodes(R, false, [](const Point4&, Chart) { return std::nan(""); });
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
    }
}

TEST(TestFields, DeterministicAndLocalised) {
    ParamQ q = make_q(1.0 / 64);
    auto a = make_test_fields(7, 12, q), b = make_test_fields(7, 12, q), c = make_test_fields(8, 12, q);
    ASSERT_EQ(a.size(), 12u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].center, b[i].center);
        EXPECT_EQ(a[i].V, b[i].V);
        double off = norm4(sub4(a[i].center, q.p));
        EXPECT_LE(off, a[i].scale < 1 ? 1.5 * a[i].scale : 0.5);
    }
    EXPECT_NE(a[0].center, c[0].center);
    EXPECT_DOUBLE_EQ(a[0].scale, 0.25 * q.lambda);
    EXPECT_DOUBLE_EQ(a[1].scale, q.lambda);
    EXPECT_DOUBLE_EQ(a[2].scale, 1.0);
    // vanishes outside the unit ball
    Jet1 o = a[2].outer(seeded_s4({0.9, 0.5, 0, 0}));
    EXPECT_EQ(o[0].c[0].v, 0.0);
}

TEST(HessianDifference, VanishesWhenConnectionsCoincide) {
    const double eps = 1.0 / 64;
    Family f;
    f.q = make_q(eps);
    f.bg = BackgroundConnection::none();
    f.pi2 = Pi2Strategy::Identity;
    QuadratureRule R = analysis_rule(f.q, 1e-4);
    TangentAnalysis T = analyze_tangents(f, R);
    HessianDifferencePoint P = hessian_difference_point(T, R, make_test_fields(1, 3, f.q));
    for (int i = 0; i < kNumParams; ++i) {
        EXPECT_LT(P.hess_sup[i], 1e-9) << i;
        EXPECT_LT(P.codiff_sup[i], 1e-9) << i;
    }
    EXPECT_EQ(P.n_test, 3);
}

TEST(SlopeFit, RecoversPowerLaws) {
    std::vector<std::pair<double, double>> pts;
    for (double e : {0.1, 0.05, 0.025, 0.0125}) pts.push_back({e, 3.0 * std::pow(e, -1.5)});
    SlopeFit f = fit_slope(pts);
    EXPECT_NEAR(f.slope, -1.5, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
    EXPECT_LT(f.residual, 1e-12);
    EXPECT_THROW(fit_slope({{0.1, 1.0}, {0.05, 2.0}}), std::invalid_argument);
    EXPECT_THROW(fit_slope({{0.1, 1.0}, {0.05, -2.0}, {0.02, 1.0}}), std::invalid_argument);
}

TEST(Verdicts, SlopeWindowAndAtLeast) {
    std::vector<double> v;
    for (double e = 1.0 / 16; v.size() < 5; e /= 2) v.push_back(std::pow(e, -1.5));
    EXPECT_TRUE(quantity(Verdict::SlopeWindow, -1.5, v, -1.6, -1.4).pass);
    EXPECT_FALSE(quantity(Verdict::SlopeWindow, -1.5, v, -1.4, -1.0).pass);
    std::vector<double> w;
    for (double e = 1.0 / 16; w.size() < 5; e /= 2) w.push_back(std::pow(e, 2.0));
    EXPECT_TRUE(quantity(Verdict::SlopeAtLeast, 1, w, 0.8).pass);
    EXPECT_FALSE(quantity(Verdict::SlopeAtLeast, 1, w, 2.5).pass);
    // a good slope with a poor fit fails
    std::vector<double> noisy = w;
    noisy[1] *= 5;
    EXPECT_FALSE(quantity(Verdict::SlopeAtLeast, 1, noisy, 0.8).pass);
    // sign change: no fit, no pass
    std::vector<double> sign = w;
    sign[0] = -sign[0];
    EXPECT_FALSE(quantity(Verdict::SlopeAtLeast, 1, sign, 0.8).pass);
}

TEST(Verdicts, BandBoundedAtMostInfo) {
    EXPECT_TRUE(quantity(Verdict::Band, 0, {1, 1.5, 2, 1.2}, 3).pass);
    EXPECT_FALSE(quantity(Verdict::Band, 0, {1, 1.5, 4, 1.2}, 3).pass);
    // growing ratio fails, decreasing ratio passes even with a wide spread
    EXPECT_FALSE(quantity(Verdict::Bounded, 0, {1, 4, 16, 64}, 10).pass);
    EXPECT_TRUE(quantity(Verdict::Bounded, 0, {64, 16, 4, 1}, 10).pass);
    EXPECT_TRUE(quantity(Verdict::AtMost, 0, {1e-9, 1e-10}, 0, 1e-8).pass);
    EXPECT_FALSE(quantity(Verdict::AtMost, 0, {1e-9, 1e-7}, 0, 1e-8).pass);
    EXPECT_TRUE(quantity(Verdict::Info, 0, {-1, 5}).pass);
}
