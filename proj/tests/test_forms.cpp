#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ymlab/basis.hpp"
#include "ymlab/forms.hpp"
#include "ymlab/instanton.hpp"
#include "ymlab/quadrature.hpp"

using namespace ymlab;

namespace {

template <class T>
FormValue<T> random_form(std::mt19937_64& rng, int k) {
    std::normal_distribution<double> N;
    FormValue<T> f(k);
    for (unsigned m : mask::of_degree(k))
        for (int a = 0; a < 3; ++a) f.comp[m].c[a] = T(N(rng));
    return f;
}

double max_abs(const FormValue<double>& f) {
    double m = 0;
    for (unsigned I : mask::of_degree(f.degree))
        for (double v : f.comp[I].c) m = std::max(m, std::abs(v));
    return m;
}

// cubic polynomial k-form with fixed coefficients
FormField poly_form(int k, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    std::vector<std::array<double, 8>> coef;
    for (std::size_t i = 0; i < 16 * 3; ++i) {
        std::array<double, 8> c;
        for (double& v : c) v = N(rng);
        coef.push_back(c);
    }
    return make_field(k, Domain::r4(), [k, coef](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        FormValue<T> f(k);
        for (unsigned m : mask::of_degree(k))
            for (int a = 0; a < 3; ++a) {
                const auto& c = coef[m * 3 + a];
                f.comp[m].c[a] = c[0] + c[1] * x[0] + c[2] * x[1] * x[2] + c[3] * x[3] * x[3] * x[0] +
                                 c[4] * x[2] * x[2] * x[2] + c[5] * x[0] * x[1] * x[3] + c[6] * x[1] * x[1] +
                                 c[7] * x[2] * x[3];
            }
        return f;
    });
}

// compactly supported smooth k-form on the unit ball
FormField bump_form(int k, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    std::array<std::array<double, 3>, 16> V;
    for (auto& r : V)
        for (double& v : r) v = N(rng);
    return make_field(k, Domain::r4(), [k, V](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        FormValue<T> f(k);
        T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        if (val(r2) >= 1.0) return f;
        T m = 1.0 - r2;
        T prof = m * m * m * (1.0 + x[0] - 0.5 * x[2] * x[3]);
        for (unsigned I : mask::of_degree(k))
            for (int a = 0; a < 3; ++a) f.comp[I].c[a] = prof * V[I][a];
        return f;
    });
}

}  // namespace

TEST(Forms, MaskOrderingAndCounts) {
    EXPECT_EQ(mask::of_degree(0).size(), 1u);
    EXPECT_EQ(mask::of_degree(1).size(), 4u);
    EXPECT_EQ(mask::of_degree(2).size(), 6u);
    EXPECT_EQ(mask::of_degree(3).size(), 4u);
    EXPECT_EQ(mask::of_degree(4).size(), 1u);
    // lexicographic: 01,02,03,12,13,23
    std::vector<unsigned> two = {0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100};
    EXPECT_EQ(mask::of_degree(2), two);
}

TEST(Forms, HodgeOnTwoFormsByHand) {
    // *dx01 = dx23, *dx02 = -dx13, *dx03 = dx12 under dx0123 = vol
    FormValue<double> f(2);
    f.comp[0b0011] = basis_e(1);
    f.comp[0b0101] = basis_e(2);
    f.comp[0b1001] = basis_e(3);
    FormValue<double> s = hodge_star(f);
    EXPECT_EQ(s.comp[0b1100].c[0], 1.0);
    EXPECT_EQ(s.comp[0b1010].c[1], -1.0);
    EXPECT_EQ(s.comp[0b0110].c[2], 1.0);
}

TEST(Forms, StarStarSignRuleExact) {
    std::mt19937_64 rng(11);
    for (int k = 0; k <= 4; ++k) {
        FormValue<double> f = random_form<double>(rng, k);
        FormValue<double> ss = hodge_star(hodge_star(f));
        double sign = (k * (4 - k)) % 2 == 0 ? 1.0 : -1.0;
        for (unsigned m : mask::of_degree(k))
            for (int a = 0; a < 3; ++a) EXPECT_EQ(ss.comp[m].c[a], sign * f.comp[m].c[a]);
    }
}

TEST(Forms, InnerProductIsWedgeWithStar) {
    // <a,b> vol = sum_I a_I b_{I} with the trace metric, and * is an isometry
    std::mt19937_64 rng(12);
    for (int k = 0; k <= 4; ++k) {
        FormValue<double> a = random_form<double>(rng, k), b = random_form<double>(rng, k);
        double plain = 0;
        for (unsigned m : mask::of_degree(k)) plain += 0.5 * a.comp[m].dot(b.comp[m]);
        EXPECT_NEAR(inner(a, b), plain, 1e-13);
        EXPECT_NEAR(inner(hodge_star(a), hodge_star(b)), inner(a, b), 1e-13);
    }
}

TEST(Forms, WedgeBracketOfOneFormsIsSymmetric) {
    std::mt19937_64 rng(13);
    FormValue<double> a = random_form<double>(rng, 1), b = random_form<double>(rng, 1);
    FormValue<double> d = wedge_bracket(a, b) - wedge_bracket(b, a);
    EXPECT_LT(max_abs(d), 1e-14);
    // explicit component: [a^b]_{01} = [a0,b1] - [a1,b0]
    AlgElement c = bracket(a.comp[1], b.comp[2]) - bracket(a.comp[2], b.comp[1]);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(wedge_bracket(a, b).comp[0b0011].c[i], c.c[i], 1e-14);
    EXPECT_THROW(wedge_bracket(random_form<double>(rng, 3), random_form<double>(rng, 2)), std::invalid_argument);
}

TEST(Forms, ExteriorDerivativeOfSimpleForm) {
    // a = x1 dx0 e1  ->  da = dx1 ^ dx0 e1 = -dx01 e1
    FormField a = make_field(1, Domain::r4(), [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        FormValue<T> f(1);
        f.comp[1].c[0] = x[1];
        return f;
    });
    FormValue<double> d = exterior_d(a)({0.3, -0.2, 0.1, 0.5});
    EXPECT_DOUBLE_EQ(d.comp[0b0011].c[0], -1.0);
    EXPECT_EQ(max_abs(d), 1.0);
}

TEST(Forms, DSquaredVanishesOnPolynomials) {
    std::mt19937_64 rng(14);
    for (int k = 0; k <= 2; ++k) {
        FormField w = poly_form(k, 100 + k);
        FormField dd = exterior_d(exterior_d(w));
        for (int t = 0; t < 20; ++t) EXPECT_LE(max_abs(dd(oracle::random_point(rng, 1.0))), 1e-10);
    }
    EXPECT_THROW(exterior_d(poly_form(4, 7)), std::invalid_argument);
}

TEST(Forms, JetMatchesFiniteDifferenceFallback) {
    FormField w = poly_form(2, 21);
    FormField v = w;
    v.jet = nullptr;
    std::mt19937_64 rng(15);
    for (int t = 0; t < 5; ++t) {
        Point4 x = oracle::random_point(rng, 0.8);
        FormValue<S4> a = w.eval_jet(x), b = v.eval_jet(x);
        for (unsigned m : mask::of_degree(2))
            for (int c = 0; c < 3; ++c)
                for (int mu = 0; mu < 4; ++mu) EXPECT_NEAR(a.comp[m].c[c].d[mu], b.comp[m].c[c].d[mu], 1e-7);
    }
}

TEST(Forms, CodifferentialIsAdjointOfCovariantD) {
    // int <d_A a, b> = int <a, d_A^* b> for a, b vanishing on the sphere
    const double eps = 0.3, tol = 1e-4;
    FormField A = BackgroundConnection::standard().field();
    QuadratureRule rule = unit_ball_rule({0, 0, 0, 0}, 0.5, tol);
    for (int k = 0; k <= 2; ++k) {
        FormField a = bump_form(k, 31 + k), b = bump_form(k + 1, 41 + k);
        FormField dA_a = covariant_d_eps(A, a, eps);
        FormField dstar_b = codifferential_eps(A, b, eps);
        double lhs = integrate(rule, [&](const Point4& x) { return inner(dA_a(x), b(x)); });
        double rhs = integrate(rule, [&](const Point4& x) { return inner(a(x), dstar_b(x)); });
        EXPECT_LE(std::abs(lhs - rhs), 10 * tol * std::max(std::abs(lhs), std::abs(rhs))) << "degree " << k;
    }
}

TEST(Forms, BianchiIdentityOnExtension) {
    const double eps = 1.0 / 64;
    ParamQ q = ParamQ::make({0.1, 0, -0.05, 0}, GroupElement(1, 0.3, -0.2, 0.1), std::sqrt(eps), eps);
    ChartedConnection At = extended_connection(q);
    std::mt19937_64 rng(16);
    for (Chart c : {Chart::Inner, Chart::Outer}) {
        FormField A = At.field(c);
        FormField F = curvature_eps(A, eps);
        FormField dF = covariant_d_eps(A, F, eps);
        for (int t = 0; t < 10; ++t) {
            Point4 y = oracle::random_point(rng, c == Chart::Inner ? 0.24 * q.lambda : 3 * q.lambda);
            Point4 x{q.p[0] + y[0], q.p[1] + y[1], q.p[2] + y[2], q.p[3] + y[3]};
            if (c == Chart::Outer && norm4(y) < 0.25 * q.lambda) continue;
            // scale: size of the first derivatives of F
            FormValue<S4> j = F.eval_jet(x);
            double scale = 0;
            for (unsigned m : mask::of_degree(2))
                for (int a = 0; a < 3; ++a)
                    for (int mu = 0; mu < 4; ++mu) scale = std::max(scale, std::abs(j.comp[m].c[a].d[mu]));
            EXPECT_LE(max_abs(dF(x)), 10 * 1e-4 * scale);
            EXPECT_LE(max_abs(dF(x)), 1e-10 * scale);
        }
    }
}

TEST(Forms, ChartOverlapDensitiesAgree) {
    const double eps = 1.0 / 64;
    ParamQ q = ParamQ::make({0.05, 0.1, 0, 0}, GroupElement(0.8, 0.1, 0.5, -0.2), std::sqrt(eps), eps);
    std::mt19937_64 rng(17);
    for (ConnectionKind kind : {ConnectionKind::Glued, ConnectionKind::Extended}) {
        ChartedConnection A = kind == ConnectionKind::Glued ? glued_connection(q, BackgroundConnection::standard(),
                                                                               Pi2Strategy::Regularized)
                                                            : extended_connection(q);
        for (int t = 0; t < 20; ++t) {
            Point4 y = oracle::random_point(rng, 0.25 * q.lambda);
            Point4 x{q.p[0] + y[0], q.p[1] + y[1], q.p[2] + y[2], q.p[3] + y[3]};
            double din = energy_density(A.jet(Chart::Inner, x), eps);
            double dout = energy_density(A.jet(Chart::Outer, x), eps);
            EXPECT_LE(std::abs(din - dout), 1e-8 * din);
            double cin = charge_density(A.jet(Chart::Inner, x), eps);
            double cout = charge_density(A.jet(Chart::Outer, x), eps);
            EXPECT_LE(std::abs(cin - cout), 1e-8 * std::abs(cin));
        }
    }
}

TEST(Forms, DomainChecks) {
    FormField i2 = i2_form(0.2, {0, 0, 0, 0});
    EXPECT_THROW(i2({0, 0, 0, 0}), std::domain_error);
    EXPECT_NO_THROW(i2({0.1, 0, 0, 0}));
    EXPECT_THROW(FormValue<double>(5), std::invalid_argument);
    FormValue<double> a(1), b(2);
    EXPECT_THROW(inner(a, b), std::invalid_argument);
}

TEST(Forms, FieldCsvLayout) {
    FormField a = poly_form(1, 3);
    std::ostringstream os;
    write_field_csv(os, a, {{0, 0, 0, 0}, {0.5, 0, 0, 0}});
    std::string s = os.str();
    EXPECT_EQ(s.rfind("x0,x1,x2,x3,component-index,e1,e2,e3\n", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 2 * 4);
}
