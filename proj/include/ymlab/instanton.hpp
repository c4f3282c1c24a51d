#pragma once

// The glued family A(q) and its extension A~(q).
//
//   I1 = Im[y dx^bar] / (l^2 + r^2),   I2 = l^2 Im[y^bar dx] / (r^2 (l^2 + r^2)),
//   y = x - p, r = |y|, charts split at r = l/4, transition s = g u g^-1 with
//   u = y/|y|:  I2 = u^-1 I1 u + u^-1 du.
//
//   A_out = (1 - b_l) bg + (1/eps) Ad_g [ b_{l/4} I2 + (1 - b_{l/4}) PI2 ]
//   A_in  = (1/eps) Ad_g I1
//   A~    = (1/eps) Ad_g I2 outside, (1/eps) Ad_g I1 inside,
// with h = I2 - PI2 supplied by a strategy.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "autodiff.hpp"
#include "forms.hpp"
#include "liealg.hpp"

namespace ymlab {

struct ParameterSpaceError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// parameter ordering used everywhere: p1..p4, xi1..xi3, lambda
inline constexpr int kNumParams = 8;
inline const char* param_name(int k) {
    static const char* names[] = {"p1", "p2", "p3", "p4", "xi1", "xi2", "xi3", "lambda"};
    return names[k];
}

struct ParamConstants {
    double d0 = 0.7;
    double lambda0 = 0.3;
    double D1 = 0.5;
    double D2 = 2.0;
};

struct ParamQ {
    Point4 p{};
    GroupElement g;
    double lambda = 0.125;
    double eps = 1.0 / 64.0;
    ParamConstants c;

    void validate() const {
        if (!(eps > 0.0)) throw ParameterSpaceError("ParamQ: eps must be positive");
        if (!(lambda > 0.0)) throw ParameterSpaceError("ParamQ: lambda must be positive");
        if (!(0.0 < 2.0 * c.lambda0 && 2.0 * c.lambda0 < c.d0))
            throw ParameterSpaceError("ParamQ: need 0 < 2 lambda0 < d0");
        if (!(norm4(p) < 1.0 - c.d0)) throw ParameterSpaceError("ParamQ: |p| must be below 1 - d0");
        if (!(lambda < c.lambda0)) throw ParameterSpaceError("ParamQ: lambda must be below lambda0");
        double l2 = lambda * lambda;
        if (!(c.D1 * eps < l2 && l2 < c.D2 * eps))
            throw ParameterSpaceError("ParamQ: lambda^2 = " + std::to_string(l2) + " outside (D1 eps, D2 eps) = (" +
                                      std::to_string(c.D1 * eps) + ", " + std::to_string(c.D2 * eps) + ")");
    }

    static ParamQ make(const Point4& p, const GroupElement& g, double lambda, double eps, ParamConstants c = {}) {
        ParamQ q{p, g, lambda, eps, c};
        q.validate();
        return q;
    }

    // move along a parameter-space tangent v (coordinates over p, xi[g], lambda)
    ParamQ moved(const std::array<double, kNumParams>& v, double t) const {
        ParamQ q = *this;
        for (int i = 0; i < 4; ++i) q.p[i] += t * v[i];
        AlgElement X{{t * v[4], t * v[5], t * v[6]}};
        q.g = exp_map(X) * g;
        q.lambda += t * v[7];
        return q;
    }
};

// ---- cutoff profile: 1 on [0,1], 0 on [2,inf), 1 - S(t-1) between with
// S(s) = 35 s^4 - 84 s^5 + 70 s^6 - 20 s^7 (C^3)

struct CutoffSpec {
    // beta, beta', beta'', beta''' at t
    static std::array<double, 4> profile(double t) {
        if (t <= 1.0 || t >= 2.0) return {t <= 1.0 ? 1.0 : 0.0, 0.0, 0.0, 0.0};
        double s = t - 1.0;
        double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
        double S = s4 * (35.0 - 84.0 * s + 70.0 * s2 - 20.0 * s3);
        double S1 = 140.0 * s3 * (1.0 - s) * (1.0 - s) * (1.0 - s);
        double S2 = 420.0 * s2 - 1680.0 * s3 + 2100.0 * s4 - 840.0 * s4 * s;
        double S3 = 840.0 * s - 5040.0 * s2 + 8400.0 * s3 - 4200.0 * s4;
        return {1.0 - S, -S1, -S2, -S3};
    }

    template <class T>
    static T value(const T& t) {
        double tv = val(t);
        if (tv <= 1.0) return T(1.0);
        if (tv >= 2.0) return T(0.0);
        T s = t - 1.0;
        T s2 = s * s;
        T s4 = s2 * s2;
        return 1.0 - s4 * (35.0 - 84.0 * s + 70.0 * s2 - 20.0 * s2 * s);
    }
};

// beta(|y|/s); branches on r^2 so the flat regions never take sqrt(0)
template <class T>
T cutoff_of(const Vec4<T>& y, const T& s) {
    T r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
    double r2v = val(r2), s2v = val(s) * val(s);
    if (r2v <= s2v) return T(1.0);
    if (r2v >= 4.0 * s2v) return T(0.0);
    return CutoffSpec::value(sqrt(r2) / s);
}

enum class CutoffScale { Lambda, QuarterLambda };

using S444 = Dual<S44, 4>;

struct CutoffJet {
    double value = 0.0;
    std::array<double, 4> grad{};
    std::array<std::array<double, 4>, 4> hess{};
    std::array<std::array<std::array<double, 4>, 4>, 4> third{};
};

// beta_{s,p}(x) with spatial derivatives to order 3
inline CutoffJet cutoff(double lambda, const Point4& p, CutoffScale scale, const Point4& x) {
    if (!(lambda > 0.0)) throw std::invalid_argument("cutoff: lambda must be positive");
    double s = scale == CutoffScale::Lambda ? lambda : 0.25 * lambda;
    Vec4<S444> y;
    for (int i = 0; i < 4; ++i) {
        S444 v;
        v.v.v = seed<double, 4>(x[i] - p[i], i);
        v.v.d[i] = S4(1.0);
        v.d[i] = S44(1.0);
        y[i] = v;
    }
    S444 b = cutoff_of(y, S444(s));
    CutoffJet j;
    j.value = b.v.v.v;
    for (int i = 0; i < 4; ++i) {
        j.grad[i] = b.v.v.d[i];
        for (int k = 0; k < 4; ++k) {
            j.hess[i][k] = b.v.d[i].d[k];
            for (int m = 0; m < 4; ++m) j.third[i][k][m] = b.d[i].d[k].d[m];
        }
    }
    return j;
}

// ---- instanton charts in algebra coefficients (2 Im of the quaternion form)

template <class T>
OneForm<T> im_y_ebar(const Vec4<T>& y) {
    // Im(y conj(e_mu)) for e = 1, i, j, k
    OneForm<T> a;
    a[0] = {{y[1], y[2], y[3]}};
    a[1] = {{-y[0], -y[3], y[2]}};
    a[2] = {{y[3], -y[0], -y[1]}};
    a[3] = {{-y[2], y[1], -y[0]}};
    return a;
}

template <class T>
OneForm<T> im_ybar_e(const Vec4<T>& y) {
    // Im(conj(y) e_mu)
    OneForm<T> a;
    a[0] = {{-y[1], -y[2], -y[3]}};
    a[1] = {{y[0], -y[3], y[2]}};
    a[2] = {{y[3], y[0], -y[1]}};
    a[3] = {{-y[2], y[1], y[0]}};
    return a;
}

template <class T>
T r2_of(const Vec4<T>& y) {
    return y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
}

template <class T>
OneForm<T> scaled(const T& s, OneForm<T> a) {
    for (auto& c : a) c = s * c;
    return a;
}

template <class T>
OneForm<T> i1_chart(const Vec4<T>& y, const T& lam) {
    T f = 2.0 / (lam * lam + r2_of(y));
    return scaled(f, im_y_ebar(y));
}

template <class T>
OneForm<T> i2_chart(const Vec4<T>& y, const T& lam) {
    T r2 = r2_of(y);
    T l2 = lam * lam;
    T f = 2.0 * l2 / (r2 * (l2 + r2));
    return scaled(f, im_ybar_e(y));
}

enum class Pi2Strategy {
    Zero,         // PI2 = 0, h = I2
    Identity,     // PI2 = I2, h = 0
    Regularized,  // h = l^2 Im[y^bar dx] / (1 + r^2)^2
};

inline const char* pi2_name(Pi2Strategy s) {
    switch (s) {
        case Pi2Strategy::Zero: return "zero";
        case Pi2Strategy::Identity: return "identity";
        case Pi2Strategy::Regularized: return "regularized";
    }
    return "?";
}

inline Pi2Strategy pi2_from_name(const std::string& n) {
    if (n == "zero") return Pi2Strategy::Zero;
    if (n == "identity") return Pi2Strategy::Identity;
    if (n == "regularized") return Pi2Strategy::Regularized;
    throw std::invalid_argument("unknown PI2 strategy '" + n + "'");
}

// h = I2 - PI2
template <class T>
OneForm<T> h_chart(Pi2Strategy s, const Vec4<T>& y, const T& lam) {
    switch (s) {
        case Pi2Strategy::Zero: return i2_chart(y, lam);
        case Pi2Strategy::Identity: return OneForm<T>{};
        case Pi2Strategy::Regularized: {
            T q = 1.0 + r2_of(y);
            T f = 2.0 * lam * lam / (q * q);
            return scaled(f, im_ybar_e(y));
        }
    }
    return OneForm<T>{};
}

// ---- background connection standing in for the minimiser

struct BackgroundConnection {
    double amplitude = 1.0;
    std::array<std::array<double, 3>, 4> c{};
    std::array<std::array<double, 3>, 4> l{};

    // fixed smooth 1-form supported in the unit ball, (1-|x|^2)^4 profile
    static BackgroundConnection standard(double amplitude = 1.0) {
        BackgroundConnection b;
        b.amplitude = amplitude;
        for (int mu = 0; mu < 4; ++mu)
            for (int a = 0; a < 3; ++a) {
                b.c[mu][a] = 0.15 * std::sin(1.3 * mu + 2.1 * a + 0.4);
                b.l[mu][a] = 0.10 * std::cos(0.7 * mu - 1.9 * a + 0.2);
            }
        return b;
    }
    static BackgroundConnection none() { return standard(0.0); }

    bool is_zero() const { return amplitude == 0.0; }

    template <class T>
    OneForm<T> eval(const Vec4<T>& x) const {
        OneForm<T> a{};
        if (amplitude == 0.0) return a;
        T r2 = r2_of(x);
        if (val(r2) >= 1.0) return a;
        T m = 1.0 - r2;
        T m2 = m * m;
        T prof = amplitude * (m2 * m2);
        for (int mu = 0; mu < 4; ++mu)
            for (int k = 0; k < 3; ++k) a[mu].c[k] = prof * (c[mu][k] + l[mu][k] * x[(mu + k + 1) % 4]);
        return a;
    }

    FormField field() const {
        BackgroundConnection self = *this;
        return make_field(1, Domain::r4(), [self](const auto& x) { return from_one_form(self.eval(x)); });
    }
};

// ---- Ad with a possibly non-unit quaternion (for differentiating in g)

template <class T>
Alg<T> ad_quat(const Quat<T>& q, const Alg<T>& X) {
    Quat<T> r = q * to_quat(X) * conj(q);
    T inv = 1.0 / norm2(q);
    return {{2.0 * inv * r.x, 2.0 * inv * r.y, 2.0 * inv * r.z}};
}

template <class T>
OneForm<T> apply_ad(const std::array<std::array<double, 3>, 3>& R, const OneForm<T>& a) {
    OneForm<T> r;
    for (int mu = 0; mu < 4; ++mu) r[mu] = apply_ad(R, a[mu]);
    return r;
}

template <class T>
OneForm<T> bracket_with(const AlgElement& xi, const OneForm<T>& a) {
    OneForm<T> r;
    Alg<T> X{{T(xi.c[0]), T(xi.c[1]), T(xi.c[2])}};
    for (int mu = 0; mu < 4; ++mu) r[mu] = bracket(X, a[mu]);
    return r;
}

template <class T>
OneForm<T> add(const OneForm<T>& a, const OneForm<T>& b) {
    OneForm<T> r;
    for (int mu = 0; mu < 4; ++mu) r[mu] = a[mu] + b[mu];
    return r;
}

template <class T>
OneForm<T> sub(const OneForm<T>& a, const OneForm<T>& b) {
    OneForm<T> r;
    for (int mu = 0; mu < 4; ++mu) r[mu] = a[mu] - b[mu];
    return r;
}

template <class T>
OneForm<T> mul(double s, OneForm<T> a) {
    for (auto& c : a) c = s * c;
    return a;
}

enum class ConnectionKind { Glued, Extended };
enum class Chart { Inner, Outer };

// Whole-formula chart evaluation with every parameter as a scalar of type T;
// g enters through a quaternion which need not be unit.
template <class T>
struct ChartParams {
    Vec4<T> p;
    T lambda;
    Quat<T> g;
};

template <class T>
OneForm<T> chart_formula(ConnectionKind kind, Chart chart, const Vec4<T>& x, const ChartParams<T>& P, double eps,
                         const BackgroundConnection& bg, Pi2Strategy pi2) {
    Vec4<T> y{x[0] - P.p[0], x[1] - P.p[1], x[2] - P.p[2], x[3] - P.p[3]};
    auto ad = [&](const OneForm<T>& a) {
        OneForm<T> r;
        for (int mu = 0; mu < 4; ++mu) r[mu] = ad_quat(P.g, a[mu]);
        return r;
    };
    if (chart == Chart::Inner) return mul(1.0 / eps, ad(i1_chart(y, P.lambda)));
    OneForm<T> i2 = i2_chart(y, P.lambda);
    if (kind == ConnectionKind::Extended) return mul(1.0 / eps, ad(i2));
    T b1 = cutoff_of(y, P.lambda);
    T b4 = cutoff_of(y, T(0.25) * P.lambda);
    OneForm<T> h = h_chart(pi2, y, P.lambda);
    // b4 I2 + (1 - b4)(I2 - h) = I2 - (1 - b4) h
    OneForm<T> inst = sub(i2, scaled(T(1.0) - b4, h));
    return add(scaled(T(1.0) - b1, bg.eval(x)), mul(1.0 / eps, ad(inst)));
}

template <class T>
ChartParams<T> constant_params(const ParamQ& q) {
    ChartParams<T> P;
    for (int i = 0; i < 4; ++i) P.p[i] = T(q.p[i]);
    P.lambda = T(q.lambda);
    const Quat<double>& g = q.g.quat();
    P.g = {T(g.w), T(g.x), T(g.y), T(g.z)};
    return P;
}

// ---- charted connections

struct ChartedConnection {
    ParamQ q;
    ConnectionKind kind = ConnectionKind::Glued;
    BackgroundConnection bg;
    Pi2Strategy pi2 = Pi2Strategy::Regularized;

    double split_radius() const { return 0.25 * q.lambda; }
    bool in_inner(const Point4& x) const { return norm4(sub4(x, q.p)) < split_radius(); }
    Chart chart_at(const Point4& x) const { return in_inner(x) ? Chart::Inner : Chart::Outer; }

    template <class T>
    OneForm<T> eval(Chart chart, const Vec4<T>& x) const {
        return chart_formula(kind, chart, x, constant_params<T>(q), q.eps, bg, pi2);
    }

    OneForm<double> value(Chart chart, const Point4& x) const { return eval(chart, seeded_point<double>(x)); }
    OneForm<S4> jet(Chart chart, const Point4& x) const { return eval(chart, seeded_s4(x)); }
    OneForm<S44> jet2(Chart chart, const Point4& x) const { return eval(chart, seeded_s44(x)); }

    FormField field(Chart chart) const {
        ChartedConnection self = *this;
        Domain dom = chart == Chart::Inner ? Domain::ball(q.p, split_radius())
                                           : Domain::punctured_ball(q.p, std::numeric_limits<double>::infinity());
        FormField f = make_field(1, dom, [self, chart](const auto& x) { return from_one_form(self.eval(chart, x)); });
        f.fd_scale = q.lambda;
        return f;
    }
    FormField inner_field() const { return field(Chart::Inner); }
    FormField outer_field() const { return field(Chart::Outer); }

    // s = g u g^-1, u = (x-p)/|x-p|; inner = s outer s^-1 for sections
    template <class T>
    Quat<T> transition(const Vec4<T>& x) const {
        Vec4<T> y{x[0] - q.p[0], x[1] - q.p[1], x[2] - q.p[2], x[3] - q.p[3]};
        T r = sqrt(r2_of(y));
        Quat<T> u{y[0] / r, y[1] / r, y[2] / r, y[3] / r};
        const Quat<double>& g = q.g.quat();
        Quat<T> gt{T(g.w), T(g.x), T(g.y), T(g.z)};
        return gt * u * conj(gt);
    }
};

inline ChartedConnection glued_connection(const ParamQ& q, const BackgroundConnection& bg, Pi2Strategy pi2) {
    q.validate();
    return {q, ConnectionKind::Glued, bg, pi2};
}

inline ChartedConnection extended_connection(const ParamQ& q) {
    q.validate();
    return {q, ConnectionKind::Extended, BackgroundConnection::none(), Pi2Strategy::Regularized};
}

// the section in the inner trivialisation from its outer representative
template <class T>
OneForm<T> section_outer_to_inner(const Quat<T>& s, const OneForm<T>& a) {
    OneForm<T> r;
    for (int mu = 0; mu < 4; ++mu) {
        Quat<T> v = s * to_quat(a[mu]) * conj(s);
        r[mu] = from_imag(v);
    }
    return r;
}

// ---- instanton FormFields

inline FormField i1_form(double lambda, const Point4& p) {
    if (!(lambda > 0.0)) throw std::invalid_argument("i1_form: lambda must be positive");
    FormField f = make_field(1, Domain::r4(), [lambda, p](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        Vec4<T> y{x[0] - p[0], x[1] - p[1], x[2] - p[2], x[3] - p[3]};
        return from_one_form(i1_chart(y, T(lambda)));
    });
    f.fd_scale = lambda;
    return f;
}

inline FormField i2_form(double lambda, const Point4& p) {
    if (!(lambda > 0.0)) throw std::invalid_argument("i2_form: lambda must be positive");
    FormField f = make_field(1, Domain::punctured_ball(p, std::numeric_limits<double>::infinity()),
                             [lambda, p](const auto& x) {
                                 using T = std::decay_t<decltype(x[0])>;
                                 Vec4<T> y{x[0] - p[0], x[1] - p[1], x[2] - p[2], x[3] - p[3]};
                                 return from_one_form(i2_chart(y, T(lambda)));
                             });
    f.fd_scale = lambda;
    return f;
}

// b = A~ - A on the outer chart: (b_l - 1) bg + (1/eps)(1 - b_{l/4}) Ad_g h; zero inside
template <class T>
OneForm<T> difference_b_eval(const ParamQ& q, const BackgroundConnection& bg, Pi2Strategy pi2, Chart chart,
                             const Vec4<T>& x) {
    if (chart == Chart::Inner) return OneForm<T>{};
    Vec4<T> y{x[0] - q.p[0], x[1] - q.p[1], x[2] - q.p[2], x[3] - q.p[3]};
    T lam(q.lambda);
    T b1 = cutoff_of(y, lam);
    T b4 = cutoff_of(y, T(0.25 * q.lambda));
    auto R = q.g.ad_matrix();
    OneForm<T> h = apply_ad(R, h_chart(pi2, y, lam));
    return add(scaled(b1 - 1.0, bg.eval(x)), mul(1.0 / q.eps, scaled(T(1.0) - b4, h)));
}

inline FormField difference_b(const ParamQ& q, const BackgroundConnection& bg, Pi2Strategy pi2) {
    q.validate();
    FormField f = make_field(1, Domain::punctured_ball(q.p, std::numeric_limits<double>::infinity()),
                             [q, bg, pi2](const auto& x) {
                                 Point4 xv{val(x[0]), val(x[1]), val(x[2]), val(x[3])};
                                 Chart c = norm4(sub4(xv, q.p)) < 0.25 * q.lambda ? Chart::Inner : Chart::Outer;
                                 return from_one_form(difference_b_eval(q, bg, pi2, c, x));
                             });
    f.fd_scale = q.lambda;
    return f;
}

// ---- parameter derivatives

using P5 = Dual<S4, 5>;  // p1..p4, lambda over a spatial jet
using Jet1 = OneForm<S4>;

template <class T, std::size_t N>
OneForm<T> slot(const OneForm<Dual<T, N>>& a, std::size_t k) {
    OneForm<T> r;
    for (int mu = 0; mu < 4; ++mu)
        for (int c = 0; c < 3; ++c) r[mu].c[c] = a[mu].c[c].d[k];
    return r;
}

template <class T, std::size_t N>
OneForm<T> value_of(const OneForm<Dual<T, N>>& a) {
    OneForm<T> r;
    for (int mu = 0; mu < 4; ++mu)
        for (int c = 0; c < 3; ++c) r[mu].c[c] = a[mu].c[c].v;
    return r;
}

// everything the basis and functional computations need at one node
struct TangentSample {
    Chart chart = Chart::Outer;
    Jet1 A, At;                        // A(q) and A~(q)
    std::array<Jet1, kNumParams> dA;   // dA/dparam
    std::array<Jet1, kNumParams> dAt;  // dA~/dparam
};

// chart ingredients with their p- and lambda-derivatives (slots 0..3 and 4)
struct Ingredients {
    OneForm<P5> i1, i2, h;
    P5 b1, b4;
};

inline Vec4<P5> param_seeded_y(const Point4& x, const ParamQ& q, P5& lam) {
    Vec4<S4> xs = seeded_s4(x);
    Vec4<P5> y;
    for (int i = 0; i < 4; ++i) {
        P5 pi(S4(q.p[i]));
        pi.d[i] = S4(1.0);
        y[i] = P5(xs[i]) - pi;
    }
    lam = P5(S4(q.lambda));
    lam.d[4] = S4(1.0);
    return y;
}

inline int param_slot(int k) { return k < 4 ? k : 4; }  // lambda -> slot 4

// Chart-wise closed forms: outer p/lambda derivatives by the five-term
// product rule, xi-derivatives as brackets, inner (1/eps) Ad d I1.
inline TangentSample tangent_sample(const ParamQ& q, const BackgroundConnection& bg, Pi2Strategy pi2,
                                    const Point4& x, Chart chart) {
    TangentSample t;
    t.chart = chart;
    const double ie = 1.0 / q.eps;
    const auto R = q.g.ad_matrix();
    P5 lam;
    Vec4<P5> y = param_seeded_y(x, q, lam);
    if (chart == Chart::Inner) {
        OneForm<P5> i1 = i1_chart(y, lam);
        Jet1 a = mul(ie, apply_ad(R, value_of(i1)));
        t.A = t.At = a;
        for (int k = 0; k < kNumParams; ++k) {
            if (k >= 4 && k < 7)
                t.dA[k] = bracket_with(so3_to_su2(k - 3), a);
            else
                t.dA[k] = mul(ie, apply_ad(R, slot(i1, param_slot(k))));
            t.dAt[k] = t.dA[k];
        }
        return t;
    }
    OneForm<P5> i2 = i2_chart(y, lam);
    OneForm<P5> h = h_chart(pi2, y, lam);
    P5 b1 = cutoff_of(y, lam);
    P5 b4 = cutoff_of(y, P5(0.25) * lam);
    Jet1 bgv = bg.eval(seeded_s4(x));

    Jet1 I2 = value_of(i2), H = value_of(h);
    Jet1 PI2 = sub(I2, H);
    S4 B1 = b1.v, B4 = b4.v;
    // Ad[b4 I2 + (1-b4) PI2]
    Jet1 inst = apply_ad(R, add(scaled(B4, I2), scaled(S4(1.0) - B4, PI2)));
    t.A = add(scaled(S4(1.0) - B1, bgv), mul(ie, inst));
    Jet1 iA2 = mul(ie, apply_ad(R, I2));
    t.At = iA2;
    for (int k = 0; k < kNumParams; ++k) {
        if (k >= 4 && k < 7) {
            AlgElement xi = so3_to_su2(k - 3);
            t.dA[k] = mul(ie, bracket_with(xi, inst));
            t.dAt[k] = bracket_with(xi, iA2);
            continue;
        }
        int s = param_slot(k);
        Jet1 dI2 = slot(i2, s), dH = slot(h, s);
        Jet1 dPI2 = sub(dI2, dH);
        S4 dB1 = b1.d[s], dB4 = b4.d[s];
        // -d b1 bg + (1/eps) Ad[ d b4 I2 + b4 d I2 - d b4 PI2 + (1 - b4) d PI2 ]
        Jet1 five = add(add(scaled(dB4, I2), scaled(B4, dI2)), sub(scaled(S4(1.0) - B4, dPI2), scaled(dB4, PI2)));
        t.dA[k] = add(scaled(-dB1, bgv), mul(ie, apply_ad(R, five)));
        t.dAt[k] = mul(ie, apply_ad(R, dI2));
    }
    return t;
}

// Whole-formula route: AD of the chart formula in all eight parameters at
// once, g moved by the non-unit quaternion (1 + sum t_i e_i) g.
using P8 = Dual<S4, 8>;

inline std::array<Jet1, kNumParams> dparam_whole(ConnectionKind kind, const ParamQ& q, const BackgroundConnection& bg,
                                                 Pi2Strategy pi2, const Point4& x, Chart chart) {
    Vec4<S4> xs = seeded_s4(x);
    Vec4<P8> xp;
    for (int i = 0; i < 4; ++i) xp[i] = P8(xs[i]);
    ChartParams<P8> P;
    for (int i = 0; i < 4; ++i) {
        P.p[i] = P8(S4(q.p[i]));
        P.p[i].d[i] = S4(1.0);
    }
    P.lambda = P8(S4(q.lambda));
    P.lambda.d[7] = S4(1.0);
    Quat<P8> tau{P8(S4(1.0)), P8(), P8(), P8()};
    for (int i = 0; i < 3; ++i) {
        P8 c;
        c.d[4 + i] = S4(0.5);  // e_i = unit/2
        if (i == 0) tau.x = c;
        if (i == 1) tau.y = c;
        if (i == 2) tau.z = c;
    }
    const Quat<double>& g = q.g.quat();
    Quat<P8> gq{P8(S4(g.w)), P8(S4(g.x)), P8(S4(g.y)), P8(S4(g.z))};
    P.g = tau * gq;
    OneForm<P8> a = chart_formula(kind, chart, xp, P, q.eps, bg, pi2);
    std::array<Jet1, kNumParams> r;
    for (int k = 0; k < kNumParams; ++k) r[k] = slot(a, k);
    return r;
}

// ---- second derivative in p1

using P2 = Dual<Dual<S4, 1>, 1>;

inline Vec4<P2> p1_seeded_y(const Point4& x, const ParamQ& q) {
    Vec4<S4> xs = seeded_s4(x);
    Vec4<P2> y;
    for (int i = 0; i < 4; ++i) {
        P2 pi(Dual<S4, 1>(S4(q.p[i])));
        if (i == 0) {
            pi.v.d[0] = S4(1.0);
            pi.d[0] = Dual<S4, 1>(S4(1.0));
        }
        y[i] = P2(Dual<S4, 1>(xs[i])) - pi;
    }
    return y;
}

inline Jet1 second_slot(const OneForm<P2>& a) {
    Jet1 r;
    for (int mu = 0; mu < 4; ++mu)
        for (int c = 0; c < 3; ++c) r[mu].c[c] = a[mu].c[c].d[0].d[0];
    return r;
}
inline Jet1 first_slot(const OneForm<P2>& a) {
    Jet1 r;
    for (int mu = 0; mu < 4; ++mu)
        for (int c = 0; c < 3; ++c) r[mu].c[c] = a[mu].c[c].d[0].v;
    return r;
}
inline Jet1 zeroth_slot(const OneForm<P2>& a) {
    Jet1 r;
    for (int mu = 0; mu < 4; ++mu)
        for (int c = 0; c < 3; ++c) r[mu].c[c] = a[mu].c[c].v.v;
    return r;
}

// d^2 A / dp1^2:
//   outer: -d2b_l bg + (1/eps) Ad[ d2 I2 + d2b_{l/4} h + 2 d b_{l/4} d h - (1 - b_{l/4}) d2 h ]
//   inner: (1/eps) Ad d2 I1
inline Jet1 d2A_dp1p1(const ParamQ& q, const BackgroundConnection& bg, Pi2Strategy pi2, const Point4& x, Chart chart) {
    const double ie = 1.0 / q.eps;
    const auto R = q.g.ad_matrix();
    Vec4<P2> y = p1_seeded_y(x, q);
    P2 lam(Dual<S4, 1>(S4(q.lambda)));
    if (chart == Chart::Inner) return mul(ie, apply_ad(R, second_slot(i1_chart(y, lam))));
    OneForm<P2> i2 = i2_chart(y, lam);
    OneForm<P2> h = h_chart(pi2, y, lam);
    P2 b1 = cutoff_of(y, lam);
    P2 b4 = cutoff_of(y, P2(0.25) * lam);
    Jet1 bgv = bg.eval(seeded_s4(x));
    S4 B4 = b4.v.v, dB4 = b4.d[0].v, d2B4 = b4.d[0].d[0], d2B1 = b1.d[0].d[0];
    Jet1 H = zeroth_slot(h), dH = first_slot(h), d2H = second_slot(h), d2I2 = second_slot(i2);
    Jet1 inner = add(add(d2I2, scaled(d2B4, H)), sub(scaled(2.0 * dB4, dH), scaled(S4(1.0) - B4, d2H)));
    return add(scaled(-d2B1, bgv), mul(ie, apply_ad(R, inner)));
}

inline Jet1 d2A_dp1p1_whole(const ParamQ& q, const BackgroundConnection& bg, Pi2Strategy pi2, const Point4& x,
                            Chart chart) {
    Vec4<S4> xs = seeded_s4(x);
    Vec4<P2> xp;
    for (int i = 0; i < 4; ++i) xp[i] = P2(Dual<S4, 1>(xs[i]));
    ChartParams<P2> P = constant_params<P2>(q);
    P.p[0].v.d[0] = S4(1.0);
    P.p[0].d[0] = Dual<S4, 1>(S4(1.0));
    return second_slot(chart_formula(ConnectionKind::Glued, chart, xp, P, q.eps, bg, pi2));
}

// ---- gauge-invariant densities on a jet

template <class T>
FormValue<T> curvature_of(const OneForm<Dual<T, 4>>& a, double eps) {
    return curvature_jet(from_one_form(a), eps);
}

inline double energy_density(const Jet1& a, double eps) {
    FormValue<double> F = curvature_of(a, eps);
    return inner(F, F);
}

// <F, *F>
inline double charge_density(const Jet1& a, double eps) {
    FormValue<double> F = curvature_of(a, eps);
    return inner(F, hodge_star(F));
}

}  // namespace ymlab
