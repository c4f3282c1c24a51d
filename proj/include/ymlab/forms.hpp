#pragma once

// su(2)-valued differential forms on flat R^4.
// A k-form stores one algebra element per increasing multi-index; the
// multi-index {i1<...<ik} is encoded as the bitmask sum 2^ij.
// Orientation: dx0^dx1^dx2^dx3 = vol.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "liealg.hpp"

namespace ymlab {

using Point4 = std::array<double, 4>;
template <class T>
using Vec4 = std::array<T, 4>;
template <class T>
using OneForm = std::array<Alg<T>, 4>;

using S4 = Dual<double, 4>;    // value + spatial gradient
using S44 = Dual<S4, 4>;       // + spatial Hessian

inline double norm4(const Point4& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]); }
inline Point4 sub4(const Point4& a, const Point4& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]}; }

namespace mask {

inline int degree(unsigned m) { return std::popcount(m); }

// multi-indices of degree k in lexicographic order
inline const std::vector<unsigned>& of_degree(int k) {
    static const std::array<std::vector<unsigned>, 5> table = [] {
        std::array<std::vector<unsigned>, 5> t;
        // lexicographic on the sorted index tuple
        std::vector<std::vector<int>> tuples;
        for (unsigned m = 0; m < 16; ++m) {
            std::vector<int> idx;
            for (int i = 0; i < 4; ++i)
                if (m & (1u << i)) idx.push_back(i);
            tuples.push_back(idx);
        }
        std::vector<unsigned> order(16);
        for (unsigned m = 0; m < 16; ++m) order[m] = m;
        std::sort(order.begin(), order.end(), [&](unsigned a, unsigned b) { return tuples[a] < tuples[b]; });
        for (unsigned m : order) t[std::popcount(m)].push_back(m);
        return t;
    }();
    return table.at(k);
}

// dx^I ^ dx^J = sign * dx^(I|J); 0 if they overlap
inline int wedge_sign(unsigned I, unsigned J) {
    if (I & J) return 0;
    int inv = 0;
    for (int i = 0; i < 4; ++i)
        if (I & (1u << i))
            for (int j = 0; j < i; ++j)
                if (J & (1u << j)) ++inv;
    return (inv % 2) ? -1 : 1;
}

inline int hodge_sign(unsigned I) { return wedge_sign(I, 15u ^ I); }

inline int binomial4(int k) {
    static constexpr int c[5] = {1, 4, 6, 4, 1};
    return c[k];
}

}  // namespace mask

template <class T>
struct FormValue {
    int degree = 0;
    std::array<Alg<T>, 16> comp{};  // only masks of the given degree are meaningful

    FormValue() = default;
    explicit FormValue(int k) : degree(k) {
        if (k < 0 || k > 4) throw std::invalid_argument("FormValue: degree must be in [0,4]");
    }

    Alg<T>& operator[](unsigned m) { return comp[m]; }
    const Alg<T>& operator[](unsigned m) const { return comp[m]; }

    FormValue& operator+=(const FormValue& o) {
        check_same(o);
        for (unsigned m : mask::of_degree(degree)) comp[m] += o.comp[m];
        return *this;
    }
    FormValue& operator-=(const FormValue& o) {
        check_same(o);
        for (unsigned m : mask::of_degree(degree)) comp[m] -= o.comp[m];
        return *this;
    }
    friend FormValue operator+(FormValue a, const FormValue& b) { return a += b; }
    friend FormValue operator-(FormValue a, const FormValue& b) { return a -= b; }
    friend FormValue operator*(double s, FormValue a) {
        for (unsigned m : mask::of_degree(a.degree)) a.comp[m] = s * a.comp[m];
        return a;
    }

    // i-th component in lexicographic multi-index order
    const Alg<T>& component(int i) const { return comp[mask::of_degree(degree).at(i)]; }
    int size() const { return mask::binomial4(degree); }

private:
    void check_same(const FormValue& o) const {
        if (o.degree != degree) throw std::invalid_argument("FormValue: degree mismatch");
    }
};

template <class T>
FormValue<T> from_one_form(const OneForm<T>& a) {
    FormValue<T> f(1);
    for (int mu = 0; mu < 4; ++mu) f.comp[1u << mu] = a[mu];
    return f;
}

template <class T>
OneForm<T> to_one_form(const FormValue<T>& f) {
    if (f.degree != 1) throw std::invalid_argument("to_one_form: degree must be 1");
    OneForm<T> a;
    for (int mu = 0; mu < 4; ++mu) a[mu] = f.comp[1u << mu];
    return a;
}

template <class T>
FormValue<T> hodge_star(const FormValue<T>& v) {
    FormValue<T> r(4 - v.degree);
    for (unsigned m : mask::of_degree(v.degree)) {
        double s = mask::hodge_sign(m);
        r.comp[15u ^ m] = s * v.comp[m];
    }
    return r;
}

// [alpha ^ beta] with the Lie bracket on values; bilinear, any degrees
template <class T>
FormValue<T> wedge_bracket(const FormValue<T>& a, const FormValue<T>& b) {
    if (a.degree + b.degree > 4) throw std::invalid_argument("wedge_bracket: total degree exceeds 4");
    FormValue<T> r(a.degree + b.degree);
    for (unsigned I : mask::of_degree(a.degree))
        for (unsigned J : mask::of_degree(b.degree)) {
            int s = mask::wedge_sign(I, J);
            if (s == 0) continue;
            r.comp[I | J] += double(s) * bracket(a.comp[I], b.comp[J]);
        }
    return r;
}

// pointwise inner product, trace metric on values
template <class T>
T inner(const FormValue<T>& a, const FormValue<T>& b) {
    if (a.degree != b.degree) throw std::invalid_argument("inner: degree mismatch");
    T s(0.0);
    for (unsigned m : mask::of_degree(a.degree)) s = s + trace_inner(a.comp[m], b.comp[m]);
    return s;
}

// ---- operators on jets: a form with Dual<T,4> entries carries its spatial gradient

template <class T>
FormValue<T> value_part(const FormValue<Dual<T, 4>>& w) {
    FormValue<T> r(w.degree);
    for (unsigned m : mask::of_degree(w.degree))
        for (int a = 0; a < 3; ++a) r.comp[m].c[a] = w.comp[m].c[a].v;
    return r;
}

template <class T>
FormValue<T> partial(const FormValue<Dual<T, 4>>& w, int mu) {
    FormValue<T> r(w.degree);
    for (unsigned m : mask::of_degree(w.degree))
        for (int a = 0; a < 3; ++a) r.comp[m].c[a] = w.comp[m].c[a].d[mu];
    return r;
}

template <class T>
FormValue<T> exterior_d_jet(const FormValue<Dual<T, 4>>& w) {
    if (w.degree >= 4) throw std::invalid_argument("exterior_d: degree 4 form");
    FormValue<T> r(w.degree + 1);
    for (unsigned I : mask::of_degree(w.degree))
        for (int mu = 0; mu < 4; ++mu) {
            int s = mask::wedge_sign(1u << mu, I);
            if (s == 0) continue;
            Alg<T> der;
            for (int a = 0; a < 3; ++a) der.c[a] = w.comp[I].c[a].d[mu];
            r.comp[I | (1u << mu)] += double(s) * der;
        }
    return r;
}

// d_A w + eps [A ^ w]
template <class T>
FormValue<T> covariant_d_jet(const FormValue<T>& A, const FormValue<Dual<T, 4>>& w, double eps) {
    if (A.degree != 1) throw std::invalid_argument("covariant_d: connection must be a 1-form");
    FormValue<T> r = exterior_d_jet(w);
    if (w.degree < 4) r += eps * wedge_bracket(A, value_part(w));
    return r;
}

// formal adjoint of d_A: -* d_A *
template <class T>
FormValue<T> codifferential_jet(const FormValue<T>& A, const FormValue<Dual<T, 4>>& w, double eps) {
    if (w.degree < 1) throw std::invalid_argument("codifferential: degree must be >= 1");
    return -1.0 * hodge_star(covariant_d_jet(A, hodge_star(w), eps));
}

// F = dA + (eps/2)[A ^ A]
template <class T>
FormValue<T> curvature_jet(const FormValue<Dual<T, 4>>& A, double eps) {
    FormValue<T> a = value_part(A);
    return exterior_d_jet(A) + (0.5 * eps) * wedge_bracket(a, a);
}

// nabla_mu w_I + eps [A_mu, w_I], indexed [mu][component]
template <class T>
std::array<FormValue<T>, 4> covariant_grad_jet(const FormValue<T>& A, const FormValue<Dual<T, 4>>& w, double eps) {
    std::array<FormValue<T>, 4> g;
    for (int mu = 0; mu < 4; ++mu) {
        g[mu] = partial(w, mu);
        for (unsigned I : mask::of_degree(w.degree)) {
            Alg<T> wi;
            for (int a = 0; a < 3; ++a) wi.c[a] = w.comp[I].c[a].v;
            g[mu].comp[I] += eps * bracket(A.comp[1u << mu], wi);
        }
    }
    return g;
}

// ---- fields

struct Domain {
    enum class Kind { Ball, PuncturedBall, Annulus, R4 };
    Kind kind = Kind::R4;
    Point4 center{};
    double r_in = 0.0;
    double r_out = 1.0;

    static Domain ball(const Point4& c = {}, double r = 1.0) { return {Kind::Ball, c, 0.0, r}; }
    static Domain punctured_ball(const Point4& c, double r = 1.0) { return {Kind::PuncturedBall, c, 0.0, r}; }
    static Domain annulus(const Point4& c, double rin, double rout) { return {Kind::Annulus, c, rin, rout}; }
    static Domain r4() { return {}; }

    bool contains(const Point4& x) const {
        for (double v : x)
            if (!std::isfinite(v)) return false;
        double r = norm4(sub4(x, center));
        const double slack = 1e-12;
        switch (kind) {
            case Kind::Ball: return r <= r_out * (1 + slack);
            case Kind::PuncturedBall: return r > 0.0 && r <= r_out * (1 + slack);
            case Kind::Annulus: return r >= r_in * (1 - slack) && r <= r_out * (1 + slack);
            case Kind::R4: return true;
        }
        return false;
    }
};

struct FormField {
    int degree = 0;
    Domain domain;
    std::function<FormValue<double>(const Point4&)> value;
    std::function<FormValue<S4>(const Point4&)> jet;    // optional
    std::function<FormValue<S44>(const Point4&)> jet2;  // optional
    double fd_scale = 1.0;  // local length scale for the finite-difference fallback

    FormValue<double> operator()(const Point4& x) const {
        check(x);
        return value(x);
    }

    void check(const Point4& x) const {
        if (!domain.contains(x))
            throw std::domain_error("FormField: evaluation outside domain at (" + std::to_string(x[0]) + "," +
                                    std::to_string(x[1]) + "," + std::to_string(x[2]) + "," + std::to_string(x[3]) +
                                    ")");
    }

    // value plus first partials, analytic when available
    FormValue<S4> eval_jet(const Point4& x) const;
};

template <class T>
Vec4<T> seeded_point(const Point4& x) {
    Vec4<T> y;
    for (int i = 0; i < 4; ++i) y[i] = T(x[i]);
    return y;
}

inline Vec4<S4> seeded_s4(const Point4& x) {
    Vec4<S4> y;
    for (int i = 0; i < 4; ++i) y[i] = seed<double, 4>(x[i], i);
    return y;
}

inline Vec4<S44> seeded_s44(const Point4& x) {
    Vec4<S44> y;
    for (int i = 0; i < 4; ++i) {
        S44 v;
        v.v = seed<double, 4>(x[i], i);
        v.d[i] = S4(1.0);
        y[i] = v;
    }
    return y;
}

// Build a field from a generic evaluator f(Vec4<T>) -> FormValue<T>; analytic
// jets come from automatic differentiation of the same expression.
template <class F>
FormField make_field(int degree, const Domain& dom, F f) {
    FormField w;
    w.degree = degree;
    w.domain = dom;
    w.value = [f](const Point4& x) { return f(seeded_point<double>(x)); };
    w.jet = [f](const Point4& x) { return f(seeded_s4(x)); };
    w.jet2 = [f](const Point4& x) { return f(seeded_s44(x)); };
    return w;
}

namespace detail {

inline Point4 shifted(const Point4& x, int mu, double h) {
    Point4 y = x;
    y[mu] += h;
    return y;
}

// central difference with one Richardson level
template <class G>
auto richardson(G g, const Point4& x, int mu, double h) {
    auto d1 = g(shifted(x, mu, h)) - g(shifted(x, mu, -h));
    auto d2 = g(shifted(x, mu, h / 2)) - g(shifted(x, mu, -h / 2));
    // (4 D(h/2) - D(h)) / 3 with D(h) = diff / 2h
    return (1.0 / (3.0 * h)) * (4.0 * d2 - 0.5 * d1);
}

}  // namespace detail

inline FormValue<S4> FormField::eval_jet(const Point4& x) const {
    check(x);
    if (jet) return jet(x);
    FormValue<double> v = value(x);
    FormValue<S4> r(degree);
    const double h = 1e-4 * fd_scale;
    for (unsigned m : mask::of_degree(degree))
        for (int a = 0; a < 3; ++a) r.comp[m].c[a].v = v.comp[m].c[a];
    for (int mu = 0; mu < 4; ++mu) {
        FormValue<double> dv = detail::richardson([this](const Point4& y) { return value(y); }, x, mu, h);
        for (unsigned m : mask::of_degree(degree))
            for (int a = 0; a < 3; ++a) r.comp[m].c[a].d[mu] = dv.comp[m].c[a];
    }
    return r;
}

inline FormField exterior_d(const FormField& w) {
    FormField r;
    r.degree = w.degree + 1;
    if (r.degree > 4) throw std::invalid_argument("exterior_d: degree 4 form");
    r.domain = w.domain;
    r.fd_scale = w.fd_scale;
    r.value = [w](const Point4& x) { return exterior_d_jet(w.eval_jet(x)); };
    if (w.jet2) r.jet = [w](const Point4& x) { return exterior_d_jet(w.jet2(x)); };
    return r;
}

inline FormField covariant_d_eps(const FormField& A, const FormField& w, double eps) {
    if (A.degree != 1) throw std::invalid_argument("covariant_d_eps: connection must be a 1-form");
    if (w.degree > 3) throw std::invalid_argument("covariant_d_eps: degree 4 form");
    FormField r;
    r.degree = w.degree + 1;
    r.domain = w.domain;
    r.fd_scale = w.fd_scale;
    r.value = [A, w, eps](const Point4& x) { return covariant_d_jet(A(x), w.eval_jet(x), eps); };
    if (w.jet2 && A.jet)
        r.jet = [A, w, eps](const Point4& x) { return covariant_d_jet(A.jet(x), w.jet2(x), eps); };
    return r;
}

inline FormField codifferential_eps(const FormField& A, const FormField& w, double eps) {
    if (A.degree != 1) throw std::invalid_argument("codifferential_eps: connection must be a 1-form");
    if (w.degree < 1) throw std::invalid_argument("codifferential_eps: degree must be >= 1");
    FormField r;
    r.degree = w.degree - 1;
    r.domain = w.domain;
    r.fd_scale = w.fd_scale;
    r.value = [A, w, eps](const Point4& x) { return codifferential_jet(A(x), w.eval_jet(x), eps); };
    if (w.jet2 && A.jet)
        r.jet = [A, w, eps](const Point4& x) { return codifferential_jet(A.jet(x), w.jet2(x), eps); };
    return r;
}

inline FormField wedge_bracket(const FormField& a, const FormField& b) {
    if (a.degree != 1 || b.degree != 1) throw std::invalid_argument("wedge_bracket: both fields must be 1-forms");
    FormField r;
    r.degree = 2;
    r.domain = a.domain;
    r.value = [a, b](const Point4& x) { return wedge_bracket(a(x), b(x)); };
    if (a.jet && b.jet) r.jet = [a, b](const Point4& x) { return wedge_bracket(a.jet(x), b.jet(x)); };
    return r;
}

inline FormField curvature_eps(const FormField& A, double eps) {
    if (A.degree != 1) throw std::invalid_argument("curvature_eps: connection must be a 1-form");
    FormField r;
    r.degree = 2;
    r.domain = A.domain;
    r.fd_scale = A.fd_scale;
    r.value = [A, eps](const Point4& x) { return curvature_jet(A.eval_jet(x), eps); };
    if (A.jet2) r.jet = [A, eps](const Point4& x) { return curvature_jet(A.jet2(x), eps); };
    return r;
}

// all 16 components nabla_i alpha_j + eps [A_i, alpha_j] of a 1-form, [i][j]
using GradValue = std::array<std::array<AlgElement, 4>, 4>;

inline GradValue grad_from(const std::array<FormValue<double>, 4>& g) {
    GradValue r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i][j] = g[i].comp[1u << j];
    return r;
}

inline std::function<GradValue(const Point4&)> covariant_grad_eps(const FormField& A, const FormField& alpha,
                                                                  double eps) {
    if (A.degree != 1 || alpha.degree != 1)
        throw std::invalid_argument("covariant_grad_eps: both fields must be 1-forms");
    return [A, alpha, eps](const Point4& x) { return grad_from(covariant_grad_jet(A(x), alpha.eval_jet(x), eps)); };
}

inline double grad_norm2(const GradValue& g) {
    double s = 0.0;
    for (const auto& row : g)
        for (const auto& v : row) s += trace_inner(v, v);
    return s;
}

// debugging dump: x0,x1,x2,x3,component-index,e1,e2,e3
inline void write_field_csv(std::ostream& os, const FormField& w, const std::vector<Point4>& points) {
    os << "x0,x1,x2,x3,component-index,e1,e2,e3\n";
    os.precision(17);
    for (const Point4& x : points) {
        FormValue<double> v = w(x);
        for (int i = 0; i < v.size(); ++i) {
            const AlgElement& c = v.component(i);
            os << x[0] << ',' << x[1] << ',' << x[2] << ',' << x[3] << ',' << i << ',' << c.c[0] << ',' << c.c[1]
               << ',' << c.c[2] << '\n';
        }
    }
}

}  // namespace ymlab
