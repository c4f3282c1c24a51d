#pragma once

// Forward-mode dual numbers. Nest Dual<Dual<double,M>,N> for mixed or
// higher derivatives; every nesting level carries its own seeds.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace ymlab {

template <class T, std::size_t N>
struct Dual {
    T v{};
    std::array<T, N> d{};

    constexpr Dual() = default;
    constexpr Dual(double c) : v(c) {}
    constexpr Dual(const T& value, const std::array<T, N>& grad) : v(value), d(grad) {}

    template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
    constexpr Dual(const U& value) : v(value) {}

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }

    friend Dual operator-(const Dual& a) {
        Dual r;
        r.v = -a.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
        return r;
    }
    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v * b.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
        return r;
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r;
        T inv = T(1.0) / b.v;
        r.v = a.v * inv;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
        return r;
    }

    // scalar fast paths
    friend Dual operator*(double s, const Dual& a) {
        Dual r;
        r.v = s * a.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = s * a.d[i];
        return r;
    }
    friend Dual operator*(const Dual& a, double s) { return s * a; }
    friend Dual operator/(const Dual& a, double s) { return (1.0 / s) * a; }
    friend Dual operator+(const Dual& a, double s) {
        Dual r = a;
        r.v += s;
        return r;
    }
    friend Dual operator+(double s, const Dual& a) { return a + s; }
    friend Dual operator-(const Dual& a, double s) { return a + (-s); }
    friend Dual operator-(double s, const Dual& a) { return (-a) + s; }
};

template <class T>
struct is_dual : std::false_type {};
template <class T, std::size_t N>
struct is_dual<Dual<T, N>> : std::true_type {};

// innermost double value
inline double val(double x) { return x; }

// generic code calls these unqualified for both double and Dual
using std::cos;
using std::exp;
using std::sin;
using std::sqrt;
template <class T, std::size_t N>
double val(const Dual<T, N>& x) {
    return val(x.v);
}

namespace detail {
// f(v), f'(v) pair applied through the chain rule
template <class T, std::size_t N, class F0, class F1>
Dual<T, N> chain(const Dual<T, N>& a, F0 f0, F1 f1) {
    Dual<T, N> r;
    r.v = f0(a.v);
    T s = f1(a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = s * a.d[i];
    return r;
}
}  // namespace detail

template <class T, std::size_t N>
Dual<T, N> sqrt(const Dual<T, N>& a) {
    using std::sqrt;
    Dual<T, N> r;
    r.v = sqrt(a.v);
    T s = T(0.5) / r.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = s * a.d[i];
    return r;
}

template <class T, std::size_t N>
Dual<T, N> sin(const Dual<T, N>& a) {
    using std::cos;
    using std::sin;
    return detail::chain(a, [](const T& x) { return sin(x); }, [](const T& x) { return cos(x); });
}

template <class T, std::size_t N>
Dual<T, N> cos(const Dual<T, N>& a) {
    using std::cos;
    using std::sin;
    return detail::chain(a, [](const T& x) { return cos(x); }, [](const T& x) { return -sin(x); });
}

template <class T, std::size_t N>
Dual<T, N> exp(const Dual<T, N>& a) {
    using std::exp;
    Dual<T, N> r;
    r.v = exp(a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = r.v * a.d[i];
    return r;
}

// integer power by repeated squaring; works for double and any Dual
template <class T>
T ipow(const T& x, int n) {
    T r(1.0);
    T b = x;
    while (n > 0) {
        if (n & 1) r = r * b;
        b = b * b;
        n >>= 1;
    }
    return r;
}

// variable seeded in slot k of the outermost level
template <class T, std::size_t N>
Dual<T, N> seed(const T& value, std::size_t k) {
    Dual<T, N> r;
    r.v = value;
    r.d[k] = T(1.0);
    return r;
}

}  // namespace ymlab
