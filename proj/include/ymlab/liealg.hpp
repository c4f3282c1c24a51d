#pragma once

// su(2) as imaginary quaternions, SU(2) as unit quaternions.
// Basis e_a = (quaternion unit a)/2, so [e1,e2] = e3 and the bracket of
// coefficient vectors is the cross product.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "autodiff.hpp"

namespace ymlab {

template <class T>
struct Quat {
    T w{}, x{}, y{}, z{};

    friend Quat operator+(const Quat& a, const Quat& b) { return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Quat operator-(const Quat& a, const Quat& b) { return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Quat operator*(const Quat& a, const Quat& b) {
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    }
    friend Quat operator*(const T& s, const Quat& a) { return {s * a.w, s * a.x, s * a.y, s * a.z}; }
};

template <class T>
Quat<T> conj(const Quat<T>& q) {
    return {q.w, -q.x, -q.y, -q.z};
}

template <class T>
T norm2(const Quat<T>& q) {
    return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
}

// Lie algebra element X = c[0] e1 + c[1] e2 + c[2] e3
template <class T>
struct Alg {
    std::array<T, 3> c{};

    T& operator[](int i) { return c[i]; }
    const T& operator[](int i) const { return c[i]; }

    Alg& operator+=(const Alg& o) {
        for (int i = 0; i < 3; ++i) c[i] += o.c[i];
        return *this;
    }
    Alg& operator-=(const Alg& o) {
        for (int i = 0; i < 3; ++i) c[i] -= o.c[i];
        return *this;
    }
    friend Alg operator+(Alg a, const Alg& b) { return a += b; }
    friend Alg operator-(Alg a, const Alg& b) { return a -= b; }
    friend Alg operator-(const Alg& a) { return {{-a.c[0], -a.c[1], -a.c[2]}}; }
    friend Alg operator*(const T& s, const Alg& a) { return {{s * a.c[0], s * a.c[1], s * a.c[2]}}; }
    template <class S = T, std::enable_if_t<!std::is_same_v<S, double>, int> = 0>
    friend Alg operator*(double s, const Alg& a) {
        return {{s * a.c[0], s * a.c[1], s * a.c[2]}};
    }

    // coefficient dot product in the e-basis
    T dot(const Alg& o) const { return c[0] * o.c[0] + c[1] * o.c[1] + c[2] * o.c[2]; }
};

using AlgElement = Alg<double>;

inline AlgElement basis_e(int a) {
    AlgElement X;
    X.c[a - 1] = 1.0;
    return X;
}

template <class T>
Alg<T> bracket(const Alg<T>& a, const Alg<T>& b) {
    return {{a.c[1] * b.c[2] - a.c[2] * b.c[1], a.c[2] * b.c[0] - a.c[0] * b.c[2],
             a.c[0] * b.c[1] - a.c[1] * b.c[0]}};
}

template <class T>
Alg<T> eps_bracket(const Alg<T>& a, const Alg<T>& b, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps_bracket: eps must be positive");
    Alg<T> r = bracket(a, b);
    for (auto& v : r.c) v = eps * v;
    return r;
}

// metric used for forms and all physical norms: -tr(XY) in the defining
// representation, which is half the coefficient dot product
template <class T>
T trace_inner(const Alg<T>& a, const Alg<T>& b) {
    return 0.5 * a.dot(b);
}

// imaginary quaternion <-> algebra element
template <class T>
Quat<T> to_quat(const Alg<T>& a) {
    return {T(0.0), 0.5 * a.c[0], 0.5 * a.c[1], 0.5 * a.c[2]};
}

template <class T>
Alg<T> from_imag(const Quat<T>& q) {
    return {{2.0 * q.x, 2.0 * q.y, 2.0 * q.z}};
}

class GroupElement {
public:
    GroupElement() = default;
    GroupElement(double q0, double q1, double q2, double q3) : q_{q0, q1, q2, q3} { renormalize(); }
    explicit GroupElement(const Quat<double>& q) : q_(q) { renormalize(); }

    static GroupElement identity() { return {}; }

    const Quat<double>& quat() const { return q_; }
    double q0() const { return q_.w; }
    double q1() const { return q_.x; }
    double q2() const { return q_.y; }
    double q3() const { return q_.z; }

    GroupElement inverse() const { return GroupElement(conj(q_)); }
    GroupElement operator-() const { return GroupElement(Quat<double>{-q_.w, -q_.x, -q_.y, -q_.z}); }
    friend GroupElement operator*(const GroupElement& a, const GroupElement& b) { return GroupElement(a.q_ * b.q_); }

    // rotation matrix R with Ad_g X = R X on coefficient vectors
    std::array<std::array<double, 3>, 3> ad_matrix() const {
        const double w = q_.w, x = q_.x, y = q_.y, z = q_.z;
        return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                 {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                 {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
    }

private:
    void renormalize() {
        double n = std::sqrt(norm2(q_));
        if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("GroupElement: zero or non-finite quaternion");
        q_ = (1.0 / n) * q_;
    }
    Quat<double> q_{1.0, 0.0, 0.0, 0.0};
};

inline GroupElement exp_map(const AlgElement& X) {
    double vx = 0.5 * X.c[0], vy = 0.5 * X.c[1], vz = 0.5 * X.c[2];
    double th = std::sqrt(vx * vx + vy * vy + vz * vz);
    if (th == 0.0) return GroupElement::identity();
    double s = std::sin(th) / th;
    return GroupElement(std::cos(th), s * vx, s * vy, s * vz);
}

// Ad action with a precomputed rotation matrix; linear, so valid for any scalar
template <class T>
Alg<T> apply_ad(const std::array<std::array<double, 3>, 3>& R, const Alg<T>& X) {
    Alg<T> r;
    for (int i = 0; i < 3; ++i) r.c[i] = R[i][0] * X.c[0] + R[i][1] * X.c[1] + R[i][2] * X.c[2];
    return r;
}

template <class T>
Alg<T> adjoint(const GroupElement& g, const Alg<T>& X) {
    return apply_ad(g.ad_matrix(), X);
}

// xi_i = ad(e_i) on su(2) ~ so(3)
inline AlgElement so3_to_su2(int i) {
    if (i < 1 || i > 3) throw std::out_of_range("so3_to_su2: index must be 1, 2 or 3, got " + std::to_string(i));
    return basis_e(i);
}

// the so(3) matrix xi_i acting on coefficient vectors
inline std::array<std::array<double, 3>, 3> so3_matrix(int i) {
    std::array<std::array<double, 3>, 3> m{};
    for (int b = 1; b <= 3; ++b) {
        AlgElement col = bracket(so3_to_su2(i), basis_e(b));
        for (int a = 0; a < 3; ++a) m[a][b - 1] = col.c[a];
    }
    return m;
}

// tangent xi_i at g, right-translated: d/dt exp(t e_i) g
struct So3Direction {
    int index = 1;
    GroupElement base;

    GroupElement flow(double t) const { return exp_map(t * so3_to_su2(index)) * base; }
};

}  // namespace ymlab
