#pragma once

// Polar product rules on balls, annuli and R^4 centred at the concentration
// point p. Radial panels are graded through {l/4, l/2, l, 2l} and then grow
// geometrically; unbounded regions use r = R1/s on geometric s-panels.
// S^3 is parametrised by Hopf coordinates
//   w = (sqrt(1-u) cos a, sqrt(1-u) sin a, sqrt(u) cos b, sqrt(u) sin b),
// measure (1/2) du da db, Gauss-Legendre in u, trapezoid in a and b.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forms.hpp"

namespace ymlab {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GaussRule {
    std::vector<double> x;  // on [-1,1]
    std::vector<double> w;
};

// Newton iteration on P_n with the usual cosine initial guesses
inline GaussRule compute_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // derivative at the converged root
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        g.x[i] = -z;
        g.x[n - 1 - i] = z;
        g.w[i] = g.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return g;
}

inline const GaussRule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

// pairwise (cascade) summation of a stream of equal-length vectors; the
// reduction tree depends only on the number of pushes
class PairwiseAccumulator {
public:
    explicit PairwiseAccumulator(std::size_t width = 1) : width_(width) {}

    void push(const double* v) {
        std::vector<double> carry(v, v + width_);
        std::size_t lvl = 0;
        while (true) {
            if (lvl == slots_.size()) {
                slots_.push_back(std::move(carry));
                full_.push_back(true);
                return;
            }
            if (!full_[lvl]) {
                slots_[lvl] = std::move(carry);
                full_[lvl] = true;
                return;
            }
            for (std::size_t i = 0; i < width_; ++i) carry[i] = slots_[lvl][i] + carry[i];
            full_[lvl] = false;
            ++lvl;
        }
    }
    void push(double v) { push(&v); }

    std::vector<double> total() const {
        std::vector<double> s(width_, 0.0);
        for (std::size_t l = 0; l < slots_.size(); ++l)
            if (full_[l])
                for (std::size_t i = 0; i < width_; ++i) s[i] += slots_[l][i];
        return s;
    }

private:
    std::size_t width_;
    std::vector<std::vector<double>> slots_;
    std::vector<bool> full_;
};

inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

struct QuadratureRule {
    std::vector<Point4> nodes;
    std::vector<double> weights;
    std::vector<unsigned char> inner;     // |x-p| < lambda/4: inner chart
    std::vector<unsigned char> exterior;  // outside the unit ball (weighted L2 term uses w)
    std::vector<unsigned char> far_tail;  // outermost tail panel, for divergence detection
    Point4 center{};
    double lambda = 0.0;
    std::array<double, 4> scales{};
    double tol = 1e-4;
    int level = 0;
    double error_estimate = 0.0;

    std::size_t size() const { return nodes.size(); }
};

enum class Region {
    Ball,      // B_R(p)
    UnitBall,  // B^4(0,1), polar about p
    R4,        // all of R^4, polar about p
    Weighted,  // unit ball polar about p plus the exterior about the origin
};

struct RuleLevel {
    int n_r, n_u, n_phi;
};

inline RuleLevel rule_level(int level) {
    static constexpr RuleLevel table[] = {{8, 5, 10}, {10, 7, 14}, {12, 9, 18}, {16, 12, 24}, {20, 16, 32}};
    if (level < 0 || level > 4) throw std::invalid_argument("rule_level: level out of range");
    return table[level];
}

inline constexpr int kMaxRuleLevel = 4;

namespace detail {

struct Direction {
    Point4 w;
    double weight;
};

inline std::vector<Direction> sphere_rule(const RuleLevel& L) {
    const GaussRule& g = gauss_legendre(L.n_u);
    std::vector<Direction> dirs;
    dirs.reserve(static_cast<std::size_t>(L.n_u) * L.n_phi * L.n_phi);
    const double two_pi = 2.0 * std::numbers::pi;
    const double dphi = two_pi / L.n_phi;
    for (int iu = 0; iu < L.n_u; ++iu) {
        double u = 0.5 * (g.x[iu] + 1.0);
        double wu = 0.5 * g.w[iu];
        double cu = std::sqrt(1.0 - u), su = std::sqrt(u);
        for (int ia = 0; ia < L.n_phi; ++ia) {
            double a = dphi * ia;
            for (int ib = 0; ib < L.n_phi; ++ib) {
                double b = dphi * (ib + 0.5);
                dirs.push_back({{cu * std::cos(a), cu * std::sin(a), su * std::cos(b), su * std::sin(b)},
                                0.5 * wu * dphi * dphi});
            }
        }
    }
    return dirs;
}

// breakpoints from 0 to R: fixed scales, then doubling
inline std::vector<double> radial_breaks(double lambda, double R) {
    std::vector<double> b{0.0};
    for (double s : {0.25 * lambda, 0.5 * lambda, lambda, 2.0 * lambda}) {
        if (s >= R * (1 - 1e-12)) break;
        b.push_back(s);
    }
    while (b.back() > 0.0 && 2.0 * b.back() < R * (1 - 1e-12)) b.push_back(2.0 * b.back());
    // avoid a sliver last panel
    if (b.size() > 1 && R - b.back() < 0.25 * b.back() && b.back() > 2.0 * lambda) b.pop_back();
    b.push_back(R);
    return b;
}

inline constexpr int kTailPanels = 8;

struct Builder {
    QuadratureRule& rule;
    RuleLevel L;

    void add(const Point4& x, double w, bool ext, bool far) {
        rule.nodes.push_back(x);
        rule.weights.push_back(w);
        rule.inner.push_back(norm4(sub4(x, rule.center)) < 0.25 * rule.lambda ? 1 : 0);
        rule.exterior.push_back(ext ? 1 : 0);
        rule.far_tail.push_back(far ? 1 : 0);
    }

    // r^3 dr over [r0, r1] along direction w from c
    void radial_panel(const Point4& c, const Direction& d, double r0, double r1, bool ext) {
        const GaussRule& g = gauss_legendre(L.n_r);
        double h = 0.5 * (r1 - r0), m = 0.5 * (r1 + r0);
        for (int i = 0; i < L.n_r; ++i) {
            double r = m + h * g.x[i];
            Point4 x{c[0] + r * d.w[0], c[1] + r * d.w[1], c[2] + r * d.w[2], c[3] + r * d.w[3]};
            add(x, d.weight * h * g.w[i] * r * r * r, ext, false);
        }
    }

    // r in [R1, inf) via r = R1/s: r^3 dr = R1^4 s^-5 ds
    void tail(const Point4& c, const Direction& d, double R1, bool ext) {
        const GaussRule& g = gauss_legendre(L.n_r);
        double hi = 1.0;
        for (int k = 0; k <= kTailPanels; ++k) {
            double lo = (k == kTailPanels) ? 0.0 : 0.5 * hi;
            double h = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
            for (int i = 0; i < L.n_r; ++i) {
                double s = m + h * g.x[i];
                double r = R1 / s;
                Point4 x{c[0] + r * d.w[0], c[1] + r * d.w[1], c[2] + r * d.w[2], c[3] + r * d.w[3]};
                double R2 = R1 * R1;
                add(x, d.weight * h * g.w[i] * R2 * R2 / (s * s * s * s * s), ext, k == kTailPanels);
            }
            hi = lo;
        }
    }

    void polar_ball(const Point4& c, double lambda, std::function<double(const Point4&)> radius, bool ext) {
        for (const Direction& d : sphere_rule(L)) {
            double R = radius(d.w);
            std::vector<double> b = radial_breaks(lambda, R);
            for (std::size_t k = 0; k + 1 < b.size(); ++k) radial_panel(c, d, b[k], b[k + 1], ext);
        }
    }
};

// distance from p to the unit sphere along w (|p| < 1)
inline double unit_sphere_exit(const Point4& p, const Point4& w) {
    double pw = p[0] * w[0] + p[1] * w[1] + p[2] * w[2] + p[3] * w[3];
    double pp = p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
    return -pw + std::sqrt(pw * pw + 1.0 - pp);
}

}  // namespace detail

struct RuleSpec {
    Region region = Region::UnitBall;
    Point4 center{};
    double lambda = 0.1;
    double R = 1.0;  // Region::Ball only
};

inline QuadratureRule build_rule(const RuleSpec& spec, int level) {
    if (!(spec.lambda > 0.0)) throw std::invalid_argument("quadrature: lambda must be positive");
    QuadratureRule rule;
    rule.center = spec.center;
    rule.lambda = spec.lambda;
    rule.scales = {0.25 * spec.lambda, 0.5 * spec.lambda, spec.lambda, 2.0 * spec.lambda};
    rule.level = level;
    detail::Builder b{rule, rule_level(level)};
    const Point4 p = spec.center;
    const double lam = spec.lambda;
    switch (spec.region) {
        case Region::Ball: {
            if (!(spec.R > 0.0)) throw std::invalid_argument("ball_rule: radius must be positive");
            if (std::isinf(spec.R)) {
                double R1 = std::max(1.0 + norm4(p), 8.0 * lam);
                for (const auto& d : detail::sphere_rule(b.L)) {
                    std::vector<double> br = detail::radial_breaks(lam, R1);
                    for (std::size_t k = 0; k + 1 < br.size(); ++k) b.radial_panel(p, d, br[k], br[k + 1], false);
                    b.tail(p, d, R1, false);
                }
            } else {
                b.polar_ball(p, lam, [&](const Point4&) { return spec.R; }, false);
            }
            break;
        }
        case Region::UnitBall:
        case Region::Weighted: {
            if (norm4(p) >= 1.0) throw std::invalid_argument("quadrature: centre must lie inside the unit ball");
            b.polar_ball(p, lam, [&](const Point4& w) { return detail::unit_sphere_exit(p, w); }, false);
            if (spec.region == Region::Weighted)
                for (const auto& d : detail::sphere_rule(b.L)) b.tail(Point4{}, d, 1.0, true);
            break;
        }
        case Region::R4: {
            double R1 = std::max(1.0 + norm4(p), 8.0 * lam);
            for (const auto& d : detail::sphere_rule(b.L)) {
                std::vector<double> br = detail::radial_breaks(lam, R1);
                for (std::size_t k = 0; k + 1 < br.size(); ++k) b.radial_panel(p, d, br[k], br[k + 1], false);
                b.tail(p, d, R1, false);
            }
            break;
        }
    }
    return rule;
}

inline double integrate(const QuadratureRule& rule, const std::function<double(const Point4&)>& density) {
    std::vector<double> terms(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
        double f = density(rule.nodes[i]);
        if (!std::isfinite(f)) {
            const Point4& x = rule.nodes[i];
            std::ostringstream os;
            os << "integrate: non-finite density at node " << i << " (" << x[0] << ", " << x[1] << ", " << x[2]
               << ", " << x[3] << ")";
            throw NumericalError(os.str());
        }
        terms[i] = rule.weights[i] * f;
    }
    return pairwise_sum(terms.data(), terms.size());
}

namespace detail {

inline double smooth_shell(double t) {
    // C^1 bump on [1,2], peaks mid-shell
    if (t <= 1.0 || t >= 2.0) return 0.0;
    double s = (t - 1.0) * (2.0 - t);
    return s * s;
}

// probe integrands with the radial and angular structure of the actual ones
inline std::vector<std::function<double(const Point4&)>> probes(const RuleSpec& spec) {
    const Point4 p = spec.center;
    const double lam = spec.lambda;
    auto y_of = [p](const Point4& x) { return sub4(x, p); };
    std::vector<std::function<double(const Point4&)>> f;
    f.push_back([](const Point4& x) {
        double q = 1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        return 1.0 / (q * q * q);
    });
    f.push_back([=](const Point4& x) {
        Point4 y = y_of(x);
        double r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
        double q = lam * lam + r2;
        double ang = r2 > 0 ? (y[0] * y[1] + y[2] * y[2]) / r2 : 0.0;
        return lam * lam * lam * lam / (q * q * q * q) * (1.0 + ang * ang);
    });
    f.push_back([=](const Point4& x) {
        Point4 y = y_of(x);
        double r = norm4(y);
        double a = r > 0 ? y[1] / r : 0.0;
        return smooth_shell(r / lam) * a * a / (lam * lam);
    });
    f.push_back([=](const Point4& x) {
        double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        double c = r2 < 1.0 ? (1.0 - r2) : 0.0;
        return c * c * c * c * (1.0 + x[0] + 0.5 * x[1] * x[2]);
    });
    return f;
}

}  // namespace detail

// smallest level whose probe integrals agree with the next level within tol
inline QuadratureRule adaptive_rule(const RuleSpec& spec, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("quadrature: tol must be positive");
    auto pr = detail::probes(spec);
    QuadratureRule cur = build_rule(spec, 0);
    for (int level = 0; level < kMaxRuleLevel; ++level) {
        QuadratureRule next = build_rule(spec, level + 1);
        double err = 0.0;
        for (const auto& f : pr) {
            double a = integrate(cur, f), b = integrate(next, f);
            if (a == 0.0 && b == 0.0) continue;  // probe supported outside the region
            double scale = std::max(std::abs(b), std::numeric_limits<double>::min());
            err = std::max(err, std::abs(a - b) / scale);
        }
        if (err <= tol) {
            cur.tol = tol;
            cur.error_estimate = err;
            return cur;
        }
        cur = std::move(next);
    }
    throw NumericalError("quadrature: tolerance " + std::to_string(tol) + " not reached at the node budget");
}

inline QuadratureRule ball_rule(const Point4& p, double lambda, double R, double tol) {
    if (!(lambda > 0.0) || !(R > 0.0)) throw std::invalid_argument("ball_rule: need lambda > 0 and R > 0");
    return adaptive_rule({Region::Ball, p, lambda, R}, tol);
}

inline QuadratureRule unit_ball_rule(const Point4& p, double lambda, double tol) {
    return adaptive_rule({Region::UnitBall, p, lambda, 1.0}, tol);
}

inline QuadratureRule r4_rule(const Point4& p, double lambda, double tol) {
    return adaptive_rule({Region::R4, p, lambda, 0.0}, tol);
}

inline double weight_w(const Point4& x) {
    double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    return r2 <= 1.0 ? 1.0 : 1.0 / ((1.0 + r2) * (1.0 + r2));
}

inline QuadratureRule weighted_r4_rule(const Point4& p, double lambda, double tol) {
    return adaptive_rule({Region::Weighted, p, lambda, 0.0}, tol);
}

// integral of w(x) f(x); the weight is applied per node
inline double integrate_weighted(const QuadratureRule& rule, const std::function<double(const Point4&)>& density) {
    return integrate(rule, [&](const Point4& x) { return weight_w(x) * density(x); });
}

}  // namespace ymlab
