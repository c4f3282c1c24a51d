#pragma once

// Log-log slope fits and scaling verdicts over an eps-sweep.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace ymlab {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS in natural-log units
    int count = 0;
};

// least squares of log(value) against log(eps)
inline SlopeFit fit_slope(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 3) throw std::invalid_argument("fit_slope: need at least 3 points");
    double n = double(pts.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [e, v] : pts) {
        if (!(e > 0.0)) throw std::invalid_argument("fit_slope: eps must be positive");
        if (!(v > 0.0)) throw std::invalid_argument("fit_slope: values must be positive");
        double x = std::log(e), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    if (!(std::abs(den) > 0.0)) throw std::invalid_argument("fit_slope: eps values must not all coincide");
    SlopeFit f;
    f.count = int(pts.size());
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0.0;
    for (auto [e, v] : pts) {
        double r = std::log(v) - (f.intercept + f.slope * std::log(e));
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

inline constexpr double kMaxFitResidual = 0.1;

enum class Verdict {
    SlopeWindow,   // two-sided: slope in [lo, hi]
    SlopeAtLeast,  // slope >= lo, or every value below `floor`
    Bounded,       // value * eps^-k: max/min <= lo, or non-increasing as eps -> 0
    Band,          // value * eps^-k: max/min <= lo
    AtMost,        // every value <= hi
    Info,          // reported only
};

struct Quantity {
    std::string name;
    double exponent = 0.0;  // predicted power of eps
    Verdict verdict = Verdict::Info;
    double lo = 0.0, hi = 0.0;
    double floor = 0.0;  // values at or below are numerically zero
    std::vector<double> eps, values;

    // filled by evaluate()
    bool fitted = false;
    SlopeFit fit;
    bool pass = true;
    std::string note;

    void add(double e, double v) {
        eps.push_back(e);
        values.push_back(v);
    }

    std::vector<double> ratios() const {
        std::vector<double> r;
        for (std::size_t i = 0; i < eps.size(); ++i) r.push_back(values[i] * std::pow(eps[i], -exponent));
        return r;
    }

    void evaluate() {
        pass = true;
        note.clear();
        fitted = false;
        bool positive = !values.empty() && std::all_of(values.begin(), values.end(), [](double v) { return v > 0; });
        if (positive && values.size() >= 3) {
            std::vector<std::pair<double, double>> pts;
            for (std::size_t i = 0; i < eps.size(); ++i) pts.push_back({eps[i], values[i]});
            fit = fit_slope(pts);
            fitted = true;
        }
        switch (verdict) {
            case Verdict::Info: break;
            case Verdict::AtMost: {
                double m = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
                pass = m <= hi;
                note = "max " + fmt(m) + (pass ? " <= " : " > ") + fmt(hi);
                break;
            }
            case Verdict::SlopeWindow: {
                if (!fitted) {
                    pass = false;
                    note = "no fit (nonpositive values or fewer than 3 points)";
                    break;
                }
                bool in = fit.slope >= lo && fit.slope <= hi;
                bool ok = fit.residual < kMaxFitResidual;
                pass = in && ok;
                note = "slope " + fmt(fit.slope) + " in [" + fmt(lo) + ", " + fmt(hi) + "]: " + (in ? "yes" : "no") +
                       "; residual " + fmt(fit.residual) + (ok ? "" : " too large");
                break;
            }
            case Verdict::SlopeAtLeast: {
                bool all_floor = !values.empty() &&
                                 std::all_of(values.begin(), values.end(), [this](double v) { return std::abs(v) <= floor; });
                if (all_floor) {
                    note = "every value below " + fmt(floor) + " (exact)";
                    break;
                }
                if (!fitted) {
                    pass = false;
                    note = "no fit (nonpositive values or fewer than 3 points)";
                    break;
                }
                bool ge = fit.slope >= lo;
                bool ok = fit.residual < kMaxFitResidual;
                pass = ge && ok;
                note = "slope " + fmt(fit.slope) + (ge ? " >= " : " < ") + fmt(lo) + "; residual " + fmt(fit.residual) +
                       (ok ? "" : " too large");
                break;
            }
            case Verdict::Band:
            case Verdict::Bounded: {
                std::vector<double> r = ratios();
                bool all_floor = !values.empty() &&
                                 std::all_of(values.begin(), values.end(), [this](double v) { return std::abs(v) <= floor; });
                if (all_floor) {
                    note = "every value below " + fmt(floor);
                    break;
                }
                double mx = 0.0, mn = INFINITY;
                for (double v : r) {
                    mx = std::max(mx, std::abs(v));
                    mn = std::min(mn, std::abs(v));
                }
                double spread = mn > 0 ? mx / mn : INFINITY;
                bool tight = spread <= lo;
                note = "ratio max/min " + fmt(spread) + (tight ? " <= " : " > ") + fmt(lo);
                pass = tight;
                if (!tight && verdict == Verdict::Bounded) {
                    // non-increasing as eps decreases: slope of the ratio in eps is >= 0
                    bool dec = false;
                    if (fitted) {
                        double rs = fit.slope - exponent;
                        dec = rs >= 0.0;
                        note += "; ratio slope in eps " + fmt(rs) + (dec ? " >= 0 (decreasing)" : " < 0 (growing)");
                    }
                    pass = dec;
                }
                break;
            }
        }
    }

    static std::string fmt(double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return buf;
    }
};

struct EstimateReport {
    std::string lemma;
    double tol = 1e-4;
    std::vector<Quantity> quantities;

    Quantity& add(Quantity q) {
        quantities.push_back(std::move(q));
        return quantities.back();
    }

    Quantity* find(const std::string& name) {
        for (auto& q : quantities)
            if (q.name == name) return &q;
        return nullptr;
    }
    const Quantity* find(const std::string& name) const {
        for (const auto& q : quantities)
            if (q.name == name) return &q;
        return nullptr;
    }

    void evaluate() {
        for (auto& q : quantities) q.evaluate();
    }

    bool all_pass() const {
        return std::all_of(quantities.begin(), quantities.end(), [](const Quantity& q) { return q.pass; });
    }
};

}  // namespace ymlab
