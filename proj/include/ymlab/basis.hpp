#pragma once

// Inner products (alpha, beta)_{A;1,2} on a shared quadrature rule, the
// Gram-Schmidt bases built from the eight parameter derivatives of A(q)
// and of A~(q), the induced vector fields q_i, and projections.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forms.hpp"
#include "instanton.hpp"
#include "quadrature.hpp"

namespace ymlab {

using Mat8 = Eigen::Matrix<double, kNumParams, kNumParams>;
using Vec8 = Eigen::Matrix<double, kNumParams, 1>;

// ---- pointwise H^1 vectors

// Entries whose plain dot product is the pointwise density of the product:
// sqrt(1/2)(nabla_mu a_nu + eps[A_mu, a_nu]) for all 16 (mu,nu), then
// sqrt(w/2) a_nu. The 1/2 is the trace metric.
using CovVec = std::array<double, 60>;

inline CovVec cov_vector(const OneForm<double>& A, const Jet1& a, double eps, double l2_weight = 1.0) {
    static const double s = std::sqrt(0.5);
    CovVec v;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
            Alg<double> av{{a[nu].c[0].v, a[nu].c[1].v, a[nu].c[2].v}};
            Alg<double> br = bracket(A[mu], av);
            for (int c = 0; c < 3; ++c) v[(mu * 4 + nu) * 3 + c] = s * (a[nu].c[c].d[mu] + eps * br.c[c]);
        }
    double sw = std::sqrt(0.5 * l2_weight);
    for (int nu = 0; nu < 4; ++nu)
        for (int c = 0; c < 3; ++c) v[48 + nu * 3 + c] = sw * a[nu].c[c].v;
    return v;
}

inline double dot60(const CovVec& a, const CovVec& b) {
    double s = 0.0;
    for (int i = 0; i < 60; ++i) s += a[i] * b[i];
    return s;
}

// Gram matrix of n fields streamed over rule nodes. produce(i, conn, fields,
// l2_weight) fills the data at node i and returns false to skip the node.
template <class Producer>
Eigen::MatrixXd stream_gram(const QuadratureRule& rule, double eps, int n, Producer&& produce) {
    const int m = n * (n + 1) / 2;
    PairwiseAccumulator acc(m);
    std::vector<Jet1> fields(n);
    std::vector<CovVec> cv(n);
    std::vector<double> row(m);
    OneForm<double> conn;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        double l2w = 1.0;
        if (!produce(i, conn, fields, l2w)) continue;
        for (int k = 0; k < n; ++k) cv[k] = cov_vector(conn, fields[k], eps, l2w);
        const double w = rule.weights[i];
        int idx = 0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b <= a; ++b) {
                double d = w * dot60(cv[a], cv[b]);
                if (!std::isfinite(d)) {
                    const Point4& x = rule.nodes[i];
                    std::ostringstream os;
                    os << "non-finite inner-product density at node " << i << " (" << x[0] << ", " << x[1] << ", "
                       << x[2] << ", " << x[3] << ")";
                    throw NumericalError(os.str());
                }
                row[idx++] = d;
            }
        acc.push(row.data());
    }
    std::vector<double> t = acc.total();
    Eigen::MatrixXd G(n, n);
    int idx = 0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b <= a; ++b) G(a, b) = G(b, a) = t[idx++];
    return G;
}

// ---- charted fields

// a section of T*B^4 (x) Ad P given in both trivialisations
struct ChartedField {
    std::function<Jet1(const Point4&, Chart)> jet;

    static ChartedField single(const FormField& f) {
        return {[f](const Point4& x, Chart) {
            FormValue<S4> v = f.eval_jet(x);
            return to_one_form(v);
        }};
    }
};

// the connection used by the covariant derivative in the product
struct ConnectionView {
    std::function<OneForm<double>(const Point4&, Chart)> value;

    static ConnectionView trivial() {
        return {[](const Point4&, Chart) { return OneForm<double>{}; }};
    }
    static ConnectionView of(const ChartedConnection& A) {
        return {[A](const Point4& x, Chart c) { return A.value(c, x); }};
    }
    static ConnectionView single(const FormField& A) {
        return {[A](const Point4& x, Chart) { return to_one_form(A(x)); }};
    }
};

inline Chart chart_of(const QuadratureRule& rule, std::size_t i) { return rule.inner[i] ? Chart::Inner : Chart::Outer; }

// (alpha, beta)_{A;1,2;B^4} on the interior nodes of the rule
inline double inner_ball(const ChartedField& a, const ChartedField& b, const ConnectionView& A, double eps,
                         const QuadratureRule& rule) {
    Eigen::MatrixXd G = stream_gram(rule, eps, 2, [&](std::size_t i, OneForm<double>& conn, std::vector<Jet1>& f,
                                                      double& w) {
        if (rule.exterior[i]) return false;
        Chart c = chart_of(rule, i);
        conn = A.value(rule.nodes[i], c);
        f[0] = a.jet(rule.nodes[i], c);
        f[1] = b.jet(rule.nodes[i], c);
        w = 1.0;
        return true;
    });
    return G(1, 0);
}

inline double inner_ball(const FormField& a, const FormField& b, const FormField& A, double eps,
                         const QuadratureRule& rule) {
    return inner_ball(ChartedField::single(a), ChartedField::single(b), ConnectionView::single(A), eps, rule);
}

struct WeightedProduct {
    double value = 0.0;
    double far_tail_fraction = 0.0;  // share of the L2 mass in the outermost tail panel
};

// derivative term over R^4 plus the w-weighted L2 term; a tail that keeps
// contributing in the outermost panel is reported as non-convergent
inline WeightedProduct inner_weighted_checked(const ChartedField& a, const ChartedField& b, const ConnectionView& A,
                                              double eps, const QuadratureRule& rule) {
    Eigen::MatrixXd G = stream_gram(rule, eps, 2, [&](std::size_t i, OneForm<double>& conn, std::vector<Jet1>& f,
                                                      double& w) {
        Chart c = chart_of(rule, i);
        conn = A.value(rule.nodes[i], c);
        f[0] = a.jet(rule.nodes[i], c);
        f[1] = b.jet(rule.nodes[i], c);
        w = weight_w(rule.nodes[i]);
        return true;
    });
    Eigen::MatrixXd T = stream_gram(rule, eps, 2, [&](std::size_t i, OneForm<double>& conn, std::vector<Jet1>& f,
                                                      double& w) {
        if (!rule.far_tail[i]) return false;
        Chart c = chart_of(rule, i);
        conn = A.value(rule.nodes[i], c);
        f[0] = a.jet(rule.nodes[i], c);
        f[1] = b.jet(rule.nodes[i], c);
        w = weight_w(rule.nodes[i]);
        return true;
    });
    WeightedProduct r;
    r.value = G(1, 0);
    double scale = std::sqrt(std::abs(G(0, 0) * G(1, 1)));
    r.far_tail_fraction = scale > 0 ? std::sqrt(std::abs(T(0, 0) * T(1, 1))) / scale : 0.0;
    return r;
}

inline double inner_weighted(const ChartedField& a, const ChartedField& b, const ConnectionView& A, double eps,
                             const QuadratureRule& rule) {
    WeightedProduct r = inner_weighted_checked(a, b, A, eps, rule);
    if (r.far_tail_fraction > rule.tol)
        throw NumericalError("inner_weighted: tail not convergent (outermost panel carries " +
                             std::to_string(r.far_tail_fraction) + " of the norm)");
    return r.value;
}

// ---- Gram-Schmidt

enum class Product { Ball, Weighted };

inline const char* product_name(Product p) { return p == Product::Ball ? "ball" : "weighted"; }

struct GramBasis {
    Product product = Product::Ball;
    // recursion table: f_i = T_ii r_i + sum_{j<i} T_ij f_j
    Mat8 table = Mat8::Zero();
    // raw coefficients: f_i = sum_k C_ik r_k; row i is the vector field q_i
    Mat8 C = Mat8::Zero();
    Mat8 gram_raw = Mat8::Zero();
    double condition = 1.0;

    // q_i from the recursion q_i = T_ii d_i + sum_{j<i} T_ij q_j
    Mat8 q_by_recursion() const {
        Mat8 Q = Mat8::Zero();
        for (int i = 0; i < kNumParams; ++i) {
            Q(i, i) = table(i, i);
            for (int j = 0; j < i; ++j) Q.row(i) += table(i, j) * Q.row(j);
        }
        return Q;
    }

    double gram_residual() const {
        Mat8 M = C * gram_raw * C.transpose() - Mat8::Identity();
        return M.cwiseAbs().maxCoeff();
    }
};

inline double normalized_condition(const Eigen::MatrixXd& G) {
    Eigen::VectorXd d = G.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd N = d.asDiagonal() * G * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// Modified Gram-Schmidt with one reorthogonalisation pass, carried out on
// coefficient vectors under the Gram matrix G of the raw fields.
inline GramBasis gram_schmidt(const Mat8& G, Product product) {
    GramBasis B;
    B.product = product;
    B.gram_raw = G;
    B.condition = normalized_condition(G);
    std::array<Vec8, kNumParams> a;
    for (int i = 0; i < kNumParams; ++i) {
        if (!(G(i, i) > 0.0)) throw NumericalError("gram_schmidt: raw field " + std::to_string(i + 1) + " has zero norm");
        Vec8 v = Vec8::Unit(i);
        Vec8 s = Vec8::Zero();
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < i; ++j) {
                double c = a[j].dot(G * v);
                v -= c * a[j];
                s(j) += c;
            }
        double n2 = v.dot(G * v);
        if (!(n2 > 1e-12 * G(i, i))) {
            std::ostringstream os;
            os << "gram_schmidt: raw fields numerically dependent at index " << i + 1 << " (condition number "
               << B.condition << ")";
            throw NumericalError(os.str());
        }
        double nrm = std::sqrt(n2);
        a[i] = v / nrm;
        B.C.row(i) = a[i].transpose();
        B.table(i, i) = 1.0 / nrm;
        for (int j = 0; j < i; ++j) B.table(i, j) = -s(j) / nrm;
    }
    return B;
}

// ---- the tangent analysis at one parameter point

struct Family {
    ParamQ q;
    BackgroundConnection bg = BackgroundConnection::standard();
    Pi2Strategy pi2 = Pi2Strategy::Regularized;

    TangentSample sample(const Point4& x, Chart c) const { return tangent_sample(q, bg, pi2, x, c); }
    ChartedConnection glued() const { return glued_connection(q, bg, pi2); }
    ChartedConnection extended() const { return extended_connection(q); }
};

// Everything Lemmas 5.7, 5.8, 5.9 and 3.6 need at one q, from one pass over
// a weighted rule whose interior nodes form the ball rule.
struct TangentAnalysis {
    Family fam;
    QuadratureRule rule;
    Mat8 G_ball = Mat8::Zero();   // Gram of dA/dparam under (.,.)_{A;1,2;B^4}
    Mat8 G_ext = Mat8::Zero();    // Gram of dA~/dparam under the weighted product with A~
    Mat8 G_diff = Mat8::Zero();   // Gram of dA - dA~ under (.,.)_{A;1,2;B^4}
    GramBasis ball;               // a_i, a_ij
    GramBasis weighted;           // \hat a_i, b_ij (coefficients over the a~_i)

    // a~_i = A~_{q_i}: Gram under the weighted product
    Mat8 gram_tilde() const { return ball.C * G_ext * ball.C.transpose(); }
    // ||a_i - a~_i||_{A;1,2;B^4}
    double difference_norm(int i) const {
        Vec8 c = ball.C.row(i).transpose();
        return std::sqrt(std::max(0.0, c.dot(G_diff * c)));
    }
    double raw_norm(int k) const { return std::sqrt(G_ball(k, k)); }
};

inline TangentAnalysis analyze_tangents(const Family& fam, const QuadratureRule& rule) {
    TangentAnalysis T;
    T.fam = fam;
    T.rule = rule;
    const double eps = fam.q.eps;
    // 24 fields per interior node: dA (conn A), dA~ (conn A~), dA - dA~ (conn A)
    // are mixed connections, so accumulate three separate Grams
    PairwiseAccumulator acc(3 * 36);
    std::vector<double> row(3 * 36);
    std::array<CovVec, kNumParams> va, vt, vd;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const Point4& x = rule.nodes[i];
        Chart c = chart_of(rule, i);
        TangentSample s = fam.sample(x, c);
        OneForm<double> Av = value_of(s.A), Atv = value_of(s.At);
        double w = rule.weights[i];
        if (rule.exterior[i]) {
            double wx = weight_w(x);
            for (int k = 0; k < kNumParams; ++k) vt[k] = cov_vector(Atv, s.dAt[k], eps, wx);
        } else {
            for (int k = 0; k < kNumParams; ++k) {
                va[k] = cov_vector(Av, s.dA[k], eps);
                vt[k] = cov_vector(Atv, s.dAt[k], eps);
                vd[k] = cov_vector(Av, sub(s.dA[k], s.dAt[k]), eps);
            }
        }
        int idx = 0;
        for (int a = 0; a < kNumParams; ++a)
            for (int b = 0; b <= a; ++b, ++idx) {
                row[idx] = rule.exterior[i] ? 0.0 : w * dot60(va[a], va[b]);
                row[36 + idx] = w * dot60(vt[a], vt[b]);
                row[72 + idx] = rule.exterior[i] ? 0.0 : w * dot60(vd[a], vd[b]);
            }
        for (double d : row)
            if (!std::isfinite(d)) {
                std::ostringstream os;
                os << "analyze_tangents: non-finite density at node " << i << " (" << x[0] << ", " << x[1] << ", "
                   << x[2] << ", " << x[3] << ")";
                throw NumericalError(os.str());
            }
        acc.push(row.data());
    }
    std::vector<double> t = acc.total();
    int idx = 0;
    for (int a = 0; a < kNumParams; ++a)
        for (int b = 0; b <= a; ++b, ++idx) {
            T.G_ball(a, b) = T.G_ball(b, a) = t[idx];
            T.G_ext(a, b) = T.G_ext(b, a) = t[36 + idx];
            T.G_diff(a, b) = T.G_diff(b, a) = t[72 + idx];
        }
    T.ball = gram_schmidt(T.G_ball, Product::Ball);
    T.weighted = gram_schmidt(T.gram_tilde(), Product::Weighted);
    return T;
}

inline QuadratureRule analysis_rule(const ParamQ& q, double tol) { return weighted_r4_rule(q.p, q.lambda, tol); }

// Only the ball product, for perturbed-parameter evaluations on a fixed rule.
inline GramBasis gram_schmidt_ball(const Family& fam, const QuadratureRule& rule) {
    const double eps = fam.q.eps;
    Eigen::MatrixXd G = stream_gram(rule, eps, kNumParams,
                                    [&](std::size_t i, OneForm<double>& conn, std::vector<Jet1>& f, double& w) {
                                        if (rule.exterior[i]) return false;
                                        TangentSample s = fam.sample(rule.nodes[i], chart_of(rule, i));
                                        conn = value_of(s.A);
                                        for (int k = 0; k < kNumParams; ++k) f[k] = s.dA[k];
                                        w = 1.0;
                                        return true;
                                    });
    return gram_schmidt(Mat8(G), Product::Ball);
}

inline GramBasis gram_schmidt_ball(const Family& fam, double tol) {
    return gram_schmidt_ball(fam, unit_ball_rule(fam.q.p, fam.q.lambda, tol));
}

inline GramBasis gram_schmidt_weighted(const Family& fam, double tol) {
    return analyze_tangents(fam, analysis_rule(fam.q, tol)).weighted;
}

// ---- basis fields

// combination sum_k c_k r_k of raw derivative jets
template <class Vec>
Jet1 combine(const std::array<Jet1, kNumParams>& raw, const Vec& c) {
    Jet1 r{};
    for (int k = 0; k < kNumParams; ++k) {
        if (c(k) == 0.0) continue;
        for (int mu = 0; mu < 4; ++mu)
            for (int a = 0; a < 3; ++a) r[mu].c[a] = r[mu].c[a] + c(k) * raw[k][mu].c[a];
    }
    return r;
}

// a_i (extended = false) or a~_i = A~_{q_i} (extended = true) as a charted field
inline ChartedField basis_field(const Family& fam, const GramBasis& B, int i, bool extended = false) {
    Vec8 c = B.C.row(i).transpose();
    return {[fam, c, extended](const Point4& x, Chart ch) {
        TangentSample s = fam.sample(x, ch);
        return combine(extended ? s.dAt : s.dA, c);
    }};
}

inline ChartedField raw_field(const Family& fam, int k, bool extended = false) {
    return {[fam, k, extended](const Point4& x, Chart ch) {
        TangentSample s = fam.sample(x, ch);
        return extended ? s.dAt[k] : s.dA[k];
    }};
}

// ---- projections

struct Projection {
    Vec8 coeff = Vec8::Zero();  // (v, a_i)
    double norm_v = 0.0;
    double norm_perp = 0.0;
    double max_residual_pairing = 0.0;  // max_i |(v_perp, a_i)|
};

// v - sum_i (v, a_i) a_i under (.,.)_{A(q);1,2;B^4}; two passes over the rule
inline Projection project_perp_stats(const std::function<Jet1(const Point4&, Chart)>& v, const Family& fam,
                                     const GramBasis& B, const QuadratureRule& rule) {
    const double eps = fam.q.eps;
    // pass 1: (v, r_k) and (v, v)
    Eigen::MatrixXd G1 = stream_gram(rule, eps, kNumParams + 1,
                                     [&](std::size_t i, OneForm<double>& conn, std::vector<Jet1>& f, double& w) {
                                         if (rule.exterior[i]) return false;
                                         Chart c = chart_of(rule, i);
                                         TangentSample s = fam.sample(rule.nodes[i], c);
                                         conn = value_of(s.A);
                                         for (int k = 0; k < kNumParams; ++k) f[k] = s.dA[k];
                                         f[kNumParams] = v(rule.nodes[i], c);
                                         w = 1.0;
                                         return true;
                                     });
    Projection P;
    Vec8 vr;
    for (int k = 0; k < kNumParams; ++k) vr(k) = G1(kNumParams, k);
    P.coeff = B.C * vr;
    P.norm_v = std::sqrt(G1(kNumParams, kNumParams));
    // pass 2: the explicit complement and its pairings with the basis
    Mat8 C = B.C;
    Vec8 cf = P.coeff;
    Eigen::MatrixXd G2 = stream_gram(rule, eps, kNumParams + 1,
                                     [&](std::size_t i, OneForm<double>& conn, std::vector<Jet1>& f, double& w) {
                                         if (rule.exterior[i]) return false;
                                         Chart c = chart_of(rule, i);
                                         TangentSample s = fam.sample(rule.nodes[i], c);
                                         conn = value_of(s.A);
                                         for (int k = 0; k < kNumParams; ++k)
                                             f[k] = combine(s.dA, Vec8(C.row(k).transpose()));
                                         Jet1 vp = v(rule.nodes[i], c);
                                         Vec8 rc = C.transpose() * cf;  // sum_i c_i a_i over raw fields
                                         f[kNumParams] = sub(vp, combine(s.dA, rc));
                                         w = 1.0;
                                         return true;
                                     });
    P.norm_perp = std::sqrt(std::max(0.0, G2(kNumParams, kNumParams)));
    for (int k = 0; k < kNumParams; ++k)
        P.max_residual_pairing = std::max(P.max_residual_pairing, std::abs(G2(kNumParams, k)));
    return P;
}

// the complement as a charted field
inline ChartedField project_perp(const ChartedField& v, const Family& fam, const GramBasis& B,
                                 const QuadratureRule& rule) {
    Projection P = project_perp_stats(v.jet, fam, B, rule);
    Vec8 rc = B.C.transpose() * P.coeff;
    return {[v, fam, rc](const Point4& x, Chart c) {
        TangentSample s = fam.sample(x, c);
        return sub(v.jet(x, c), combine(s.dA, rc));
    }};
}

// ---- directional derivatives of the basis

struct DirectionalDerivative {
    std::function<Jet1(const Point4&, Chart)> field;  // Richardson-extrapolated
    std::function<Jet1(const Point4&, Chart)> coarse;  // plain central difference at step h
    double step = 0.0;
};

// (a_i)_{q_j}: central difference of a_i(q) along the flow of q_j, with
// one Richardson level; a_i at perturbed q is rebuilt on the same rule and
// with the same chart split.
inline DirectionalDerivative basis_directional_derivative(const Family& fam, const GramBasis& B, int i, int j,
                                                          const QuadratureRule& rule, double rel_step = 1e-3) {
    std::array<double, kNumParams> v;
    for (int k = 0; k < kNumParams; ++k) v[k] = B.C(j, k);
    const double lam = fam.q.lambda;
    double scale = 0.0;
    for (int k = 0; k < kNumParams; ++k) {
        double unit = (k >= 4 && k < 7) ? 1.0 : lam;
        scale = std::max(scale, std::abs(v[k]) / unit);
    }
    if (!(scale > 0.0)) throw NumericalError("basis_directional_derivative: zero direction");
    const double h = rel_step / scale;
    auto at = [&](double t) {
        Family f = fam;
        f.q = fam.q.moved(v, t);
        if (!(f.q.lambda > 0.0) || !(norm4(f.q.p) < 1.0 - f.q.c.d0))
            throw NumericalError("basis_directional_derivative: step leaves the parameter space");
        GramBasis Bt = gram_schmidt_ball(f, rule);
        return std::make_pair(f, Vec8(Bt.C.row(i).transpose()));
    };
    auto [fp, cp] = at(h);
    auto [fm, cm] = at(-h);
    auto [fp2, cp2] = at(0.5 * h);
    auto [fm2, cm2] = at(-0.5 * h);
    DirectionalDerivative D;
    D.step = h;
    auto diff = [](const Family& a, const Vec8& ca, const Family& b, const Vec8& cb, double step) {
        return [a, ca, b, cb, step](const Point4& x, Chart c) {
            Jet1 ja = combine(a.sample(x, c).dA, ca);
            Jet1 jb = combine(b.sample(x, c).dA, cb);
            return mul(1.0 / step, sub(ja, jb));
        };
    };
    auto d1 = diff(fp, cp, fm, cm, 2.0 * h);
    auto d2 = diff(fp2, cp2, fm2, cm2, h);
    D.coarse = d1;
    D.field = [d1, d2](const Point4& x, Chart c) { return sub(mul(4.0 / 3.0, d2(x, c)), mul(1.0 / 3.0, d1(x, c))); };
    return D;
}

}  // namespace ymlab
