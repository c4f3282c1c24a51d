// Builds A(q) and A~(q) at one parameter point, checks the charge and the
// energy of the extension, and prints the Gram-Schmidt diagonals.

#include <cmath>
#include <cstdio>
#include <numbers>

#include "ymlab/basis.hpp"
#include "ymlab/functionals.hpp"

using namespace ymlab;

int main() {
    const double eps = std::ldexp(1.0, -6);
    Family fam{ParamQ::make({0.05, 0.0, -0.02, 0.0}, GroupElement(1.0, 0.2, 0.0, -0.1), std::sqrt(eps), eps)};

    ChartedConnection At = fam.extended();
    QuadratureRule r4 = r4_rule(fam.q.p, fam.q.lambda, 1e-4);
    ChargeResult c = charge(At, r4);
    double e = eps * eps * ym_eps(At, r4) / (8.0 * std::numbers::pi * std::numbers::pi);
    std::printf("nodes %zu  charge %.6f  eps^2 YM / 8 pi^2 %.6f\n", r4.size(), c.value, e);

    TangentAnalysis T = analyze_tangents(fam, analysis_rule(fam.q, 1e-4));
    std::printf("%-8s %12s %12s %12s\n", "param", "|dA|", "a_ii", "b_ii - 1");
    for (int i = 0; i < kNumParams; ++i)
        std::printf("%-8s %12.5g %12.5g %12.3e\n", param_name(i), T.raw_norm(i), T.ball.table(i, i),
                    T.weighted.table(i, i) - 1.0);
    std::printf("Gram residuals: ball %.1e, weighted %.1e\n", T.ball.gram_residual(), T.weighted.gram_residual());
}
