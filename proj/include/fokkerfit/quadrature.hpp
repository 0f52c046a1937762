#ifndef FOKKERFIT_QUADRATURE_HPP
#define FOKKERFIT_QUADRATURE_HPP

#include <functional>
#include <utility>
#include <vector>

namespace fokkerfit {

struct QuadNode {
    double x;
    double w;
};

/// Gauss-Legendre nodes/weights on [-1,1], any order (Newton on P_n).
std::vector<QuadNode> gauss_legendre(int order);

/// Tensor-free helper: GL nodes of `order` on each of `panels` equal
/// subintervals of [a,b].
std::vector<QuadNode> panel_nodes(double a, double b, int panels, int order);

struct AdaptiveOptions {
    double rel_tol = 1e-9;
    double abs_tol = 0.0;
    int max_intervals = 2000;
    /// Interior points where the integrand loses smoothness; the initial
    /// segmentation splits there.
    std::vector<double> breakpoints;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

/// Adaptive Gauss-Kronrod 7-15 on [a,b]. Throws NumericalError when the
/// interval budget runs out before the tolerance is met.
QuadResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                       const AdaptiveOptions& opts = {});

/// Single non-adaptive GK 7-15 application: returns {integral, error estimate}.
std::pair<double, double> gk15(const std::function<double(double)>& f, double a, double b);

/// The 15 Kronrod nodes on [a,b] with both weight sets; wg is zero at the
/// Kronrod-only nodes, so the embedded Gauss-7 value reuses the same
/// evaluations.
struct GKPanel {
    double x[15];
    double wk[15];
    double wg[15];
};
GKPanel gk15_panel(double a, double b);

}  // namespace fokkerfit

#endif
