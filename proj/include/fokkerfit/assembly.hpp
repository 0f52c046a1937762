#ifndef FOKKERFIT_ASSEMBLY_HPP
#define FOKKERFIT_ASSEMBLY_HPP

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "fokkerfit/operators.hpp"

namespace fokkerfit {

/// Closed form of int rho_R(y - x1) rho_R(y - x2) dy over R^n: the square of
/// the band indicator is itself, so the convolution collapses to
/// rho_R(x1 - x2).
double space_pair_integral(const Vec& x1, const Vec& x2, double R, int n);

enum class TimePairKind { CC, DotDot, CDot };

/// int_0^T of products of time coefficients: c_l c_l' (CC), cdot_l cdot_l'
/// (DotDot), or c_l cdot_l' (CDot), by adaptive Gauss-Kronrod to relative
/// 1e-9 with breakpoints at the sample times.
double time_pair_integral(TimePairKind kind, int l, int lp, const TimeCoeffs& tc, double T);

struct QuadratureConfig {
    int space_panels = 0;        // per dim; 0 = auto from bandwidth and box
    int space_order = 8;         // Gauss-Legendre order per panel
    double time_rel_tol = 1e-6;  // refinement target for the time panels
    int max_time_intervals = 96;
    int syrk_chunk = 256;
    bool closed_form_qq = true;  // exact (1,1) entry through the rho-pair identity
};

/// The assembled quadratic objective over coordinates (1, B, vec(A)).
struct QuadraticProgram {
    Mat H;        // (1 + Qn + Q^2 n^2)^2, symmetric PSD
    Mat gram;     // Q x Q Gram matrix of K_D at the centers
    int Q = 0;
    int n = 0;
    double lambda = 0.0;
    nlohmann::json provenance;

    int qn() const { return Q * n; }
    int dim() const { return 1 + qn() + qn() * qn(); }

    /// v^T H v at v = (1, B, vec(A)).
    double quadratic(const Mat& A, const Vec& B) const;
    /// tr((G x I) A) + B^T (G x I) B  — the RKHS surrogate norm.
    double regularizer_value(const Mat& A, const Vec& B) const;
    /// quadratic + lambda * regularizer.
    double objective(const Mat& A, const Vec& B) const;

    void save(const std::string& dir) const;
    static QuadraticProgram load(const std::string& dir);
};

/// RKHS-norm surrogate: tr((G x I_n) A) + B^T (G x I_n) B.
double regularizer(const Mat& A, const Vec& B, const Mat& G_Q, int n);

/// Assemble H = int w w^T dt dy with w = (qtilde, U, -vec(V)), by tensorized
/// Gauss-Legendre panels over [-R*, R*]^n and Gauss-Kronrod-style panels in
/// time, with the rho-pair closed form substituted for the (1,1) entry.
QuadraticProgram assemble_H(std::shared_ptr<const DensityModel> density,
                            std::vector<STPoint> centers,
                            std::shared_ptr<const WindowedSpaceTimeKernel> kernel, double alpha,
                            double lambda, const QuadratureConfig& cfg = {});

}  // namespace fokkerfit

#endif
