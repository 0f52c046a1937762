#ifndef FOKKERFIT_SDP_HPP
#define FOKKERFIT_SDP_HPP

#include <string>
#include <vector>

#include "fokkerfit/assembly.hpp"

namespace fokkerfit {

/// Frobenius-nearest PSD matrix: symmetrize, then clip negative eigenvalues.
Mat project_psd(const Mat& A);

struct SolveOptions {
    double grad_tol = 1e-8;  // scaled by (1 + ||H||)
    int max_iters = 50000;
    int stall_window = 200;
    double stall_tol = 1e-15;
};

struct SolveReport {
    Mat A;
    Vec B;
    double objective = 0.0;
    std::vector<double> trajectory;  // objective per accepted iterate
    int iterations = 0;
    std::string termination;         // gradient-tol | max-iter | stall
    double psd_residual = 0.0;       // min eigenvalue of A
    double h_norm = 0.0;

    void save(const std::string& path) const;
};

/// Accelerated projected gradient descent on
///   min_{A >= 0, B} (1,B,vec A)^T H (1,B,vec A) + lambda (tr((GxI)A) + B^T (GxI) B),
/// with spectral projection of A onto the PSD cone, backtracking from a
/// power-iteration estimate of ||H||, and a restart guard that keeps the
/// accepted objective trajectory non-increasing.
SolveReport solve(const QuadraticProgram& qp, const SolveOptions& opts = {});

}  // namespace fokkerfit

#endif
