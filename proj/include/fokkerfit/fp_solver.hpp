#ifndef FOKKERFIT_FP_SOLVER_HPP
#define FOKKERFIT_FP_SOLVER_HPP

#include <functional>
#include <utility>

#include "fokkerfit/coefficients.hpp"
#include "fokkerfit/grid_density.hpp"

namespace fokkerfit {

using SourceFn = std::function<double(double, const Vec&)>;

/// Forward problem for the strong Fokker-Planck equation on a truncated box
/// with zero-flux boundaries.
struct FpProblem {
    FieldPtr coefficients;
    double alpha = 0.0;
    Lattice lattice;      // output lattice; t0/t1 bound the integration window
    Vec initial_values;   // density at the space nodes (>= 0, unit mass)
    double dt = 0.0;      // 0 = auto: 10 dx^2 (quartered when a has cross terms)
    SourceFn source;      // optional right-hand side f of FPE_f
};

/// Crank-Nicolson (1-D) / dimension-split Crank-Nicolson (2-D) integration
/// with a conservative flux discretization: the discrete mass is constant to
/// machine precision when the source vanishes.
GridDensity solve_fp(const FpProblem& problem);

/// Validation metric E(a,b): squared space-time L2 distance between the
/// forward solution under (a,b) and a reference density on the same lattice.
double metric_E(const CoefficientField& field, double alpha, const GridDensity& reference,
                const Vec& initial_values, double dt = 0.0);

/// Observation estimate pair: lhs = |int int f (p1 - p2)|,
/// rhs = ||f||_{L2} ||p1 - p2||_{L2}; lhs <= rhs is the Cauchy-Schwarz bound.
std::pair<double, double> observation_gap(const SourceFn& f, const GridDensity& p1,
                                          const GridDensity& p2);

struct StabilityVerdict {
    double lhs = 0.0;       // sup_t ||p1(t) - p2(t)||^2
    double rhs = 0.0;       // ||p1bar - p2bar||^2 + int ||f1 - f2||^2
    double constant = 0.0;  // frozen calibration constant
    double margin = 0.0;    // constant * rhs - lhs
    bool pass = false;
};

/// Parabolic stability estimate for two sources/initial data sharing the same
/// coefficients: sup_t ||p1 - p2||^2 <= C (||p1bar - p2bar||^2 + int||f1 - f2||^2).
StabilityVerdict stability_check(const CoefficientField& field, double alpha,
                                 const Lattice& lattice, const Vec& p1bar, const Vec& p2bar,
                                 const SourceFn& f1, const SourceFn& f2, double dt = 0.0);

}  // namespace fokkerfit

#endif
