#ifndef FOKKERFIT_DENSITY_HPP
#define FOKKERFIT_DENSITY_HPP

#include <memory>
#include <tuple>
#include <vector>

#include "fokkerfit/grid_density.hpp"
#include "fokkerfit/kernels.hpp"
#include "fokkerfit/sde_sim.hpp"

namespace fokkerfit {

/// Kernel density model fitted to an observation set:
///   p(t,x) = sum_l c_l(t) g_l(x),  g_l(x) = (1/N) sum_j rho_R(x - X_{l,j}).
/// The raw model is kept as-is: g_l is sign-indefinite and no normalization
/// or positivity projection is applied.
class DensityModel {
public:
    struct Jet {
        double value = 0.0;
        double dt = 0.0;
        Vec grad;
        Mat hess;
        double laplacian() const { return hess.trace(); }
    };

    DensityModel(std::shared_ptr<const ObservationSet> obs, double R, int m_smoothness,
                 double time_lengthscale = 1.0);

    const ObservationSet& observations() const { return *obs_; }
    const BandlimitedKernel& rho() const { return rho_; }
    const TimeCoeffs& time_coeffs() const { return tc_; }
    int dim() const { return obs_->n; }

    double value(double t, const Vec& x) const;
    double dt(double t, const Vec& x) const;
    Vec grad(double t, const Vec& x) const;
    Mat hess(double t, const Vec& x) const;
    double laplacian(double t, const Vec& x) const;
    Jet jet(double t, const Vec& x) const;

    /// Value of a single spatial slice g_l.
    double g_value(int l, const Vec& x) const;

    /// Value, gradient, and Hessian of a single spatial slice g_l; these do
    /// not depend on t and can be cached across time nodes.
    struct SpaceJet {
        double value = 0.0;
        Vec grad;
        Mat hess;
    };
    SpaceJet g_jet(int l, const Vec& x) const;

    /// Values on a lattice through the time/space factorization.
    GridDensity evaluate_on(const Lattice& lattice) const;

    /// Largest sample norm plus the tail margin that keeps the truncated mass
    /// of every slice within 1e-3; spatial truncation box for integrals of
    /// the model.
    double suggested_halfwidth() const;

private:
    std::shared_ptr<const ObservationSet> obs_;
    BandlimitedKernel rho_;
    TimeCoeffs tc_;
    double max_sample_norm_;
};

/// Squared fit distance between two lattice densities:
///   L = int ( |du/dt - dp/dt|_{L2}^2 + |u - p|_{H2}^2 ) dt,
/// with H2 realized as the sum of squared L2 norms of lattice finite
/// differences up to order 2.
double loss_L(const GridDensity& u, const GridDensity& p_ref);

/// Closed-form OU marginals (diagonal Gaussian or point initial law) sampled
/// on a lattice; sigma2_total is the full diffusion scale including alpha.
GridDensity analytic_ou_density(double theta, double sigma2_total, const InitialLaw& law,
                                const Lattice& lattice);

struct RateRow {
    int M = 0;
    int N = 0;
    double R = 0.0;
    double loss = 0.0;
};

struct RateReport {
    std::vector<RateRow> rows;
    std::string verdict;        // "single-row", "non-increasing(2x)", or "violations:k"
    double slope = 0.0;         // log-log slope in N when only N varies
    bool slope_valid = false;
};

/// Monte-Carlo rate check for the density model against the analytic OU
/// reference, over a schedule of (M, N, R) configurations.
RateReport empirical_rate_report(double theta, double sigma2, double alpha, double r_star,
                                 const InitialLaw& law, double T, double sim_dt,
                                 const std::vector<std::tuple<int, int, double>>& schedule,
                                 int m_smoothness, const Lattice& lattice, std::uint64_t seed);

}  // namespace fokkerfit

#endif
