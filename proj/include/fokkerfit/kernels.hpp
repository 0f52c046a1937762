#ifndef FOKKERFIT_KERNELS_HPP
#define FOKKERFIT_KERNELS_HPP

#include <cmath>
#include <memory>
#include <vector>

#include "fokkerfit/common.hpp"
#include "fokkerfit/cutoff.hpp"

namespace fokkerfit {

/// A point of the learning domain D = [0,T] x closed-ball(R*).
struct STPoint {
    double t = 0.0;
    Vec x;

    Vec as_vector() const {
        Vec z(1 + x.size());
        z(0) = t;
        z.tail(x.size()) = x;
        return z;
    }
};

struct SpaceTimeDomain {
    double T = 1.0;
    double r_star = 1.0;
    int n = 1;

    bool contains(const STPoint& p) const {
        return p.t >= 0.0 && p.t <= T && p.x.norm() <= r_star;
    }
    double diameter() const { return std::sqrt(T * T + 4.0 * r_star * r_star); }
};

/// Moments of the radius-R ball against a plane wave:
///   I_k(d) = \int_{|xi| <= R} |xi|^{2k} cos(2 pi xi . d) dxi,  k = 0,1,2,
/// for n = 1, 2. I_0 is the bandlimited kernel itself; I_1 and I_2 carry its
/// Laplacian and bi-Laplacian through the Fourier pairing.
double ball_moment(int k, int n, double R, double dist);

/// Radial kernel whose Fourier transform is the indicator of the radius-R
/// ball: rho_R(x) = R^{n/2} |x|^{-n/2} J_{n/2}(2 pi R |x|).
class BandlimitedKernel {
public:
    BandlimitedKernel(double R, int n);

    double bandwidth() const { return R_; }
    int dim() const { return n_; }

    double value_radial(double r) const;
    /// f'(r)/r and (f''(r) - f'(r)/r)/r^2; both finite at r = 0.
    double h1_radial(double r) const;
    double h2_radial(double r) const;
    double d1_radial(double r) const { return h1_radial(r) * r; }
    double d2_radial(double r) const { return h2_radial(r) * r * r + h1_radial(r); }

    double value(const Vec& x) const { return value_radial(x.norm()); }
    Vec grad(const Vec& x) const;
    Mat hess(const Vec& x) const;
    double laplacian(const Vec& x) const;

private:
    double R_;
    int n_;
    double nu_;     // n/2
    double W_;      // 2 pi R
    double C_;      // (2 pi)^{n/2} R^n
    double series_cut_;
};

/// Half-integer Matern kernel k(r) = exp(-u) P_p(u), u = sqrt(2 nu) r / ell.
class MaternKernel {
public:
    MaternKernel(double nu, double lengthscale = 1.0);

    double nu() const { return nu_; }
    double lengthscale() const { return ell_; }
    int poly_degree() const { return p_; }

    double value(double r) const;
    double d1(double r) const;
    double d2(double r) const;
    /// d1(r)/r, finite at 0 for nu >= 3/2.
    double h1(double r) const;
    /// (d2(r) - d1(r)/r)/r^2, finite at 0 for nu >= 7/2.
    double h2(double r) const;

private:
    double nu_;
    double ell_;
    int p_;
    double beta_;
    std::vector<double> a_;      // polynomial coefficients in u
    std::vector<double> gamma_;  // Taylor coefficients of k in u
};

/// Sobolev kernel of smoothness degree m+1 on the line, realized as
/// Matern(nu = m + 1/2).
class SobolevTimeKernel {
public:
    explicit SobolevTimeKernel(int m, double lengthscale = 1.0)
        : m_(m), matern_(m + 0.5, lengthscale) {
        if (m < 1) throw ConfigError("SobolevTimeKernel: m >= 1 required");
    }

    int smoothness() const { return m_ + 1; }
    double operator()(double t1, double t2) const { return matern_.value(std::abs(t1 - t2)); }
    /// d/dt1 K(t1, t2).
    double dt(double t1, double t2) const {
        double d = t1 - t2;
        return d >= 0.0 ? matern_.d1(d) : -matern_.d1(-d);
    }

private:
    int m_;
    MaternKernel matern_;
};

/// Symmetric Gram matrix with a jitter ladder and a Cholesky factorization.
class GramSystem {
public:
    explicit GramSystem(Mat G);

    const Mat& matrix() const { return G_; }
    double jitter() const { return jitter_; }
    Vec solve(const Vec& rhs) const { return llt_.solve(rhs); }
    Mat solve(const Mat& rhs) const { return llt_.solve(rhs); }
    int size() const { return static_cast<int>(G_.rows()); }

private:
    Mat G_;
    Eigen::LLT<Mat> llt_;
    double jitter_ = 0.0;
};

/// Time-interpolation coefficients c_l(t) = e_l^T G^{-1} v(t) for a grid of
/// sample times and a Sobolev time kernel; exposes the analytic first time
/// derivative as well.
class TimeCoeffs {
public:
    TimeCoeffs(std::vector<double> times, SobolevTimeKernel kernel);

    int size() const { return static_cast<int>(times_.size()); }
    const std::vector<double>& times() const { return times_; }
    const SobolevTimeKernel& kernel() const { return kernel_; }
    const GramSystem& gram() const { return *gram_; }

    Vec coeffs(double t) const;
    Vec coeffs_dt(double t) const;

private:
    std::vector<double> times_;
    SobolevTimeKernel kernel_;
    std::shared_ptr<GramSystem> gram_;
};

/// Reproducing kernel of the windowed space-time space on D: a Matern base on
/// R^{1+n} multiplied by w(y) w(y'), where w vanishes with its first two
/// derivatives on the spatial boundary of D.
class WindowedSpaceTimeKernel {
public:
    struct Jet2 {
        double value = 0.0;
        Vec grad_y;   // n
        Mat hess_y;   // n x n
    };

    WindowedSpaceTimeKernel(SpaceTimeDomain domain, MaternKernel base, double window_width = 1.0);

    const SpaceTimeDomain& domain() const { return domain_; }
    const MaternKernel& base() const { return base_; }
    const RadialBump& window() const { return window_; }

    double value(const STPoint& z, const STPoint& c) const;
    /// Value plus first and second derivatives in the spatial part of the
    /// first argument. Exactly zero (all entries) outside the window.
    Jet2 jet2(const STPoint& z, const STPoint& c) const;

private:
    SpaceTimeDomain domain_;
    MaternKernel base_;
    RadialBump window_;
};

/// Largest distance from any point of D to the set, measured on a probe
/// lattice that is refined until its spacing is at most a tenth of the
/// estimate.
double fill_distance(const std::vector<STPoint>& points, const SpaceTimeDomain& domain);

struct CenterSet {
    std::vector<STPoint> centers;
    double fill = 0.0;
};

/// Regular grid over D whose measured fill distance is at most the target.
CenterSet make_centers(const SpaceTimeDomain& domain, double target_fill, int max_centers = 5000);

}  // namespace fokkerfit

#endif
