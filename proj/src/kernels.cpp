#include "fokkerfit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace fokkerfit {

namespace {

constexpr double kSeriesCut = 0.5;  // switch point u = 2 pi R r below which series are used

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// F_k(u) = u^{-(nu+k)} J_{nu+k}(u), evaluated by series for small u.
double bessel_ratio_series(double nu, double u) {
    double u2 = u * u;
    double term = 1.0 / (std::pow(2.0, nu) * std::tgamma(nu + 1.0));
    double sum = term;
    for (int j = 1; j <= 10; ++j) {
        term *= -u2 / (4.0 * j * (j + nu));
        sum += term;
    }
    return sum;
}

double bessel_ratio(double nu, double u) {
    if (u < kSeriesCut) return bessel_ratio_series(nu, u);
    return std::cyl_bessel_j(nu, u) / std::pow(u, nu);
}

}  // namespace

// ---------------------------------------------------------------------------
// ball moments

double ball_moment(int k, int n, double R, double dist) {
    if (k < 0 || k > 2) throw ConfigError("ball_moment: k in {0,1,2}");
    if (R <= 0.0) throw ConfigError("ball_moment: R > 0 required");
    double beta = 2.0 * M_PI * dist;
    double u = beta * R;
    if (n == 1) {
        if (u < kSeriesCut) {
            // I_k = 2 sum_j (-1)^j beta^{2j} R^{2k+2j+1} / ((2j)! (2k+2j+1))
            double sum = 0.0, b2 = beta * beta, pw = 1.0;
            for (int j = 0; j <= 12; ++j) {
                double term = pw * std::pow(R, 2 * k + 2 * j + 1) /
                              (factorial(2 * j) * (2 * k + 2 * j + 1));
                sum += (j % 2 == 0 ? term : -term);
                pw *= b2;
            }
            return 2.0 * sum;
        }
        double s = std::sin(u), c = std::cos(u);
        switch (k) {
            case 0:
                return 2.0 * s / beta;
            case 1:
                return 2.0 * (R * R / beta * s + 2.0 * R / (beta * beta) * c -
                              2.0 / std::pow(beta, 3) * s);
            default: {
                double R2 = R * R, R3 = R2 * R, R4 = R3 * R;
                return 2.0 * (R4 / beta * s + 4.0 * R3 / std::pow(beta, 2) * c -
                              12.0 * R2 / std::pow(beta, 3) * s -
                              24.0 * R / std::pow(beta, 4) * c + 24.0 / std::pow(beta, 5) * s);
            }
        }
    }
    if (n == 2) {
        if (u < kSeriesCut) {
            // 2 pi sum_j (-1)^j (beta/2)^{2j} / (j!)^2 * R^{2k+2j+2} / (2k+2j+2)
            double sum = 0.0, q = 0.25 * beta * beta, pw = 1.0;
            for (int j = 0; j <= 12; ++j) {
                double fj = factorial(j);
                double term = pw / (fj * fj) * std::pow(R, 2 * k + 2 * j + 2) / (2 * k + 2 * j + 2);
                sum += (j % 2 == 0 ? term : -term);
                pw *= q;
            }
            return 2.0 * M_PI * sum;
        }
        double j1 = std::cyl_bessel_j(1.0, u), j2 = std::cyl_bessel_j(2.0, u),
               j3 = std::cyl_bessel_j(3.0, u);
        double R2 = R * R, R3 = R2 * R, R4 = R3 * R, R5 = R4 * R;
        switch (k) {
            case 0:
                return 2.0 * M_PI * R * j1 / beta;
            case 1:
                return 2.0 * M_PI * (R3 * j1 / beta - 2.0 * R2 * j2 / (beta * beta));
            default:
                return 2.0 * M_PI * (R5 * j1 / beta - 4.0 * R4 * j2 / (beta * beta) +
                                     8.0 * R3 * j3 / std::pow(beta, 3));
        }
    }
    throw ConfigError("ball_moment: only n = 1, 2 supported");
}

// ---------------------------------------------------------------------------
// BandlimitedKernel

BandlimitedKernel::BandlimitedKernel(double R, int n) : R_(R), n_(n) {
    if (R <= 0.0) throw ConfigError("BandlimitedKernel: R > 0 required");
    if (n < 1) throw ConfigError("BandlimitedKernel: n >= 1 required");
    nu_ = 0.5 * n;
    W_ = 2.0 * M_PI * R;
    C_ = std::pow(2.0 * M_PI, 0.5 * n) * std::pow(R, n);
    series_cut_ = kSeriesCut;
}

double BandlimitedKernel::value_radial(double r) const {
    double u = W_ * r;
    if (n_ == 1 && u >= series_cut_) return std::sin(u) / (M_PI * r);
    return C_ * bessel_ratio(nu_, u);
}

double BandlimitedKernel::h1_radial(double r) const {
    double u = W_ * r;
    if (n_ == 1 && u >= series_cut_) {
        double s = std::sin(u), c = std::cos(u);
        return (u * c - s) / (M_PI * r * r * r);
    }
    return -C_ * W_ * W_ * bessel_ratio(nu_ + 1.0, u);
}

double BandlimitedKernel::h2_radial(double r) const {
    double u = W_ * r;
    if (n_ == 1 && u >= series_cut_) {
        double s = std::sin(u), c = std::cos(u);
        // (f'' - f'/r)/r^2 with f = sin(u)/(pi r)
        double f2 = ((2.0 - u * u) * s - 2.0 * u * c) / (M_PI * std::pow(r, 3));
        double f1r = (u * c - s) / (M_PI * std::pow(r, 3));
        return (f2 - f1r) / (r * r);
    }
    return C_ * std::pow(W_, 4) * bessel_ratio(nu_ + 2.0, u);
}

Vec BandlimitedKernel::grad(const Vec& x) const {
    double r = x.norm();
    return h1_radial(r) * x;
}

Mat BandlimitedKernel::hess(const Vec& x) const {
    double r = x.norm();
    return h2_radial(r) * (x * x.transpose()) + h1_radial(r) * Mat::Identity(n_, n_);
}

double BandlimitedKernel::laplacian(const Vec& x) const {
    double r = x.norm();
    return h2_radial(r) * r * r + n_ * h1_radial(r);
}

// ---------------------------------------------------------------------------
// MaternKernel

MaternKernel::MaternKernel(double nu, double lengthscale) : nu_(nu), ell_(lengthscale) {
    if (lengthscale <= 0.0) throw ConfigError("MaternKernel: lengthscale > 0 required");
    double p_real = nu - 0.5;
    p_ = static_cast<int>(std::lround(p_real));
    if (p_ < 0 || std::abs(p_real - p_) > 1e-12)
        throw ConfigError("MaternKernel: nu must be a half-integer >= 1/2");
    beta_ = std::sqrt(2.0 * nu) / ell_;

    // k(r) = exp(-u) sum_j a_j u^j with
    //   a_j = p!/(2p)! * (2p-j)! 2^j / ((p-j)! j!)
    a_.assign(p_ + 1, 0.0);
    double lead = factorial(p_) / factorial(2 * p_);
    for (int j = 0; j <= p_; ++j)
        a_[j] = lead * factorial(2 * p_ - j) * std::pow(2.0, j) / (factorial(p_ - j) * factorial(j));

    // Taylor coefficients of k in u; odd ones vanish through order 2p-1.
    gamma_.assign(16, 0.0);
    for (int k = 0; k < static_cast<int>(gamma_.size()); ++k) {
        double g = 0.0;
        for (int j = 0; j <= std::min(k, p_); ++j) {
            double c = a_[j] / factorial(k - j);
            g += ((k - j) % 2 == 0) ? c : -c;
        }
        gamma_[k] = g;
    }
}

double MaternKernel::value(double r) const {
    double u = beta_ * r;
    double poly = 0.0;
    for (int j = p_; j >= 0; --j) poly = poly * u + a_[j];
    return std::exp(-u) * poly;
}

double MaternKernel::d1(double r) const {
    double u = beta_ * r;
    if (u < kSeriesCut) return h1(r) * r;
    double poly = 0.0, dpoly = 0.0;
    for (int j = p_; j >= 0; --j) {
        poly = poly * u + a_[j];
        if (j >= 1) dpoly = dpoly * u + j * a_[j];
    }
    return beta_ * std::exp(-u) * (dpoly - poly);
}

double MaternKernel::d2(double r) const {
    double u = beta_ * r;
    if (u < kSeriesCut) return h2(r) * r * r + h1(r);
    double poly = 0.0, dpoly = 0.0, d2poly = 0.0;
    for (int j = p_; j >= 0; --j) {
        poly = poly * u + a_[j];
        if (j >= 1) dpoly = dpoly * u + j * a_[j];
        if (j >= 2) d2poly = d2poly * u + j * (j - 1) * a_[j];
    }
    return beta_ * beta_ * std::exp(-u) * (d2poly - 2.0 * dpoly + poly);
}

double MaternKernel::h1(double r) const {
    double u = beta_ * r;
    if (u >= kSeriesCut) return d1(r) / r;
    // k'(r)/r = beta^2 sum_{k>=2} k gamma_k u^{k-2}
    double sum = 0.0;
    for (int k = static_cast<int>(gamma_.size()) - 1; k >= 2; --k) sum = sum * u + k * gamma_[k];
    return beta_ * beta_ * sum;
}

double MaternKernel::h2(double r) const {
    double u = beta_ * r;
    if (u >= kSeriesCut) return (d2(r) - d1(r) / r) / (r * r);
    // (k'' - k'/r)/r^2 = beta^4 sum_{k>=4} k(k-2) gamma_k u^{k-4}  (gamma_3 = 0 for p >= 2)
    if (p_ < 2 && u < 1e-14) throw NumericalError("MaternKernel::h2 singular at 0 for nu < 5/2");
    double sum = 0.0;
    for (int k = static_cast<int>(gamma_.size()) - 1; k >= 4; --k)
        sum = sum * u + k * (k - 2) * gamma_[k];
    if (p_ >= 2 || u == 0.0) return beta_ * beta_ * beta_ * beta_ * sum;
    return std::pow(beta_, 4) * (sum + 3.0 * gamma_[3] / u);
}

// ---------------------------------------------------------------------------
// GramSystem

GramSystem::GramSystem(Mat G) : G_(std::move(G)) {
    if (G_.rows() != G_.cols()) throw ConfigError("GramSystem: square matrix required");
    const int m = static_cast<int>(G_.rows());
    const double scale = G_.trace() / m;
    double jit = 0.0;
    for (int level = 0;; ++level) {
        Mat Gj = G_ + jit * Mat::Identity(m, m);
        llt_.compute(Gj);
        if (llt_.info() == Eigen::Success) {
            Mat L = llt_.matrixL();
            double resid = (Gj - L * L.transpose()).norm() / std::max(Gj.norm(), 1e-300);
            if (resid <= 1e-10) {
                jitter_ = jit;
                return;
            }
        }
        if (level == 0) {
            jit = 1e-12 * scale;
        } else {
            jit *= 10.0;
        }
        if (jit > 1e-6 * scale) {
            double dmax = G_.diagonal().maxCoeff(), dmin = G_.diagonal().minCoeff();
            throw NumericalError("GramSystem: singular beyond max jitter " + std::to_string(jit) +
                                 " (diag ratio " + std::to_string(dmax / std::max(dmin, 1e-300)) +
                                 ")");
        }
    }
}

// ---------------------------------------------------------------------------
// TimeCoeffs

TimeCoeffs::TimeCoeffs(std::vector<double> times, SobolevTimeKernel kernel)
    : times_(std::move(times)), kernel_(kernel) {
    const int m = static_cast<int>(times_.size());
    if (m == 0) throw ConfigError("TimeCoeffs: empty grid");
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (times_[i] == times_[j]) throw ConfigError("TimeCoeffs: duplicate grid times");
    Mat G(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) G(i, j) = kernel_(times_[i], times_[j]);
    gram_ = std::make_shared<GramSystem>(std::move(G));
}

Vec TimeCoeffs::coeffs(double t) const {
    const int m = size();
    Vec v(m);
    for (int i = 0; i < m; ++i) v(i) = kernel_(t, times_[i]);
    return gram_->solve(v);
}

Vec TimeCoeffs::coeffs_dt(double t) const {
    const int m = size();
    Vec v(m);
    for (int i = 0; i < m; ++i) v(i) = kernel_.dt(t, times_[i]);
    return gram_->solve(v);
}

// ---------------------------------------------------------------------------
// WindowedSpaceTimeKernel

WindowedSpaceTimeKernel::WindowedSpaceTimeKernel(SpaceTimeDomain domain, MaternKernel base,
                                                 double window_width)
    : domain_(domain), base_(std::move(base)), window_(domain.r_star, window_width) {}

double WindowedSpaceTimeKernel::value(const STPoint& z, const STPoint& c) const {
    double wy = window_.value_at(z.x);
    if (wy == 0.0) return 0.0;
    double wc = window_.value_at(c.x);
    if (wc == 0.0) return 0.0;
    double dt = z.t - c.t;
    double r = std::sqrt(dt * dt + (z.x - c.x).squaredNorm());
    return wy * base_.value(r) * wc;
}

WindowedSpaceTimeKernel::Jet2 WindowedSpaceTimeKernel::jet2(const STPoint& z,
                                                            const STPoint& c) const {
    const int n = static_cast<int>(z.x.size());
    Jet2 out;
    out.grad_y = Vec::Zero(n);
    out.hess_y = Mat::Zero(n, n);

    double wc = window_.value_at(c.x);
    double wy = window_.value_at(z.x);
    if (wc == 0.0 || (wy == 0.0 && window_.d1(z.x.norm()) == 0.0)) return out;

    double dt = z.t - c.t;
    Vec dx = z.x - c.x;
    double r = std::sqrt(dt * dt + dx.squaredNorm());
    double k = base_.value(r);
    double h1 = base_.h1(r);
    double h2 = base_.h2(r);

    Vec gk = h1 * dx;                                            // d k / d y
    Mat hk = h2 * (dx * dx.transpose()) + h1 * Mat::Identity(n, n);  // d2 k / d y2

    Vec gw = window_.grad_at(z.x);
    Mat hw = window_.hess_at(z.x);

    out.value = wy * k * wc;
    out.grad_y = (gw * k + wy * gk) * wc;
    out.hess_y = (hw * k + gw * gk.transpose() + gk * gw.transpose() + wy * hk) * wc;
    return out;
}

// ---------------------------------------------------------------------------
// fill distance / centers

namespace {

double probe_sweep(const std::vector<Vec>& pts, const Vec& lo, const Vec& hi, double spacing,
                   const std::function<bool(const Vec&)>& member) {
    const int d = static_cast<int>(lo.size());
    std::vector<int> counts(d);
    std::int64_t total = 1;
    for (int i = 0; i < d; ++i) {
        double range = hi(i) - lo(i);
        counts[i] = range <= 0.0 ? 1 : static_cast<int>(std::ceil(range / spacing)) + 1;
        total *= counts[i];
    }
    std::mutex mu;
    double h = 0.0;
    parallel_for(total, [&](std::int64_t beg, std::int64_t end) {
        double local = 0.0;
        Vec p(d);
        for (std::int64_t idx = beg; idx < end; ++idx) {
            std::int64_t rem = idx;
            for (int i = 0; i < d; ++i) {
                int k = static_cast<int>(rem % counts[i]);
                rem /= counts[i];
                p(i) = counts[i] == 1 ? 0.5 * (lo(i) + hi(i))
                                      : lo(i) + (hi(i) - lo(i)) * k / (counts[i] - 1);
            }
            if (member && !member(p)) continue;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : pts) best = std::min(best, (p - q).norm());
            local = std::max(local, best);
        }
        std::lock_guard<std::mutex> lock(mu);
        h = std::max(h, local);
    });
    return h;
}

}  // namespace

double fill_distance(const std::vector<STPoint>& points, const SpaceTimeDomain& domain) {
    if (points.empty()) throw ConfigError("fill_distance: empty point set");
    const int d = 1 + domain.n;
    std::vector<Vec> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.push_back(p.as_vector());
    Vec lo(d), hi(d);
    lo(0) = 0.0;
    hi(0) = domain.T;
    for (int i = 1; i < d; ++i) {
        lo(i) = -domain.r_star;
        hi(i) = domain.r_star;
    }
    std::function<bool(const Vec&)> member;
    if (domain.n >= 2)
        member = [&domain](const Vec& p) { return p.tail(domain.n).norm() <= domain.r_star; };

    double spacing = domain.diameter() / 20.0;
    double h = 0.0;
    for (int iter = 0; iter < 8; ++iter) {
        h = probe_sweep(pts, lo, hi, spacing, member);
        if (spacing <= h / 10.0) break;
        spacing = std::max(h / 12.0, spacing / 16.0);
    }
    return h;
}

CenterSet make_centers(const SpaceTimeDomain& domain, double target_fill, int max_centers) {
    if (target_fill > domain.diameter())
        throw ConfigError("make_centers: target fill exceeds domain diameter");
    if (target_fill <= 0.0) throw ConfigError("make_centers: target fill must be positive");
    const int d = 1 + domain.n;

    {
        // A single mid-domain center suffices for very coarse targets.
        CenterSet single;
        STPoint c;
        c.t = 0.5 * domain.T;
        c.x = Vec::Zero(domain.n);
        single.centers.push_back(std::move(c));
        single.fill = fill_distance(single.centers, domain);
        if (single.fill <= target_fill) return single;
    }

    double step = 2.0 * target_fill / std::sqrt(static_cast<double>(d));
    for (int attempt = 0; attempt < 48; ++attempt) {
        std::vector<int> counts(d);
        std::int64_t total = 1;
        Vec lo(d), hi(d);
        lo(0) = 0.0;
        hi(0) = domain.T;
        for (int i = 1; i < d; ++i) {
            lo(i) = -domain.r_star;
            hi(i) = domain.r_star;
        }
        for (int i = 0; i < d; ++i) {
            double range = hi(i) - lo(i);
            counts[i] = std::max<int>(1, static_cast<int>(std::ceil(range / step)) + 1);
            if (range <= step) counts[i] = std::max(counts[i], 1);
            total *= counts[i];
        }
        CenterSet out;
        for (std::int64_t idx = 0; idx < total; ++idx) {
            std::int64_t rem = idx;
            Vec p(d);
            for (int i = 0; i < d; ++i) {
                int k = static_cast<int>(rem % counts[i]);
                rem /= counts[i];
                p(i) = counts[i] == 1 ? 0.5 * (lo(i) + hi(i))
                                      : lo(i) + (hi(i) - lo(i)) * k / (counts[i] - 1);
            }
            if (domain.n >= 2 && p.tail(domain.n).norm() > domain.r_star) continue;
            STPoint c;
            c.t = p(0);
            c.x = p.tail(domain.n);
            out.centers.push_back(std::move(c));
        }
        if (static_cast<int>(out.centers.size()) > max_centers)
            throw BudgetError("make_centers: " + std::to_string(out.centers.size()) +
                              " centers exceed cap " + std::to_string(max_centers) +
                              "; a larger epsilon (coarser fill target) is advised");
        out.fill = fill_distance(out.centers, domain);
        if (out.fill <= target_fill) return out;
        step *= 0.85;
    }
    throw NumericalError("make_centers: could not reach target fill distance");
}

}  // namespace fokkerfit
