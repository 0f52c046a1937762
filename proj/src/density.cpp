#include "fokkerfit/density.hpp"

#include <cmath>

namespace fokkerfit {

namespace {

std::vector<double> grid_times(const ObservationSet& obs) { return obs.times; }

}  // namespace

DensityModel::DensityModel(std::shared_ptr<const ObservationSet> obs, double R, int m_smoothness,
                           double time_lengthscale)
    : obs_(std::move(obs)),
      rho_(R, obs_->n),
      tc_(grid_times(*obs_), SobolevTimeKernel(m_smoothness, time_lengthscale)) {
    max_sample_norm_ = 0.0;
    for (const auto& m : obs_->samples)
        for (int j = 0; j < m.cols(); ++j)
            max_sample_norm_ = std::max(max_sample_norm_, m.col(j).norm());
}

double DensityModel::g_value(int l, const Vec& x) const {
    const Mat& s = obs_->samples[l];
    const int N = obs_->N;
    double acc = 0.0;
    for (int j = 0; j < N; ++j) acc += rho_.value_radial((x - s.col(j)).norm());
    return acc / N;
}

DensityModel::SpaceJet DensityModel::g_jet(int l, const Vec& x) const {
    const int n = obs_->n;
    const int N = obs_->N;
    const Mat& s = obs_->samples[l];
    SpaceJet out;
    out.grad = Vec::Zero(n);
    out.hess = Mat::Zero(n, n);
    Vec d(n);
    for (int j = 0; j < N; ++j) {
        d = x - s.col(j);
        double r = d.norm();
        double h1 = rho_.h1_radial(r);
        out.value += rho_.value_radial(r);
        out.grad += h1 * d;
        out.hess += rho_.h2_radial(r) * (d * d.transpose());
        out.hess.diagonal().array() += h1;
    }
    out.value /= N;
    out.grad /= N;
    out.hess /= N;
    return out;
}

double DensityModel::value(double t, const Vec& x) const {
    Vec c = tc_.coeffs(t);
    double acc = 0.0;
    for (int l = 0; l < obs_->M; ++l)
        if (c(l) != 0.0) acc += c(l) * g_value(l, x);
    return acc;
}

double DensityModel::dt(double t, const Vec& x) const {
    Vec cd = tc_.coeffs_dt(t);
    double acc = 0.0;
    for (int l = 0; l < obs_->M; ++l)
        if (cd(l) != 0.0) acc += cd(l) * g_value(l, x);
    return acc;
}

Vec DensityModel::grad(double t, const Vec& x) const { return jet(t, x).grad; }

Mat DensityModel::hess(double t, const Vec& x) const { return jet(t, x).hess; }

double DensityModel::laplacian(double t, const Vec& x) const { return jet(t, x).laplacian(); }

DensityModel::Jet DensityModel::jet(double t, const Vec& x) const {
    const int n = obs_->n;
    const int N = obs_->N;
    Vec c = tc_.coeffs(t);
    Vec cd = tc_.coeffs_dt(t);

    Jet out;
    out.grad = Vec::Zero(n);
    out.hess = Mat::Zero(n, n);
    Vec d(n);
    for (int l = 0; l < obs_->M; ++l) {
        const Mat& s = obs_->samples[l];
        double gv = 0.0;
        Vec gg = Vec::Zero(n);
        Mat gh = Mat::Zero(n, n);
        for (int j = 0; j < N; ++j) {
            d = x - s.col(j);
            double r = d.norm();
            double h1 = rho_.h1_radial(r);
            double h2 = rho_.h2_radial(r);
            gv += rho_.value_radial(r);
            gg += h1 * d;
            gh += h2 * (d * d.transpose());
            gh.diagonal().array() += h1;
        }
        gv /= N;
        gg /= N;
        gh /= N;
        out.value += c(l) * gv;
        out.dt += cd(l) * gv;
        out.grad += c(l) * gg;
        out.hess += c(l) * gh;
    }
    return out;
}

GridDensity DensityModel::evaluate_on(const Lattice& lattice) const {
    const int M = obs_->M;
    const int P = lattice.space_points();
    Mat G(M, P);
    Mat pts = lattice.space_matrix();
    parallel_for(P, [&](std::int64_t beg, std::int64_t end) {
        for (std::int64_t p = beg; p < end; ++p)
            for (int l = 0; l < M; ++l) G(l, static_cast<int>(p)) = g_value(l, pts.col(p));
    });
    Mat C(lattice.nt, M);
    for (int k = 0; k < lattice.nt; ++k) C.row(k) = tc_.coeffs(lattice.time_at(k)).transpose();
    GridDensity out(lattice);
    out.values = C * G;
    return out;
}

double DensityModel::suggested_halfwidth() const {
    // One tail of rho integrates to ~1/(2 pi^2 R d) beyond distance d, so a
    // margin c/R keeps the two-sided truncation error near 1/(pi^2 c);
    // c = 128 holds it below 1e-3.
    return max_sample_norm_ + 128.0 / rho_.bandwidth();
}

// ---------------------------------------------------------------------------
// loss

namespace {

// Lattice finite differences along one space dimension (centered interior,
// one-sided ends), applied to every row of `v`.
Mat fd_space(const Mat& v, const Lattice& lat, int d, int order) {
    const int P = lat.space_points();
    const int nt = lat.nt;
    const double h = lat.dx(d);
    Mat out = Mat::Zero(nt, P);
    if (lat.nx[d] < 3) return out;
    int stride = 1;
    for (int q = 0; q < d; ++q) stride *= lat.nx[q];
    const int count = lat.nx[d];
    for (int p = 0; p < P; ++p) {
        int k = (p / stride) % count;
        int pm = p - stride, pp = p + stride;
        if (order == 1) {
            if (k == 0)
                out.col(p) = (v.col(pp) - v.col(p)) / h;
            else if (k == count - 1)
                out.col(p) = (v.col(p) - v.col(pm)) / h;
            else
                out.col(p) = (v.col(pp) - v.col(pm)) / (2.0 * h);
        } else {
            if (k == 0)
                out.col(p) = (v.col(p) - 2.0 * v.col(pp) + v.col(p + 2 * stride)) / (h * h);
            else if (k == count - 1)
                out.col(p) = (v.col(p) - 2.0 * v.col(pm) + v.col(p - 2 * stride)) / (h * h);
            else
                out.col(p) = (v.col(pp) - 2.0 * v.col(p) + v.col(pm)) / (h * h);
        }
    }
    return out;
}

Mat fd_time(const Mat& v, const Lattice& lat) {
    const double h = lat.dt();
    Mat out = Mat::Zero(v.rows(), v.cols());
    const int nt = lat.nt;
    if (nt < 2 || h == 0.0) return out;
    for (int k = 0; k < nt; ++k) {
        if (k == 0)
            out.row(k) = (v.row(1) - v.row(0)) / h;
        else if (k == nt - 1)
            out.row(k) = (v.row(nt - 1) - v.row(nt - 2)) / h;
        else
            out.row(k) = (v.row(k + 1) - v.row(k - 1)) / (2.0 * h);
    }
    return out;
}

double spacetime_sq(const Mat& v, const Lattice& lat) {
    GridDensity g(lat);
    g.values = v;
    return g.l2_spacetime_sq();
}

}  // namespace

double loss_L(const GridDensity& u, const GridDensity& p_ref) {
    if (!u.lattice.compatible(p_ref.lattice)) throw ConfigError("loss_L: lattice mismatch");
    const Lattice& lat = u.lattice;
    const int n = lat.dim();
    Mat diff = u.values - p_ref.values;

    double total = spacetime_sq(fd_time(diff, lat), lat);  // time-derivative term
    total += spacetime_sq(diff, lat);                      // H^2 order 0
    std::vector<Mat> first(n);
    for (int d = 0; d < n; ++d) {
        first[d] = fd_space(diff, lat, d, 1);
        total += spacetime_sq(first[d], lat);
        total += spacetime_sq(fd_space(diff, lat, d, 2), lat);
    }
    for (int d = 0; d < n; ++d)
        for (int e = d + 1; e < n; ++e) total += spacetime_sq(fd_space(first[d], lat, e, 1), lat);
    return total;
}

// ---------------------------------------------------------------------------
// analytic OU reference

GridDensity analytic_ou_density(double theta, double sigma2_total, const InitialLaw& law,
                                const Lattice& lattice) {
    const int n = lattice.dim();
    Vec m0;
    Vec v0;
    if (law.kind == InitialLaw::Kind::Point) {
        m0 = law.mean;
        v0 = Vec::Zero(n);
    } else if (law.kind == InitialLaw::Kind::Gaussian) {
        m0 = law.mean;
        Mat c = law.cov;
        if ((c - Mat(c.diagonal().asDiagonal())).norm() > 1e-14 * c.norm())
            throw ConfigError("analytic_ou_density: diagonal covariance required");
        v0 = c.diagonal();
    } else {
        throw ConfigError("analytic_ou_density: gaussian or point initial law required");
    }

    GridDensity out(lattice);
    Mat pts = lattice.space_matrix();
    for (int k = 0; k < lattice.nt; ++k) {
        double t = lattice.time_at(k);
        double decay = std::exp(-theta * t);
        Vec mt = decay * m0;
        Vec vt(n);
        for (int d = 0; d < n; ++d) {
            double relax = theta > 0.0 ? sigma2_total * (1.0 - decay * decay) / (2.0 * theta)
                                       : sigma2_total * t;
            vt(d) = v0(d) * decay * decay + relax;
        }
        for (int p = 0; p < lattice.space_points(); ++p) {
            double acc = 1.0;
            for (int d = 0; d < n; ++d) {
                double var = vt(d);
                if (var <= 0.0) throw NumericalError("analytic_ou_density: degenerate variance");
                double z = pts(d, p) - mt(d);
                acc *= std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
            }
            out.values(k, p) = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// rate report

RateReport empirical_rate_report(double theta, double sigma2, double alpha, double r_star,
                                 const InitialLaw& law, double T, double sim_dt,
                                 const std::vector<std::tuple<int, int, double>>& schedule,
                                 int m_smoothness, const Lattice& lattice, std::uint64_t seed) {
    if (schedule.empty()) throw ConfigError("empirical_rate_report: empty schedule");
    RateReport report;
    auto field = ou_field(theta, sigma2, lattice.dim(), r_star);
    GridDensity ref = analytic_ou_density(theta, sigma2 + alpha, law, lattice);

    for (const auto& [M, N, R] : schedule) {
        auto obs = std::make_shared<ObservationSet>(
            simulate(*field, alpha, law, M, N, T, sim_dt, seed));
        DensityModel model(obs, R, m_smoothness);
        RateRow row;
        row.M = M;
        row.N = N;
        row.R = R;
        row.loss = loss_L(model.evaluate_on(lattice), ref);
        report.rows.push_back(row);
    }

    if (report.rows.size() == 1) {
        report.verdict = "single-row";
        return report;
    }
    int violations = 0;
    for (std::size_t i = 1; i < report.rows.size(); ++i)
        if (report.rows[i].loss > 2.0 * report.rows[i - 1].loss) ++violations;
    report.verdict = violations == 0 ? "non-increasing(2x)"
                                     : "violations:" + std::to_string(violations);

    bool only_n = true;
    for (const auto& r : report.rows)
        if (r.M != report.rows[0].M || r.R != report.rows[0].R) only_n = false;
    if (only_n) {
        // least-squares slope of log(loss) against log(N)
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int k = static_cast<int>(report.rows.size());
        for (const auto& r : report.rows) {
            double x = std::log(static_cast<double>(r.N)), y = std::log(r.loss);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        report.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        report.slope_valid = true;
    }
    return report;
}

}  // namespace fokkerfit
