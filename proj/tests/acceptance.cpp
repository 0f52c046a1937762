// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and budgets are pinned in code next to each check.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "fokkerfit/assembly.hpp"
#include "fokkerfit/fp_solver.hpp"
#include "fokkerfit/pipeline.hpp"
#include "fokkerfit/quadrature.hpp"
#include "fokkerfit/sdp.hpp"
#include "test_support.hpp"

using namespace fokkerfit;
using testsupport::vec1;

namespace {

struct Criterion {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string temp_dir(const std::string& name) {
    namespace fs = std::filesystem;
    std::string dir = (fs::temp_directory_path() / name).string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// --------------------------------------------------------------------------
// 1. Kernel identities

Criterion criterion_kernels() {
    Criterion c;
    const double R = 1.0;
    const double L = 40.0 / R;

    {  // 1-D bandlimit: FT of rho on [-L, L]
        BandlimitedKernel rho(R, 1);
        auto nodes = panel_nodes(-L, L, 400, 6);
        std::vector<double> vals(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i)
            vals[i] = rho.value_radial(std::abs(nodes[i].x));
        auto ft = [&](double xi) {
            double acc = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                acc += nodes[i].w * vals[i] * std::cos(2.0 * M_PI * xi * nodes[i].x);
            return acc;
        };
        double worst_in = 0.0, worst_out = 0.0;
        for (int k = 0; k <= 12; ++k) worst_in = std::max(worst_in, std::abs(ft(0.9 * R * k / 12.0) - 1.0));
        for (int k = 0; k <= 6; ++k)
            worst_out = std::max(worst_out, std::abs(ft(1.1 * R + 0.9 * R * k / 6.0)));
        c.require(worst_in <= 2e-2, "1-D in-band dev " + std::to_string(worst_in));
        c.require(worst_out <= 2e-2, "1-D out-band dev " + std::to_string(worst_out));
    }

    {  // 2-D bandlimit on the box [-L, L]^2; row sums are xi-independent
        BandlimitedKernel rho(R, 2);
        auto nodes = panel_nodes(-L, L, 400, 4);
        const int P = static_cast<int>(nodes.size());
        std::vector<double> row(P, 0.0);
        parallel_for(P, [&](std::int64_t beg, std::int64_t end) {
            for (std::int64_t i = beg; i < end; ++i) {
                double acc = 0.0;
                for (int j = 0; j < P; ++j)
                    acc += nodes[j].w * rho.value_radial(std::hypot(nodes[i].x, nodes[j].x));
                row[i] = acc;
            }
        });
        auto ft = [&](double xi) {
            double acc = 0.0;
            for (int i = 0; i < P; ++i)
                acc += nodes[i].w * std::cos(2.0 * M_PI * xi * nodes[i].x) * row[i];
            return acc;
        };
        double worst_in = 0.0, worst_out = 0.0;
        for (int k = 0; k <= 12; ++k) worst_in = std::max(worst_in, std::abs(ft(0.9 * R * k / 12.0) - 1.0));
        for (int k = 0; k <= 6; ++k)
            worst_out = std::max(worst_out, std::abs(ft(1.1 * R + 0.9 * R * k / 6.0)));
        c.require(worst_in <= 2e-2, "2-D in-band dev " + std::to_string(worst_in));
        c.require(worst_out <= 2e-2, "2-D out-band dev " + std::to_string(worst_out));
    }

    {  // convolution identity vs adaptive quadrature, 20 random pairs
        BandlimitedKernel rho(R, 1);
        Rng rng(2024);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            double x1 = (2.0 * rng.uniform() - 1.0) * 2.0;
            double x2 = (2.0 * rng.uniform() - 1.0) * 2.0;
            auto f = [&](double y) {
                return rho.value_radial(std::abs(y - x1)) * rho.value_radial(std::abs(y - x2));
            };
            AdaptiveOptions opts;
            opts.rel_tol = 1e-8;
            opts.abs_tol = 1e-9;
            opts.max_intervals = 20000;
            double hw = 1000.0 / R + 3.0;
            double oracle = adaptive_gk(f, -hw, hw, opts).value;
            worst = std::max(worst, std::abs(space_pair_integral(vec1(x1), vec1(x2), R, 1) - oracle));
        }
        c.require(worst <= 1e-3, "convolution identity dev " + std::to_string(worst));
    }
    return c;
}

// --------------------------------------------------------------------------
// 2. Interpolation exactness

Criterion criterion_interpolation() {
    Criterion c;
    for (int M : {2, 5, 12}) {
        std::vector<double> times(M);
        for (int l = 0; l < M; ++l) times[l] = 1.0 * l / (M - 1);
        TimeCoeffs tc(times, SobolevTimeKernel(2));
        double worst = 0.0;
        for (int j = 0; j < M; ++j) {
            Vec cv = tc.coeffs(times[j]);
            for (int l = 0; l < M; ++l)
                worst = std::max(worst, std::abs(cv(l) - (l == j ? 1.0 : 0.0)));
        }
        c.require(worst <= 1e-8, "M=" + std::to_string(M) + " delta dev " + std::to_string(worst));
    }
    {
        std::vector<double> times = {0.0, 0.25, 0.5, 0.75, 1.0};
        TimeCoeffs tc(times, SobolevTimeKernel(1));
        const double h = 1e-6;
        double worst = 0.0;
        for (int probe = 0; probe < 20; ++probe) {
            double t = 0.02 + 0.96 * probe / 19.0;
            Vec d = tc.coeffs_dt(t);
            Vec fd = (tc.coeffs(t + h) - tc.coeffs(t - h)) / (2.0 * h);
            for (int l = 0; l < 5; ++l)
                worst = std::max(worst, std::abs(d(l) - fd(l)) / (std::abs(fd(l)) + 1.0));
        }
        c.require(worst <= 1e-5, "cdot FD dev " + std::to_string(worst));
    }
    return c;
}

// --------------------------------------------------------------------------
// 3. Operator duality

struct BumpFn {
    double L, c0, c1, c2;
    ScalarJet jet(double y) const {
        double s = y / L;
        ScalarJet out;
        out.grad = Vec::Zero(1);
        out.hess = Mat::Zero(1, 1);
        if (std::abs(s) >= 1.0) return out;
        double q = 1.0 - s * s;
        double b = std::exp(-1.0 / q);
        double g1 = -2.0 * s / (q * q) / L;
        double g2 = (-2.0 / (q * q) - 8.0 * s * s / (q * q * q)) / (L * L);
        double p = c0 + c1 * y + c2 * y * y, p1 = c1 + 2.0 * c2 * y, p2 = 2.0 * c2;
        out.value = p * b;
        out.grad(0) = p1 * b + p * b * g1;
        out.hess(0, 0) = p2 * b + 2.0 * p1 * b * g1 + p * b * (g2 + g1 * g1);
        return out;
    }
    ScalarField field() const {
        return [*this](double, const Vec& y) { return jet(y(0)); };
    }
};

Criterion criterion_duality() {
    Criterion c;
    Rng rng(515);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        FieldPtr field = trial == 0 ? ou_field(1.0, 0.5, 1, 3.5)
                                    : const_field(Mat::Constant(1, 1, 0.2 + rng.uniform()),
                                                  Vec::Constant(1, rng.normal()));
        GeneratorContext ctx{field, 0.3, nullptr};
        BumpFn phi{2.3, rng.normal(), rng.normal(), rng.normal()};
        BumpFn u{2.3, rng.normal(), rng.normal(), rng.normal()};
        auto integrand = [&](double y) {
            return apply_generator(ctx, phi.field(), 0.4, vec1(y)) * u.jet(y).value -
                   phi.jet(y).value * apply_dual(ctx, u.field(), 0.4, vec1(y));
        };
        AdaptiveOptions opts;
        opts.rel_tol = 1e-10;
        opts.abs_tol = 1e-9;
        opts.max_intervals = 8000;
        opts.breakpoints = {-2.5, -1.5, 1.5, 2.5};
        worst = std::max(worst, std::abs(adaptive_gk(integrand, -2.3, 2.3, opts).value));
    }
    c.require(worst <= 1e-5, "duality gap " + std::to_string(worst));
    c.note("max gap " + std::to_string(worst));
    return c;
}

// --------------------------------------------------------------------------
// 4. Assembly consistency

Criterion criterion_assembly() {
    Criterion c;
    auto field = ou_field(1.0, 0.5, 1, 10.0);
    InitialLaw law = InitialLaw::gaussian(vec1(1.0), 0.0625 * Mat::Identity(1, 1));
    const double alpha = 0.5, R = 3.0;
    auto obs = std::make_shared<ObservationSet>(simulate(*field, alpha, law, 3, 50, 1.0, 1e-3, 404));
    auto density = std::make_shared<DensityModel>(obs, R, 1);
    SpaceTimeDomain dom{1.0, 3.0, 1};
    auto kernel = std::make_shared<WindowedSpaceTimeKernel>(dom, MaternKernel(3.5), 1.0);
    auto centers = make_centers(dom, 1.5).centers;
    const int Q = static_cast<int>(centers.size());
    c.require(Q <= 9, "Q=" + std::to_string(Q) + " exceeds 9");

    QuadraticProgram qp = assemble_H(density, centers, kernel, alpha, 0.0, {});
    double hw = density->suggested_halfwidth();
    int nx = static_cast<int>(2.0 * hw * 100.0 * R) + 1;

    Rng rng(505);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        Mat F(Q, Q);
        for (int i = 0; i < Q * Q; ++i) F(i / Q, i % Q) = 0.4 * rng.normal();
        Mat A = F * F.transpose();
        Vec B(Q);
        for (int i = 0; i < Q; ++i) B(i) = 0.4 * rng.normal();
        LearnedCoefficients model(centers, A, B, kernel, alpha);
        double oracle = testsupport::residual_sq_lattice(*density, model, alpha, hw, nx, 161);
        double quad = qp.quadratic(A, B);
        worst = std::max(worst, std::abs(quad - oracle) / std::abs(oracle));
    }
    c.require(worst <= 1e-2, "objective vs quadrature rel dev " + std::to_string(worst));
    c.note("worst rel dev " + std::to_string(worst));
    return c;
}

// --------------------------------------------------------------------------
// 5. Solver correctness

Criterion criterion_solver() {
    Criterion c;
    {  // planted optimum
        Rng rng(606);
        const int Q = 3, n = 1, qn = 3, dim = 1 + qn + qn * qn;
        Mat F(qn, qn);
        for (int i = 0; i < qn * qn; ++i) F(i / qn, i % qn) = rng.normal();
        Mat Astar = F * F.transpose();
        Vec Bstar(qn);
        for (int i = 0; i < qn; ++i) Bstar(i) = rng.normal();
        Vec ustar(qn + qn * qn);
        ustar.head(qn) = Bstar;
        ustar.tail(qn * qn) = Eigen::Map<const Vec>(Astar.data(), qn * qn);
        Mat H = Mat::Identity(dim, dim);
        H(0, 0) = ustar.squaredNorm() + 1.0;
        H.block(0, 1, 1, dim - 1) = -ustar.transpose();
        H.block(1, 0, dim - 1, 1) = -ustar;
        QuadraticProgram qp;
        qp.H = H;
        qp.Q = Q;
        qp.n = n;
        qp.lambda = 0.0;
        qp.gram = Mat::Zero(Q, Q);
        SolveReport rep = solve(qp);
        Vec u_oracle = H.block(1, 1, dim - 1, dim - 1).ldlt().solve(-H.block(1, 0, dim - 1, 1));
        Vec v(dim);
        v(0) = 1.0;
        v.tail(dim - 1) = u_oracle;
        double obj_oracle = v.dot(H * v);
        c.require(std::abs(rep.objective - obj_oracle) <= 1e-8,
                  "planted objective gap " + std::to_string(rep.objective - obj_oracle));
        c.require(rep.psd_residual >= -1e-8 * (rep.A.norm() + 1.0),
                  "planted PSD residual " + std::to_string(rep.psd_residual));
    }
    {  // feasibility dominance against the kernel-projection of the OU truth
        const double theta = 1.0, sigma2 = 0.5, alpha = 0.5, r_star = 2.5;
        auto field = ou_field(theta, sigma2, 1, r_star);
        InitialLaw law = InitialLaw::gaussian(vec1(0.8), 0.0625 * Mat::Identity(1, 1));
        auto obs =
            std::make_shared<ObservationSet>(simulate(*field, alpha, law, 3, 40, 1.0, 1e-3, 707));
        auto density = std::make_shared<DensityModel>(obs, 2.5, 1);
        SpaceTimeDomain dom{1.0, r_star, 1};
        auto kernel = std::make_shared<WindowedSpaceTimeKernel>(dom, MaternKernel(3.5), 1.0);
        auto centers = make_centers(dom, 0.8).centers;
        const int Q = static_cast<int>(centers.size());
        QuadraticProgram qp = assemble_H(density, centers, kernel, alpha, 1e-3, {});
        SolveReport rep = solve(qp);
        c.require(rep.psd_residual >= -1e-8 * (rep.A.norm() + 1.0),
                  "solution PSD residual " + std::to_string(rep.psd_residual));

        // interpolate sqrt(a*) and b* at the centers (minimum-norm projection)
        GramSystem gs(qp.gram);
        Vec sa(Q), bv(Q);
        RadialBump chi(r_star, 1.0);
        for (int l = 0; l < Q; ++l) {
            double x = centers[l].x(0);
            sa(l) = std::sqrt(sigma2 * chi.value(std::abs(x)));
            bv(l) = -theta * x * chi.value(std::abs(x));
        }
        Vec r = gs.solve(sa);
        Vec Bproj = gs.solve(bv);
        Mat Aproj = r * r.transpose();
        double obj_solution = rep.objective;
        double obj_projection = qp.objective(Aproj, Bproj);
        c.require(obj_solution <= obj_projection + 1e-10,
                  "dominance: solver " + std::to_string(obj_solution) + " vs projection " +
                      std::to_string(obj_projection));
        c.note("solver " + std::to_string(obj_solution) + " <= projection " +
               std::to_string(obj_projection));
    }
    return c;
}

// --------------------------------------------------------------------------
// 6. FP solver

Criterion criterion_fp() {
    Criterion c;
    auto gaussian_initial = [](const Lattice& lat, double mean, double var) {
        Vec p0(lat.space_points());
        for (int p = 0; p < lat.space_points(); ++p) {
            double x = lat.point_at(p)(0);
            p0(p) = std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * M_PI * var);
        }
        GridDensity g(lat);
        g.values.row(0) = p0.transpose();
        return Vec(p0 / g.mass_at(0));
    };
    auto heat_error = [&](int nx) {
        Lattice lat;
        lat.t0 = 0.0;
        lat.t1 = 0.5;
        lat.nt = 3;
        lat.xlo = vec1(-6.0);
        lat.xhi = vec1(6.0);
        lat.nx = {nx};
        FpProblem pb;
        pb.coefficients = const_field(Mat::Zero(1, 1), Vec::Zero(1));
        pb.alpha = 1.0;
        pb.lattice = lat;
        pb.initial_values = gaussian_initial(lat, 0.0, 0.25);
        GridDensity sol = solve_fp(pb);
        double err2 = 0.0, drift = 0.0;
        for (int k = 0; k < lat.nt; ++k)
            drift = std::max(drift, std::abs(sol.mass_at(k) - 1.0) / std::max(1.0, lat.time_at(k)));
        for (int p = 0; p < nx; ++p) {
            double x = lat.point_at(p)(0);
            double exact = std::exp(-0.5 * x * x / 0.75) / std::sqrt(2.0 * M_PI * 0.75);
            err2 += lat.trapezoid_weight(p) * (sol.values(2, p) - exact) * (sol.values(2, p) - exact);
        }
        return std::pair<double, double>(std::sqrt(err2 * lat.cell_volume()), drift);
    };

    auto [err601, drift601] = heat_error(601);
    c.require(err601 <= 1e-3, "heat L2 error " + std::to_string(err601));
    c.require(drift601 <= 1e-6, "heat mass drift " + std::to_string(drift601));
    auto [err301, drift301] = heat_error(301);
    (void)drift301;
    double factor = err301 / err601;
    c.require(factor >= 3.2 && factor <= 4.8, "convergence factor " + std::to_string(factor));

    {  // OU relaxation to the stationary density at t = 8
        Lattice lat;
        lat.t0 = 0.0;
        lat.t1 = 8.0;
        lat.nt = 17;
        lat.xlo = vec1(-6.0);
        lat.xhi = vec1(6.0);
        lat.nx = {601};
        FpProblem pb;
        pb.coefficients = ou_field(1.0, 0.5, 1, 10.0);
        pb.alpha = 0.5;
        pb.lattice = lat;
        pb.initial_values = gaussian_initial(lat, 1.0, 0.09);
        GridDensity sol = solve_fp(pb);
        double err2 = 0.0, drift = 0.0;
        for (int k = 0; k < lat.nt; ++k)
            drift = std::max(drift, std::abs(sol.mass_at(k) - 1.0) / std::max(1.0, lat.time_at(k)));
        for (int p = 0; p < 601; ++p) {
            double x = lat.point_at(p)(0);
            double exact = std::exp(-x * x) / std::sqrt(M_PI);  // N(0, 1/2)
            err2 += lat.trapezoid_weight(p) *
                    (sol.values(16, p) - exact) * (sol.values(16, p) - exact);
        }
        double err = std::sqrt(err2 * lat.cell_volume());
        c.require(err <= 1e-3, "OU stationary error " + std::to_string(err));
        c.require(drift <= 1e-6, "OU mass drift " + std::to_string(drift));
        c.note("heat err " + std::to_string(err601) + ", factor " + std::to_string(factor) +
               ", OU err " + std::to_string(err));
    }
    return c;
}

// --------------------------------------------------------------------------
// 7 + 8. End-to-end trend and observation-gap bound

RunConfig trend_config() {
    RunConfig cfg;
    cfg.family = "ou";
    cfg.theta = 1.0;
    cfg.sigma2 = 0.5;
    cfg.alpha = 0.5;
    cfg.r_star = 2.5;
    cfg.n = 1;
    cfg.T = 1.0;
    cfg.sim_dt = 2e-3;
    cfg.law = "gaussian";
    cfg.law_mean = {0.8};
    cfg.law_var = 0.0625;
    cfg.delta = 0.1;
    cfg.m = 1;
    cfg.grid_nx = 151;
    cfg.grid_nt = 17;
    return cfg;
}

struct TrendOutcome {
    Criterion trend;
    Criterion gap;
};

TrendOutcome criterion_trend_and_gap() {
    TrendOutcome out;
    std::string base = temp_dir("fokkerfit_acceptance_trend");
    const std::vector<double> epsilons = {0.4, 0.3, 0.2};
    const std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::vector<double> meanL, meanE;
    bool all_gaps = true;
    for (double eps : epsilons) {
        double accL = 0.0, accE = 0.0;
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = trend_config();
            cfg.epsilon = eps;
            cfg.seed = seed;
            std::string dir =
                base + "/e" + std::to_string(eps).substr(0, 3) + "_s" + std::to_string(seed);
            RunReport rep = run(cfg, dir);
            accL += rep.L_phat;
            accE += rep.E;
            all_gaps = all_gaps && rep.gap_all_bounded && rep.gap_probes == 20;
        }
        meanL.push_back(accL / seeds.size());
        meanE.push_back(accE / seeds.size());
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf), "mean L = {%.4g, %.4g, %.4g}, mean E = {%.4g, %.4g, %.4g}",
                  meanL[0], meanL[1], meanL[2], meanE[0], meanE[1], meanE[2]);
    out.trend.note(buf);
    for (std::size_t i = 1; i < epsilons.size(); ++i) {
        out.trend.require(meanL[i] <= 2.0 * meanL[i - 1],
                          "L(phat) increases beyond the 2x band at eps=" +
                              std::to_string(epsilons[i]));
        out.trend.require(meanE[i] <= 2.0 * meanE[i - 1],
                          "E increases beyond the 2x band at eps=" + std::to_string(epsilons[i]));
    }

    out.gap.require(all_gaps, "a validation run violated lhs <= rhs + 1e-10");
    // independent direct check on fresh random metrics
    {
        Lattice lat;
        lat.t0 = 0.0;
        lat.t1 = 1.0;
        lat.nt = 9;
        lat.xlo = vec1(-2.0);
        lat.xhi = vec1(2.0);
        lat.nx = {81};
        GridDensity p1(lat), p2(lat);
        Rng rng(909);
        for (int k = 0; k < lat.nt; ++k)
            for (int p = 0; p < lat.space_points(); ++p) {
                p1.values(k, p) = rng.normal();
                p2.values(k, p) = rng.normal();
            }
        for (int trial = 0; trial < 20; ++trial) {
            double a = rng.normal(), w = 3.0 * rng.uniform(), ph = rng.uniform();
            SourceFn f = [=](double t, const Vec& y) {
                return a * std::cos(w * t + ph) * std::exp(-y(0) * y(0));
            };
            auto [lhs, rhs] = observation_gap(f, p1, p2);
            out.gap.require(lhs <= rhs + 1e-10, "direct Cauchy-Schwarz violation");
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// 9. Density rate check

Criterion criterion_rate() {
    Criterion c;
    InitialLaw law = InitialLaw::gaussian(vec1(1.0), 0.0625 * Mat::Identity(1, 1));
    Lattice lat;
    lat.t0 = 0.0;
    lat.t1 = 1.0;
    lat.nt = 41;
    lat.xlo = vec1(-5.0);
    lat.xhi = vec1(5.0);
    lat.nx = {501};
    std::string slopes;
    for (std::uint64_t seed : {101ULL, 202ULL, 303ULL}) {
        RateReport rep = empirical_rate_report(1.0, 0.5, 0.5, 10.0, law, 1.0, 2e-3,
                                               {{10, 125, 6.0}, {10, 500, 6.0}, {10, 2000, 6.0}},
                                               1, lat, seed);
        c.require(rep.slope_valid, "slope fit unavailable");
        c.require(rep.slope >= -1.4 && rep.slope <= -0.6,
                  "seed " + std::to_string(seed) + " slope " + std::to_string(rep.slope) +
                      " outside [-1.4,-0.6]");
        slopes += (slopes.empty() ? "" : ", ") + std::to_string(rep.slope);
    }
    c.note("slopes " + slopes);
    return c;
}

}  // namespace

int main() {
    set_max_threads(static_cast<int>(std::thread::hardware_concurrency()));
    struct Entry {
        int id;
        const char* name;
        std::function<Criterion()> fn;
        double budget_s;
    };

    TrendOutcome trend;  // shared by criteria 7 and 8
    bool trend_ran = false;
    auto ensure_trend = [&]() {
        if (!trend_ran) {
            trend = criterion_trend_and_gap();
            trend_ran = true;
        }
    };

    std::vector<Entry> entries = {
        {1, "kernel identities (bandlimit + convolution)", criterion_kernels, 30.0},
        {2, "interpolation exactness", criterion_interpolation, 30.0},
        {3, "operator duality", criterion_duality, 60.0},
        {4, "assembly consistency", criterion_assembly, 300.0},
        {5, "solver correctness (planted + dominance)", criterion_solver, 300.0},
        {6, "FP solver benchmarks", criterion_fp, 120.0},
        {7, "end-to-end trend", [&] { ensure_trend(); return trend.trend; }, 1200.0},
        {8, "observation-gap bound", [&] { ensure_trend(); return trend.gap; }, 1200.0},
        {9, "density rate check", criterion_rate, 600.0},
    };

    int failures = 0;
    for (auto& e : entries) {
        double t0 = now_seconds();
        Criterion c;
        try {
            c = e.fn();
        } catch (const std::exception& ex) {
            c.pass = false;
            c.detail = std::string("exception: ") + ex.what();
        }
        double dt = now_seconds() - t0;
        if (dt > e.budget_s) {
            c.pass = false;
            c.detail += (c.detail.empty() ? "" : "; ") + std::string("over budget ") +
                        std::to_string(e.budget_s) + "s";
        }
        std::printf("CRITERION %d (%s): %s%s%s [%.1f s]\n", e.id, e.name,
                    c.pass ? "PASS" : "FAIL", c.detail.empty() ? "" : " - ", c.detail.c_str(), dt);
        std::fflush(stdout);
        if (!c.pass) ++failures;
    }
    if (failures > 0) {
        std::printf("ACCEPTANCE: %d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("ACCEPTANCE: all criteria passed\n");
    return 0;
}
