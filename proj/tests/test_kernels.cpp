#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fokkerfit/kernels.hpp"
#include "fokkerfit/quadrature.hpp"

using namespace fokkerfit;

namespace {

Vec vec1(double x) {
    Vec v(1);
    v(0) = x;
    return v;
}

Vec vec2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

// Oracle: numerical inverse Fourier transform of the ball indicator in 1-D.
double indicator_ift_1d(double R, double x) {
    auto f = [&](double xi) { return std::cos(2.0 * M_PI * xi * x); };
    return adaptive_gk(f, -R, R, {1e-12, 1e-14, 4000, {}}).value;
}

// Oracle: Cartesian quadrature of int_{|xi|<=R} |xi|^{2k} cos(2 pi xi.d) dxi
// in 2-D (indicator handled by rejection; accuracy limited by the boundary).
double disc_moment_cartesian(int k, double R, const Vec& d) {
    const int panels = 220;
    auto nodes = panel_nodes(-R, R, panels, 4);
    double acc = 0.0;
    for (const auto& a : nodes) {
        for (const auto& b : nodes) {
            double r2 = a.x * a.x + b.x * b.x;
            if (r2 > R * R) continue;
            acc += a.w * b.w * std::pow(r2, k) * std::cos(2.0 * M_PI * (a.x * d(0) + b.x * d(1)));
        }
    }
    return acc;
}

}  // namespace

TEST_CASE("rho 1-D closed form and zero") {
    BandlimitedKernel rho(1.0, 1);
    // sin(2 pi R x) / (pi x) at x = 0.5, R = 1 -> sin(pi)/(pi/2) = 0
    CHECK(rho.value(vec1(0.5)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rho.value(vec1(0.25)) == doctest::Approx(std::sin(M_PI / 2) / (M_PI * 0.25)));
    // oracle: numerical inverse FT of the indicator (0.02 lands in the series branch)
    for (double x : {0.0, 0.02, 0.1, 0.3, 0.7, 1.9}) {
        CHECK(rho.value(vec1(x)) == doctest::Approx(indicator_ift_1d(1.0, x)).epsilon(1e-9));
    }
}

TEST_CASE("rho at origin equals ball volume times R^n") {
    // V_n R^n; quadrature oracles: interval length, disc area
    BandlimitedKernel r1(2.0, 1);
    CHECK(r1.value(vec1(0.0)) == doctest::Approx(4.0).epsilon(1e-12));  // 2R
    CHECK(r1.value(vec1(0.0)) == doctest::Approx(indicator_ift_1d(2.0, 0.0)).epsilon(1e-12));

    BandlimitedKernel r2(1.5, 2);
    double vol = disc_moment_cartesian(0, 1.5, vec2(0, 0));
    CHECK(r2.value(vec2(0, 0)) == doctest::Approx(M_PI * 1.5 * 1.5).epsilon(1e-10));
    CHECK(r2.value(vec2(0, 0)) == doctest::Approx(vol).epsilon(1e-4));

    BandlimitedKernel r3(1.2, 3);
    CHECK(r3.value(Vec::Zero(3)) ==
          doctest::Approx(4.0 / 3.0 * M_PI * std::pow(1.2, 3)).epsilon(1e-10));
}

TEST_CASE("rho radial derivatives match finite differences") {
    for (int n : {1, 2, 3}) {
        BandlimitedKernel rho(1.7, n);
        const double h = 1e-5;
        for (double r : {0.05, 0.31, 0.77, 1.42, 3.3}) {
            double d1 = rho.d1_radial(r);
            double d1_fd = (rho.value_radial(r + h) - rho.value_radial(r - h)) / (2 * h);
            CHECK(d1 == doctest::Approx(d1_fd).epsilon(1e-6));
            double d2 = rho.d2_radial(r);
            double d2_fd =
                (rho.value_radial(r + h) - 2 * rho.value_radial(r) + rho.value_radial(r - h)) /
                (h * h);
            CHECK(d2 == doctest::Approx(d2_fd).epsilon(1e-4));
        }
        // validate the series branch (u < 0.5) against finite differences of
        // the value, which is itself checked against the Fourier oracle
        double rs = 0.3 / (2.0 * M_PI * 1.7);
        double d1s = rho.d1_radial(rs);
        double d1f = (rho.value_radial(rs + h) - rho.value_radial(rs - h)) / (2 * h);
        CHECK(d1s == doctest::Approx(d1f).epsilon(1e-6).scale(std::abs(d1s) + 1e-8));
        double d2s = rho.d2_radial(rs);
        double d2f = (rho.value_radial(rs + h) - 2 * rho.value_radial(rs) +
                      rho.value_radial(rs - h)) /
                     (h * h);
        CHECK(d2s == doctest::Approx(d2f).epsilon(1e-4).scale(std::abs(d2s) + 1e-6));
    }
}

TEST_CASE("rho gradient and hessian in 2-D match finite differences") {
    BandlimitedKernel rho(1.3, 2);
    const double h = 1e-5;
    for (auto& p : {vec2(0.3, -0.2), vec2(1.1, 0.7), vec2(-0.05, 0.02)}) {
        Vec g = rho.grad(p);
        Mat H = rho.hess(p);
        for (int i = 0; i < 2; ++i) {
            Vec e = Vec::Zero(2);
            e(i) = h;
            double fd = (rho.value(p + e) - rho.value(p - e)) / (2 * h);
            CHECK(g(i) == doctest::Approx(fd).epsilon(1e-5));
            for (int j = 0; j < 2; ++j) {
                Vec ej = Vec::Zero(2);
                ej(j) = h;
                double fd2 = (rho.value(p + e + ej) - rho.value(p + e - ej) - rho.value(p - e + ej) +
                              rho.value(p - e - ej)) /
                             (4 * h * h);
                CHECK(H(i, j) == doctest::Approx(fd2).epsilon(2e-4).scale(std::abs(H(i,j)) + 1.0));
            }
        }
        CHECK(rho.laplacian(p) == doctest::Approx(H.trace()).epsilon(1e-12));
    }
}

TEST_CASE("ball moments match quadrature oracles") {
    SUBCASE("1-D") {
        double R = 1.4;
        for (double d : {0.0, 0.03, 0.4, 1.7}) {
            for (int k : {0, 1, 2}) {
                auto f = [&](double xi) {
                    return std::pow(xi * xi, k) * std::cos(2.0 * M_PI * xi * d);
                };
                double oracle = adaptive_gk(f, -R, R, {1e-12, 1e-15, 4000, {}}).value;
                CHECK(ball_moment(k, 1, R, d) ==
                      doctest::Approx(oracle).epsilon(1e-8).scale(std::abs(oracle) + 1e-6));
            }
        }
    }
    SUBCASE("2-D") {
        double R = 1.1;
        for (double d : {0.0, 0.05, 0.6, 1.3}) {
            for (int k : {0, 1, 2}) {
                double oracle = disc_moment_cartesian(k, R, vec2(d, 0.0));
                CHECK(ball_moment(k, 2, R, d) ==
                      doctest::Approx(oracle).epsilon(5e-3).scale(std::abs(oracle) + 1e-3));
            }
        }
    }
}

TEST_CASE("matern closed forms at nu = 3/2 and 5/2") {
    MaternKernel m32(1.5);
    MaternKernel m52(2.5);
    for (double r : {0.0, 0.2, 0.9, 2.4}) {
        double s3 = std::sqrt(3.0) * r;
        CHECK(m32.value(r) == doctest::Approx((1.0 + s3) * std::exp(-s3)).epsilon(1e-12));
        double s5 = std::sqrt(5.0) * r;
        CHECK(m52.value(r) ==
              doctest::Approx((1.0 + s5 + 5.0 * r * r / 3.0) * std::exp(-s5)).epsilon(1e-12));
    }
    CHECK(m32.value(0.0) == doctest::Approx(1.0));
    CHECK(m52.value(0.0) == doctest::Approx(1.0));
}

TEST_CASE("matern derivatives match finite differences") {
    for (double nu : {1.5, 2.5, 3.5, 5.5}) {
        MaternKernel k(nu, 0.8);
        const double h = 1e-6;
        for (double r : {0.05, 0.33, 1.21, 2.7}) {
            double fd1 = (k.value(r + h) - k.value(r - h)) / (2 * h);
            CHECK(k.d1(r) == doctest::Approx(fd1).epsilon(1e-6));
            double fd2 = (k.value(r + h) - 2 * k.value(r) + k.value(r - h)) / (h * h);
            CHECK(k.d2(r) == doctest::Approx(fd2).epsilon(1e-3).scale(std::abs(fd2) + 1e-3));
        }
        // validate the series branch (u < 0.5) against finite differences of
        // the branch-free polynomial value
        double beta = std::sqrt(2.0 * nu) / 0.8;
        double rs = 0.3 / beta;
        double d1f = (k.value(rs + h) - k.value(rs - h)) / (2 * h);
        CHECK(k.h1(rs) * rs == doctest::Approx(d1f).epsilon(1e-6).scale(std::abs(d1f) + 1e-8));
        if (nu >= 3.5) {
            double d2f = (k.value(rs + h) - 2 * k.value(rs) + k.value(rs - h)) / (h * h);
            CHECK(k.h2(rs) * rs * rs + k.h1(rs) ==
                  doctest::Approx(d2f).epsilon(1e-3).scale(std::abs(d2f) + 1e-6));
        }
    }
}

TEST_CASE("time coefficients interpolate exactly at the grid") {
    for (int M : {2, 5, 12}) {
        std::vector<double> times(M);
        for (int l = 0; l < M; ++l) times[l] = M == 1 ? 0.0 : 1.0 * l / (M - 1);
        TimeCoeffs tc(times, SobolevTimeKernel(2));
        for (int j = 0; j < M; ++j) {
            Vec c = tc.coeffs(times[j]);
            for (int l = 0; l < M; ++l)
                CHECK(c(l) == doctest::Approx(l == j ? 1.0 : 0.0).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("single-node grid reduces to a kernel ratio") {
    TimeCoeffs tc({0.3}, SobolevTimeKernel(1));
    SobolevTimeKernel k(1);
    for (double t : {0.0, 0.3, 0.8}) {
        CHECK(tc.coeffs(t)(0) == doctest::Approx(k(t, 0.3) / k(0.3, 0.3)).epsilon(1e-12));
    }
}

TEST_CASE("time coefficient derivative matches finite differences") {
    std::vector<double> times = {0.0, 0.25, 0.5, 0.75, 1.0};
    TimeCoeffs tc(times, SobolevTimeKernel(1));
    const double h = 1e-6;
    for (int probe = 0; probe < 20; ++probe) {
        double t = 0.03 + 0.94 * probe / 19.0;
        Vec d = tc.coeffs_dt(t);
        Vec fd = (tc.coeffs(t + h) - tc.coeffs(t - h)) / (2 * h);
        for (int l = 0; l < 5; ++l)
            CHECK(d(l) == doctest::Approx(fd(l)).epsilon(1e-5).scale(std::abs(fd(l)) + 1.0));
    }
}

TEST_CASE("interpolation reproduces sampled functions at grid nodes") {
    std::vector<double> times = {0.0, 0.2, 0.55, 1.0};
    TimeCoeffs tc(times, SobolevTimeKernel(1));
    auto f = [](double t) { return std::sin(3.0 * t) + 0.5 * t * t; };
    for (double tj : times) {
        Vec c = tc.coeffs(tj);
        double interp = 0.0;
        for (std::size_t l = 0; l < times.size(); ++l) interp += c(l) * f(times[l]);
        CHECK(interp == doctest::Approx(f(tj)).epsilon(1e-8));
    }
}

TEST_CASE("gram matrices stay PSD before jitter") {
    std::vector<double> times = {0.0, 0.1, 0.2, 0.4, 0.8, 1.0};
    SobolevTimeKernel k(2);
    const int M = static_cast<int>(times.size());
    Mat G(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) G(i, j) = k(times[i], times[j]);
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * G.trace() / M);
    GramSystem gs(G);
    Vec rhs = Vec::Ones(M);
    Vec x = gs.solve(rhs);
    CHECK((G * x - rhs).norm() <= 1e-8 * rhs.norm());
}

TEST_CASE("windowed kernel vanishes with derivatives on the spatial boundary") {
    SpaceTimeDomain dom{1.0, 3.0, 1};
    WindowedSpaceTimeKernel kd(dom, MaternKernel(3.5), 1.0);
    STPoint center{0.5, vec1(0.7)};
    for (double t : {0.0, 0.4, 1.0}) {
        for (double s : {-3.0, 3.0}) {
            auto jet = kd.jet2({t, vec1(s)}, center);
            CHECK(std::abs(jet.value) <= 1e-10);
            CHECK(jet.grad_y.cwiseAbs().maxCoeff() <= 1e-10);
            CHECK(jet.hess_y.cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
}

TEST_CASE("windowed kernel is symmetric and matches finite differences") {
    SpaceTimeDomain dom{1.0, 2.5, 1};
    WindowedSpaceTimeKernel kd(dom, MaternKernel(3.5), 1.0);
    STPoint c{0.3, vec1(0.4)};
    CHECK(kd.value({0.8, vec1(1.9)}, c) == doctest::Approx(kd.value(c, {0.8, vec1(1.9)})));
    const double h = 1e-5;
    for (double y : {-2.2, -0.9, 0.1, 1.7, 2.3}) {
        auto jet = kd.jet2({0.8, vec1(y)}, c);
        double vp = kd.value({0.8, vec1(y + h)}, c);
        double vm = kd.value({0.8, vec1(y - h)}, c);
        double v0 = kd.value({0.8, vec1(y)}, c);
        CHECK(jet.value == doctest::Approx(v0).epsilon(1e-12));
        CHECK(jet.grad_y(0) ==
              doctest::Approx((vp - vm) / (2 * h)).epsilon(1e-5).scale(std::abs(jet.grad_y(0)) + 1e-4));
        CHECK(jet.hess_y(0, 0) ==
              doctest::Approx((vp - 2 * v0 + vm) / (h * h)).epsilon(1e-3).scale(std::abs(jet.hess_y(0,0)) + 1e-2));
    }
}

TEST_CASE("fill distance on simple point sets") {
    SpaceTimeDomain interval{1.0, 0.5, 0};
    auto mk = [](double t) {
        STPoint p;
        p.t = t;
        p.x = Vec(0);
        return p;
    };
    CHECK(fill_distance({mk(0.0), mk(0.5), mk(1.0)}, interval) == doctest::Approx(0.25).epsilon(0.02));
    CHECK(fill_distance({mk(0.0), mk(1.0)}, interval) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("fill distance of 5x5 grid on the unit square") {
    SpaceTimeDomain dom{1.0, 0.5, 1};
    std::vector<STPoint> pts;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            STPoint p;
            p.t = i / 4.0;
            p.x = vec1(-0.5 + j / 4.0);
            pts.push_back(p);
        }
    // half the cell diagonal, sqrt(2)/8, by brute-force probing
    CHECK(fill_distance(pts, dom) == doctest::Approx(M_SQRT2 / 8.0).epsilon(0.02));
}

TEST_CASE("make_centers meets the fill target") {
    SpaceTimeDomain dom{1.0, 0.5, 1};
    auto cs = make_centers(dom, 0.5);
    CHECK(cs.fill <= 0.5);
    CHECK(cs.centers.size() >= 1);

    // coarse target allows a single center
    auto single = make_centers(dom, dom.diameter() / 2.0 + 1e-9);
    CHECK(single.centers.size() == 1);

    // halving the target grows Q monotonically and at most geometrically
    auto a = make_centers(dom, 0.4);
    auto b = make_centers(dom, 0.2);
    CHECK(b.centers.size() >= a.centers.size());
    CHECK(b.centers.size() <= a.centers.size() * 16);
}

TEST_CASE("make_centers respects the budget cap") {
    SpaceTimeDomain dom{1.0, 3.0, 1};
    CHECK_THROWS_AS(make_centers(dom, 0.01, 50), BudgetError);
}

TEST_CASE("space-time kernel gram is PSD at scattered centers") {
    SpaceTimeDomain dom{1.0, 2.0, 1};
    auto cs = make_centers(dom, 0.8);
    WindowedSpaceTimeKernel kd(dom, MaternKernel(3.5), 1.0);
    const int Q = static_cast<int>(cs.centers.size());
    Mat G(Q, Q);
    for (int i = 0; i < Q; ++i)
        for (int j = 0; j < Q; ++j) G(i, j) = kd.value(cs.centers[i], cs.centers[j]);
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, G.trace() / Q));
}
