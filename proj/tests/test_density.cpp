#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fokkerfit/density.hpp"

using namespace fokkerfit;

namespace {

Vec vec1(double x) {
    Vec v(1);
    v(0) = x;
    return v;
}

std::shared_ptr<ObservationSet> manual_set(int n, std::vector<double> times,
                                           std::vector<Mat> samples) {
    auto set = std::make_shared<ObservationSet>();
    set->n = n;
    set->M = static_cast<int>(times.size());
    set->N = static_cast<int>(samples.front().cols());
    set->T = times.back();
    set->times = std::move(times);
    set->samples = std::move(samples);
    return set;
}

std::shared_ptr<ObservationSet> ou_observations(int M, int N, double R_unused, std::uint64_t seed) {
    (void)R_unused;
    auto field = ou_field(1.0, 0.5, 1, 10.0);
    InitialLaw law = InitialLaw::gaussian(vec1(1.0), 0.0625 * Mat::Identity(1, 1));
    return std::make_shared<ObservationSet>(simulate(*field, 0.5, law, M, N, 1.0, 1e-3, seed));
}

Lattice line_lattice(double hw, int nx, int nt, double T = 1.0) {
    Lattice lat;
    lat.t0 = 0.0;
    lat.t1 = T;
    lat.nt = nt;
    lat.xlo = vec1(-hw);
    lat.xhi = vec1(hw);
    lat.nx = {nx};
    return lat;
}

}  // namespace

TEST_CASE("single-sample single-time model reduces to rho") {
    Mat s(1, 1);
    s(0, 0) = 0.0;
    auto obs = manual_set(1, {0.0}, {s});
    DensityModel model(obs, 1.5, 1);
    BandlimitedKernel rho(1.5, 1);
    for (double x : {0.0, 0.2, 0.9, 2.7}) {
        CHECK(model.value(0.0, vec1(x)) == doctest::Approx(rho.value(vec1(x))).epsilon(1e-12));
    }
}

TEST_CASE("time derivative of the model matches finite differences") {
    auto obs = ou_observations(4, 30, 0, 5);
    DensityModel model(obs, 2.0, 1);
    const double h = 1e-6;
    Rng rng(9);
    for (int probe = 0; probe < 20; ++probe) {
        double t = 0.05 + 0.9 * rng.uniform();
        Vec x = vec1((2 * rng.uniform() - 1) * 2.0);
        double fd = (model.value(t + h, x) - model.value(t - h, x)) / (2 * h);
        CHECK(model.dt(t, x) == doctest::Approx(fd).epsilon(1e-5).scale(std::abs(fd) + 1e-4));
    }
}

TEST_CASE("laplacian matches the trace of a finite-difference hessian") {
    auto obs = ou_observations(3, 25, 0, 11);
    DensityModel model(obs, 1.8, 1);
    const double h = 1e-4;
    Rng rng(13);
    for (int probe = 0; probe < 20; ++probe) {
        double t = rng.uniform();
        double x = (2 * rng.uniform() - 1) * 2.0;
        double fd = (model.value(t, vec1(x + h)) - 2 * model.value(t, vec1(x)) +
                     model.value(t, vec1(x - h))) /
                    (h * h);
        CHECK(model.laplacian(t, vec1(x)) ==
              doctest::Approx(fd).epsilon(1e-4).scale(std::abs(fd) + 1e-2));
    }
}

TEST_CASE("gradient and hessian match finite differences in 2-D") {
    auto field = ou_field(0.8, 0.4, 2, 8.0);
    auto obs = std::make_shared<ObservationSet>(simulate(
        *field, 0.4, InitialLaw::gaussian(Vec::Zero(2), 0.09 * Mat::Identity(2, 2)), 3, 20, 1.0,
        1e-2, 17));
    DensityModel model(obs, 1.2, 1);
    const double h = 1e-4;
    Rng rng(21);
    for (int probe = 0; probe < 10; ++probe) {
        double t = rng.uniform();
        Vec x(2);
        x << (2 * rng.uniform() - 1) * 1.5, (2 * rng.uniform() - 1) * 1.5;
        auto jet = model.jet(t, x);
        for (int i = 0; i < 2; ++i) {
            Vec e = Vec::Zero(2);
            e(i) = h;
            double fd = (model.value(t, x + e) - model.value(t, x - e)) / (2 * h);
            CHECK(jet.grad(i) == doctest::Approx(fd).epsilon(1e-4).scale(std::abs(fd) + 1e-3));
        }
        CHECK((jet.hess - jet.hess.transpose()).norm() <= 1e-12);
    }
}

TEST_CASE("model interpolates its own slices at grid times") {
    auto obs = ou_observations(5, 15, 0, 23);
    DensityModel model(obs, 2.2, 1);
    Rng rng(29);
    for (int l = 0; l < obs->M; ++l) {
        for (int probe = 0; probe < 10; ++probe) {
            Vec x = vec1((2 * rng.uniform() - 1) * 2.5);
            CHECK(model.value(obs->times[l], x) ==
                  doctest::Approx(model.g_value(l, x)).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("slices are sign-indefinite for small N") {
    auto obs = ou_observations(2, 4, 0, 31);
    DensityModel model(obs, 3.0, 1);
    bool negative_found = false;
    for (int k = 0; k < 400 && !negative_found; ++k) {
        double x = -6.0 + 12.0 * k / 399.0;
        if (model.g_value(0, vec1(x)) < -1e-6) negative_found = true;
    }
    CHECK(negative_found);
}

TEST_CASE("slices integrate to one within truncation tolerance") {
    auto obs = ou_observations(3, 12, 0, 37);
    DensityModel model(obs, 2.0, 1);
    double hw = model.suggested_halfwidth();
    const int K = 20001;
    for (int l = 0; l < obs->M; ++l) {
        double acc = 0.0;
        double dx = 2.0 * hw / (K - 1);
        for (int k = 0; k < K; ++k) {
            double w = (k == 0 || k == K - 1) ? 0.5 : 1.0;
            acc += w * model.g_value(l, vec1(-hw + k * dx));
        }
        acc *= dx;
        CHECK(acc == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("union of equal sample sets averages the slices") {
    auto a = ou_observations(3, 10, 0, 41);
    auto b = ou_observations(3, 10, 0, 43);
    std::vector<Mat> merged;
    for (int l = 0; l < 3; ++l) {
        Mat m(1, 20);
        m << a->samples[l], b->samples[l];
        merged.push_back(m);
    }
    auto u = manual_set(1, a->times, merged);
    DensityModel ma(a, 2.0, 1), mb(b, 2.0, 1), mu(u, 2.0, 1);
    Rng rng(47);
    for (int probe = 0; probe < 30; ++probe) {
        int l = static_cast<int>(rng.uniform() * 3);
        Vec x = vec1((2 * rng.uniform() - 1) * 3.0);
        double avg = 0.5 * (ma.g_value(l, x) + mb.g_value(l, x));
        CHECK(mu.g_value(l, x) == doctest::Approx(avg).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("lattice evaluation agrees with pointwise evaluation") {
    auto obs = ou_observations(3, 8, 0, 53);
    DensityModel model(obs, 1.7, 1);
    Lattice lat = line_lattice(2.5, 21, 7);
    GridDensity g = model.evaluate_on(lat);
    for (int k = 0; k < lat.nt; ++k)
        for (int p = 0; p < lat.space_points(); ++p)
            CHECK(g.values(k, p) ==
                  doctest::Approx(model.value(lat.time_at(k), lat.point_at(p))).epsilon(1e-12));
}

TEST_CASE("loss of a density against itself is zero") {
    auto obs = ou_observations(3, 10, 0, 59);
    DensityModel model(obs, 1.5, 1);
    Lattice lat = line_lattice(3.0, 41, 9);
    GridDensity g = model.evaluate_on(lat);
    CHECK(loss_L(g, g) == 0.0);
}

TEST_CASE("constant offset contributes only through the order-zero term") {
    Lattice lat = line_lattice(2.0, 81, 17);
    GridDensity ref = analytic_ou_density(1.0, 1.0, InitialLaw::gaussian(vec1(0.0), 0.25 * Mat::Identity(1, 1)), lat);
    GridDensity shifted = ref;
    const double eps = 0.01;
    shifted.values.array() += eps;
    double expect = eps * eps * 4.0 * 1.0;  // eps^2 |box| T
    CHECK(loss_L(shifted, ref) == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("loss is stable under lattice refinement") {
    auto obs = ou_observations(3, 20, 0, 61);
    DensityModel model(obs, 1.5, 1);
    InitialLaw law = InitialLaw::gaussian(vec1(1.0), 0.0625 * Mat::Identity(1, 1));
    Lattice coarse = line_lattice(3.2, 161, 17);
    Lattice fine = line_lattice(3.2, 321, 33);
    double lc = loss_L(model.evaluate_on(coarse), analytic_ou_density(1.0, 1.0, law, coarse));
    double lf = loss_L(model.evaluate_on(fine), analytic_ou_density(1.0, 1.0, law, fine));
    CHECK(std::abs(lc - lf) <= 0.05 * std::max(lc, lf));
}

TEST_CASE("degenerate rate schedule yields a single row and no verdict") {
    Lattice lat = line_lattice(3.0, 81, 9);
    RateReport rep = empirical_rate_report(1.0, 0.5, 0.5, 10.0,
                                           InitialLaw::gaussian(vec1(1.0), 0.0625 * Mat::Identity(1, 1)),
                                           1.0, 1e-2, {{3, 40, 2.0}}, 1, lat, 67);
    CHECK(rep.rows.size() == 1);
    CHECK(rep.verdict == "single-row");
    CHECK(!rep.slope_valid);
    CHECK(rep.rows[0].loss > 0.0);
}

TEST_CASE("loss decreases when N grows (trend)") {
    Lattice lat = line_lattice(3.0, 161, 9);
    RateReport rep = empirical_rate_report(1.0, 0.5, 0.5, 10.0,
                                           InitialLaw::gaussian(vec1(1.0), 0.0625 * Mat::Identity(1, 1)),
                                           1.0, 1e-2, {{4, 50, 3.0}, {4, 200, 3.0}, {4, 800, 3.0}}, 1,
                                           lat, 71);
    CHECK(rep.verdict == "non-increasing(2x)");
    CHECK(rep.slope_valid);
    CHECK(rep.slope < 0.0);
}
