#ifndef FOKKERFIT_SDE_SIM_HPP
#define FOKKERFIT_SDE_SIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fokkerfit/coefficients.hpp"
#include "fokkerfit/common.hpp"

namespace fokkerfit {

/// Initial distribution of the state.
struct InitialLaw {
    enum class Kind { Gaussian, UniformBall, Point };
    Kind kind = Kind::Point;
    Vec mean;       // gaussian / point
    Mat cov;        // gaussian (SPD)
    double radius = 1.0;  // uniform-ball

    static InitialLaw gaussian(Vec mean, Mat cov);
    static InitialLaw uniform_ball(int n, double radius);
    static InitialLaw point(Vec x0);

    int dim() const { return static_cast<int>(mean.size()); }
    Vec draw(Rng& rng) const;
    /// Density value (for FP initial conditions); Point has none.
    double density(const Vec& y) const;
    nlohmann::json to_json() const;
};

/// M x N grid of state samples X_{l,j} at the equally spaced times t_l.
struct ObservationSet {
    int n = 0;
    int M = 0;
    int N = 0;
    double T = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> times;   // M entries, t_1 = 0, t_M = T
    std::vector<Mat> samples;    // M entries, each n x N
    nlohmann::json manifest;

    const Mat& at_time(int l) const { return samples.at(l); }
};

/// Euler-Maruyama simulation of N independent paths recorded at all M times
/// (the same path serves every sample time). Deterministic given the seed;
/// paths are independent streams, so the parallel schedule cannot change the
/// result.
ObservationSet simulate(const CoefficientField& field, double alpha, const InitialLaw& law, int M,
                        int N, double T, double dt, std::uint64_t seed);

/// Dataset persistence: <dir>/samples.csv (header t_index,sample_index,x1..xn)
/// plus <dir>/manifest.json. The round trip is bit-exact on samples.
void save(const ObservationSet& set, const std::string& dir);
ObservationSet load(const std::string& dir);

}  // namespace fokkerfit

#endif
