#ifndef FOKKERFIT_COMMON_HPP
#define FOKKERFIT_COMMON_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fokkerfit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised on malformed configs, schemas, or CLI arguments (exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a numerical routine cannot meet its contract (exit code 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a configured work budget is exhausted (exit code 4).
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Global worker cap for intra-stage parallelism (set once by the CLI).
int max_threads();
void set_max_threads(int n);

/// Static-chunk parallel map over [0, count). Chunk boundaries depend only on
/// `count`, and chunks are joined in index order, so results are independent
/// of the scheduling and of the worker count.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& body);

/// SplitMix64 step; used to derive independent per-path RNG streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x2545f4914f6cdd1dULL * (stream + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

/// Deterministic scalar RNG: xoshiro-style generator with an explicit
/// Box-Muller cache, so the draw sequence is pinned by this file alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed == 0 ? 0x9e3779b97f4a7c15ULL : seed) {
        for (int i = 0; i < 4; ++i) splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in (0, 1): never returns exactly 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = uniform(), u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        cache_ = mag * std::sin(2.0 * M_PI * u2);
        has_cache_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

private:
    std::uint64_t state_;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

}  // namespace fokkerfit

#endif
