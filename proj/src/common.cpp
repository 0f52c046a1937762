#include "fokkerfit/common.hpp"

#include <algorithm>
#include <atomic>

namespace fokkerfit {

namespace {
std::atomic<int> g_max_threads{1};
}

int max_threads() { return g_max_threads.load(); }

void set_max_threads(int n) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    g_max_threads.store(std::clamp(n, 1, hw));
}

void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (count <= 0) return;
    int workers = std::min<std::int64_t>(max_threads(), count);
    if (workers <= 1) {
        body(0, count);
        return;
    }
    std::int64_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        std::int64_t lo = w * chunk;
        std::int64_t hi = std::min<std::int64_t>(lo + chunk, count);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace fokkerfit
