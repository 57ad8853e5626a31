#include "qbirkhoff/rng.hpp"
#include "qbirkhoff/error.hpp"

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace qb {

cplx ProbeSampler::annulusPointAvoiding(const QContext& ctx, const SpiralSet& avoid,
                                        double guard, double rmin, double rmax,
                                        int maxTries) {
    for (int k = 0; k < maxTries; ++k) {
        const cplx z = annulusPoint(rmin, rmax);
        if (avoid.empty() || avoid.distance(ctx, z) > guard) return z;
    }
    fail(ErrorCode::NoConvergence,
         "could not sample a probe clear of the pole registry (annulus too "
         "crowded for the requested guard)");
}

int thread_budget() {
    static const int budget = [] {
        const char* env = std::getenv("QBIRKHOFF_THREADS");
        if (!env) return 1;
        const long v = std::strtol(env, nullptr, 10);
        if (v < 1) return 1;
        const long hw = std::max(1u, std::thread::hardware_concurrency());
        return int(std::min(v, hw));
    }();
    return budget;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int threads = thread_budget();
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace qb
