#pragma once

#include "qbirkhoff/qcontext.hpp"
#include "qbirkhoff/theta.hpp"

#include <cstdint>
#include <functional>
#include <random>

namespace qb {

// Deterministic probe generator. mt19937_64 output is fully specified by the
// standard; the uniform transforms below avoid std::uniform_real_distribution
// whose algorithm is implementation-defined.
class ProbeSampler {
public:
    explicit ProbeSampler(std::uint64_t seed) : gen_(seed) {}

    double uniform01() {
        return double(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // log-uniform radius in [rmin, rmax), uniform angle
    cplx annulusPoint(double rmin, double rmax) {
        const double r = rmin * std::exp(uniform01() * std::log(rmax / rmin));
        const double th = uniform(0.0, 6.283185307179586476925286766559);
        return std::polar(r, th);
    }

    // resample until the point clears the avoid set by `guard` in spiral
    // coordinates; throws NoConvergence after maxTries
    cplx annulusPointAvoiding(const QContext& ctx, const SpiralSet& avoid,
                              double guard, double rmin, double rmax,
                              int maxTries = 2000);

private:
    std::mt19937_64 gen_;
};

// Thread budget from QBIRKHOFF_THREADS (>=1, default 1). Work is written to
// preassigned slots and reduced sequentially, so the count never changes
// results.
int thread_budget();

// Apply fn(i) for i in [0, n), split over thread_budget() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace qb
