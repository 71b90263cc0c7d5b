#pragma once

#include <cstdint>
#include <random>

namespace tetris {

// Thin wrapper over mt19937_64 whose derived distributions are computed
// in-house, so a given seed yields the same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    // Independent stream for (seed, index): one per grid point, per run, ...
    static Rng stream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller (no cached second value).
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace tetris
