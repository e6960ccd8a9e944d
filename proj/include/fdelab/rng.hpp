#pragma once

#include <cstdint>
#include <random>

namespace fdelab {

/// Deterministic random source. Draws are reproducible across platforms for a
/// fixed seed (the uniform mapping avoids std::uniform_real_distribution,
/// whose output is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        return gen_() % n;
    }

    /// Derive an independent stream (for per-sample reproducibility).
    Rng fork() {
        return Rng(gen_());
    }

private:
    std::mt19937_64 gen_;
};

} // namespace fdelab
