#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace pmsm {

/// Every random draw in the project goes through this generator.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard library distributions are not, so uniform and
/// normal variates are derived here: uniform from the top 53 bits of one
/// draw, normal by the Box-Muller transform (cosine branch, one variate per
/// pair of uniforms). Identical seeds give identical streams on every
/// platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);
    int integer(int lo, int hi_inclusive);
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
};

} // namespace pmsm
