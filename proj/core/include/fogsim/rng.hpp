#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fogsim {

/// The single pseudo-random stream of a simulation.
///
/// std::mt19937_64 has a fully specified output sequence; the conversions to
/// doubles are done here rather than through <random> distributions, whose
/// algorithms differ between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exponential with the given mean, by inversion.
    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    bool bernoulli(double p) {
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return uniform() < p;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fogsim
