#pragma once

// Reproducible randomness for sweeps and searches.
//
// The generator is SplitMix64 (Steele, Lea, Flood 2014): 64 bits of state,
// identical output stream for a given seed on every platform. Substreams are
// counter-based: trial i runs on a fresh generator whose initial state is
//
//     seed XOR ((i + 1) * 0x9E3779B97F4A7C15)
//
// so trials can execute in any order (or in parallel) without changing the
// values any one of them draws.

#include <cmath>
#include <cstdint>

#include "toddlab/scalar.hpp"

namespace toddlab {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] (inclusive); hi > lo required.
    std::uint64_t next_in(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        return lo + next() % span;
    }

private:
    std::uint64_t state_;
};

inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(seed ^ ((index + 1) * 0x9E3779B97F4A7C15ULL));
}

inline double sample_log_uniform(SplitMix64& rng, double lo, double hi) {
    const double u = rng.next_unit();
    return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

inline constexpr std::uint64_t kRationalSampleDenominatorBound = 1000;

// Exact-mode coordinates are ratios of bounded integers: a log-uniform draw
// snapped to n/d with d uniform in [1, 1000], clamped into [lo, hi].
inline Scalar sample_coordinate(SplitMix64& rng, Mode mode, double lo, double hi) {
    const double x = sample_log_uniform(rng, lo, hi);
    if (mode == Mode::Float64) return Scalar::f64(x);
    std::uint64_t d = rng.next_in(1, kRationalSampleDenominatorBound);
    // A box narrower than 1/d holds no multiple of 1/d; widen the denominator.
    if (std::floor(hi * static_cast<double>(d)) < std::ceil(lo * static_cast<double>(d)))
        d = static_cast<std::uint64_t>(std::ceil(2.0 / (hi - lo)));
    const double dd = static_cast<double>(d);
    if (hi * dd >= 9.0e18) raise(Errc::InvalidArgument, "sample box too large for exact mode");
    BigInt num = BigInt(static_cast<long long>(std::llround(x * dd)));
    const BigInt lo_num = BigInt(static_cast<long long>(std::ceil(lo * dd)));
    const BigInt hi_num = BigInt(static_cast<long long>(std::floor(hi * dd)));
    if (num < lo_num) num = lo_num;
    if (num > hi_num) num = hi_num;
    if (num < 1) num = 1;
    return Scalar::exact(BigRational(num, BigInt(d)));
}

}  // namespace toddlab
