#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spatwhite {

// All randomness in the library goes through mt19937_64 with the raw
// 64-bit output mapped to doubles explicitly. The engine's output
// sequence is fixed by the standard, and the mappings below avoid the
// implementation-defined std::*_distribution algorithms, so a given
// seed reproduces the same draws on every platform (up to libm).
using RngEngine = std::mt19937_64;

// Derives independent sub-stream seeds from a master seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t x = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(RngEngine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(RngEngine& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Standard normal via Box-Muller; consumes exactly two engine outputs.
inline double standard_normal(RngEngine& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps the log finite
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace spatwhite
