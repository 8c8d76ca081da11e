#pragma once

#include <cmath>
#include <cstdint>

namespace photonpano {

// Counter-based deterministic random numbers. Every draw is a pure function
// of (seed, stream, counter), so simulation output is independent of thread
// count and evaluation order.
namespace rng {

inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

// Keyed hash of two counters (e.g. frame index and pixel index).
inline uint64_t hash(uint64_t seed, uint64_t a, uint64_t b) {
    uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ull);
    h = mix64(h + a + 0x9e3779b97f4a7c15ull);
    h = mix64(h + b + 0x9e3779b97f4a7c15ull);
    return h;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform(uint64_t seed, uint64_t a, uint64_t b) {
    return static_cast<double>(hash(seed, a, b) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two decorrelated uniforms.
inline double normal(uint64_t seed, uint64_t a, uint64_t b) {
    double u1 = static_cast<double>(hash(seed, a, b) >> 11) * 0x1.0p-53;
    double u2 = static_cast<double>(hash(seed ^ 0x5851f42d4c957f2dull, a, b) >> 11) * 0x1.0p-53;
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace rng
}  // namespace photonpano
