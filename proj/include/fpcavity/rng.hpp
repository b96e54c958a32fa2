#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace fpcavity {

/// splitmix64 step; used to derive well-separated substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic substream seed from a master seed and a stream key.
/// Key a stream by a double-valued label (e.g. an attenuation setting)
/// with std::bit_cast<std::uint64_t>.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t key) {
    std::uint64_t s = master ^ 0xd1b54a32d192ed03ULL;
    std::uint64_t a = splitmix64(s);
    s ^= key;
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9e3779b97f4a7c15ULL);
}

/// Uniform double in [0,1) with 53 random bits. The mt19937_64 output
/// sequence is pinned by the standard, so draws are reproducible across
/// platforms (std::uniform_real_distribution is not).
inline double canonical_double(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Binomial draw by explicit Bernoulli summation; O(n) but exactly
/// reproducible for a given engine state.
inline int binomial_draw(std::mt19937_64& gen, int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i) {
        if (canonical_double(gen) < p) ++k;
    }
    return k;
}

/// Standard normal via Box-Muller (basic form, one value per call).
inline double normal_draw(std::mt19937_64& gen) {
    double u1 = canonical_double(gen);
    while (u1 <= 0.0) u1 = canonical_double(gen);
    const double u2 = canonical_double(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace fpcavity
