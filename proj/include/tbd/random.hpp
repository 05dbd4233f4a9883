#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tbd {

using Rng = std::mt19937_64;

/// Deterministic random stream keyed by (seed, stream, substream).
/// Streams with distinct keys are statistically independent for our purposes;
/// the same key always yields the same sequence.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
        static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
    return Rng(seq);
}

/// Substream identifiers of a Monte Carlo run.
enum class Substream : std::uint64_t { truth = 1, images = 2, filter = 3 };

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, Substream sub) {
    return make_stream(seed, stream, static_cast<std::uint64_t>(sub));
}

/// Rayleigh draw by inversion: s * sqrt(-2 ln U), U in (0,1].
inline double sample_rayleigh(double scale, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = 1.0 - unif(rng);
    return scale * std::sqrt(-2.0 * std::log(u));
}

}  // namespace tbd
