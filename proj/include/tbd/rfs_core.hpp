#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "tbd/errors.hpp"
#include "tbd/random.hpp"

namespace tbd {

/// Single-object state: position, velocity (per step) and intensity.
/// The intensity may drift negative under the random walk; every likelihood
/// evaluation uses max(gamma, 0).
struct ObjectState {
    double p1 = 0.0;
    double p2 = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;
    double gamma = 0.0;

    [[nodiscard]] double clamped_gamma() const { return gamma > 0.0 ? gamma : 0.0; }

    [[nodiscard]] bool is_finite() const {
        return std::isfinite(p1) && std::isfinite(p2) && std::isfinite(v1) && std::isfinite(v2) &&
               std::isfinite(gamma);
    }

    friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct Particle {
    ObjectState state;
    double weight = 0.0;

    friend bool operator==(const Particle&, const Particle&) = default;
};

/// Weighted particle set with a cached total weight.
class ParticleSet {
public:
    ParticleSet() = default;

    explicit ParticleSet(std::vector<Particle> particles) : particles_(std::move(particles)) {
        total_ = 0.0;
        for (const auto& p : particles_) total_ += p.weight;
    }

    [[nodiscard]] std::span<const Particle> particles() const { return particles_; }
    [[nodiscard]] std::size_t size() const { return particles_.size(); }
    [[nodiscard]] bool empty() const { return particles_.empty(); }
    [[nodiscard]] double total_weight() const { return total_; }
    [[nodiscard]] const Particle& operator[](std::size_t i) const { return particles_[i]; }

    /// Copy with every weight multiplied by `factor`.
    [[nodiscard]] ParticleSet scaled(double factor) const {
        std::vector<Particle> out(particles_);
        for (auto& p : out) p.weight *= factor;
        return ParticleSet(std::move(out));
    }

    /// Moves the particles out, leaving this set empty.
    [[nodiscard]] std::vector<Particle> release() && {
        total_ = 0.0;
        return std::move(particles_);
    }

    friend bool operator==(const ParticleSet& a, const ParticleSet& b) {
        return a.particles_ == b.particles_;
    }

private:
    std::vector<Particle> particles_;
    double total_ = 0.0;
};

struct BernoulliComponent {
    double r = 0.0;
    ParticleSet spatial;  // normalized
    std::uint64_t track_id = 0;

    friend bool operator==(const BernoulliComponent&, const BernoulliComponent&) = default;
};

/// Particle PHD; the total weight is the expected number of objects.
struct PoissonIntensity {
    ParticleSet particles;

    [[nodiscard]] double mass() const { return particles.total_weight(); }

    friend bool operator==(const PoissonIntensity&, const PoissonIntensity&) = default;
};

/// Poisson/multi-Bernoulli filter state at time k.
struct PmbState {
    int k = 0;
    std::vector<BernoulliComponent> bernoullis;
    PoissonIntensity phd;
    std::uint64_t next_track_id = 1;

    friend bool operator==(const PmbState&, const PmbState&) = default;
};

namespace detail {

inline void require_positive_total(double total) {
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw DegenerateSetError("particle set has zero or non-finite total weight");
    }
}

}  // namespace detail

/// Rescales weights to sum to one.
inline ParticleSet normalize(const ParticleSet& ps) {
    detail::require_positive_total(ps.total_weight());
    return ps.scaled(1.0 / ps.total_weight());
}

/// Systematic (low-variance) resampling to `n` equally weighted particles.
/// The output keeps the input's total weight.
inline ParticleSet resample(const ParticleSet& ps, std::size_t n, Rng& rng) {
    detail::require_positive_total(ps.total_weight());
    if (n == 0) throw DomainError("resample: n must be at least 1");

    const auto src = ps.particles();
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i].weight > 0.0) last_positive = i;
    }

    const double total = ps.total_weight();
    const double step = total / static_cast<double>(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u0 = unif(rng);

    std::vector<Particle> out;
    out.reserve(n);
    std::size_t j = 0;
    double cdf = src[0].weight;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (u0 + static_cast<double>(i)) * step;
        while (cdf <= u && j < last_positive) {
            ++j;
            cdf += src[j].weight;
        }
        out.push_back(Particle{src[j].state, step});
    }
    return ParticleSet(std::move(out));
}

/// Component-wise weighted average of the particle states.
inline ObjectState weighted_mean(const ParticleSet& ps) {
    detail::require_positive_total(ps.total_weight());
    ObjectState m;
    for (const auto& p : ps.particles()) {
        m.p1 += p.weight * p.state.p1;
        m.p2 += p.weight * p.state.p2;
        m.v1 += p.weight * p.state.v1;
        m.v2 += p.weight * p.state.v2;
        m.gamma += p.weight * p.state.gamma;
    }
    const double inv = 1.0 / ps.total_weight();
    m.p1 *= inv;
    m.p2 *= inv;
    m.v1 *= inv;
    m.v2 *= inv;
    m.gamma *= inv;
    return m;
}

}  // namespace tbd
