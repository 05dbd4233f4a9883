#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "tbd/association.hpp"
#include "tbd/rfs_core.hpp"

namespace tbd {

struct UpdateConfig {
    double eta_r = 0.1;
    std::size_t n_bernoulli_particles = 3'000;
    std::size_t n_phd_particles_cap = 50'000;
    double estimate_threshold = 0.5;
};

struct MbApproximationOptions {
    /// When false, components that the recycling step will absorb keep their
    /// weighted particles instead of being resampled first.
    bool resample_recyclable = true;
};

namespace detail {

inline ParticleSet finalize_spatial(ParticleSet mixture, double r, const UpdateConfig& cfg,
                                    const MbApproximationOptions& opts, Rng& rng) {
    if (opts.resample_recyclable || r >= cfg.eta_r) {
        ParticleSet rs = resample(mixture, cfg.n_bernoulli_particles, rng);
        return normalize(rs);
    }
    return normalize(mixture);
}

}  // namespace detail

/// Marginal-product (MB) approximation of the updated mixture posterior.
/// Legacy components with zero posterior existence are dropped; new
/// components get fresh track ids drawn from `next_track_id`.
inline std::vector<BernoulliComponent> mb_approximation(const AssociationWeights& w, const MarginalPmfs& marg,
                                                        const UpdateConfig& cfg, Rng& rng,
                                                        std::uint64_t& next_track_id,
                                                        const MbApproximationOptions& opts = {}) {
    std::vector<BernoulliComponent> out;
    out.reserve(w.legacy.size());
    for (std::size_t j = 0; j < w.legacy.size(); ++j) {
        const auto& lw = w.legacy[j];
        const auto& pmf = marg.legacy[j];
        double r = 0.0;
        std::size_t n = 0;
        for (std::size_t e = 0; e < lw.entries.size(); ++e) {
            r += pmf.p[e];
            if (pmf.p[e] > 0.0) n += lw.entries[e].conditional.size();
        }
        if (!(r > 0.0) || n == 0) continue;
        std::vector<Particle> mix;
        mix.reserve(n);
        for (std::size_t e = 0; e < lw.entries.size(); ++e) {
            if (!(pmf.p[e] > 0.0)) continue;
            for (const auto& p : lw.entries[e].conditional.particles()) {
                mix.push_back(Particle{p.state, pmf.p[e] * p.weight});
            }
        }
        ParticleSet mixture(std::move(mix));
        if (!(mixture.total_weight() > 0.0)) continue;
        r = std::min(r, 1.0);
        out.push_back(BernoulliComponent{r, detail::finalize_spatial(std::move(mixture), r, cfg, opts, rng),
                                         lw.track_id});
    }
    for (std::size_t s = 0; s < w.cells.size(); ++s) {
        const auto& rec = w.cells[s];
        if (!rec.spawn || rec.conditional.empty()) continue;
        const double r = std::min(marg.p1[s] * rec.r_new, 1.0);
        if (!(r > 0.0)) continue;
        out.push_back(BernoulliComponent{r, detail::finalize_spatial(rec.conditional, r, cfg, opts, rng),
                                         next_track_id++});
    }
    return out;
}

struct RecycleResult {
    std::vector<BernoulliComponent> kept;
    PoissonIntensity phd_increment;
};

/// Moves every component with r < eta_r into a PHD increment carrying mass r.
inline RecycleResult recycle(std::vector<BernoulliComponent> components, const UpdateConfig& cfg) {
    RecycleResult res;
    std::vector<Particle> inc;
    for (auto& c : components) {
        if (c.r >= cfg.eta_r) {
            res.kept.push_back(std::move(c));
            continue;
        }
        if (!(c.r > 0.0) || c.spatial.empty()) continue;
        const double scale = c.r / c.spatial.total_weight();
        for (const auto& p : c.spatial.particles()) inc.push_back(Particle{p.state, p.weight * scale});
    }
    res.phd_increment = PoissonIntensity{ParticleSet(std::move(inc))};
    return res;
}

/// Resamples the PHD down to the particle cap, preserving its mass.
inline PoissonIntensity cap_phd(const PoissonIntensity& phd, const UpdateConfig& cfg, Rng& rng) {
    if (phd.particles.size() <= cfg.n_phd_particles_cap || !(phd.mass() > 0.0)) return phd;
    return PoissonIntensity{resample(phd.particles, cfg.n_phd_particles_cap, rng)};
}

struct Estimate {
    std::uint64_t track_id = 0;
    ObjectState state;
    double r = 0.0;
};

/// Weighted-mean estimate of every component with r above the threshold.
inline std::vector<Estimate> extract_estimates(const PmbState& state, const UpdateConfig& cfg) {
    std::vector<Estimate> out;
    for (const auto& b : state.bernoullis) {
        if (b.r > cfg.estimate_threshold && !b.spatial.empty()) {
            out.push_back(Estimate{b.track_id, weighted_mean(b.spatial), b.r});
        }
    }
    return out;
}

}  // namespace tbd
