#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "tbd/dynamics.hpp"
#include "tbd/measurement.hpp"
#include "tbd/rfs_core.hpp"
#include "tbd/update.hpp"

namespace tbd {

/// 1.5 * sqrt(gamma_i + sigma_n^2)
inline double tmb_birth_threshold(double gamma_i, const NoiseModel& noise) {
    return 1.5 * std::sqrt(gamma_i + noise.sigma_n * noise.sigma_n);
}

struct TmbConfig {
    double eta_new = tmb_birth_threshold(10.0, NoiseModel{});
    double r_birth = 1e-4;
    double eta_t = 1e-4;
    double p_s = 0.999;
    std::size_t n_particles = 3'000;
    std::size_t max_components = 500;
    /// Skip births in cells where existing components already carry at least
    /// r_birth of existence mass.
    bool birth_gating = true;
};

struct TmbStats {
    std::size_t cap_bound_steps = 0;
};

/// Independent Bernoulli update against the full image (no data association).
/// Returns nullopt when the posterior existence vanishes.
inline std::optional<BernoulliComponent> tmb_update_component(const BernoulliComponent& b, const IntensityImage& image,
                                                              const NoiseModel& noise, const TmbConfig& cfg,
                                                              Rng& rng) {
    const auto& geom = image.geometry;
    std::vector<Particle> post;
    post.reserve(b.spatial.size());
    double like = 0.0;
    for (const auto& p : b.spatial.particles()) {
        const std::size_t m = cell_index(geom, p.state);
        const double g = m == kOutsideCell ? 1.0 : likelihood_ratio(image[m], p.state.clamped_gamma(), noise);
        const double v = p.weight * g;
        like += v;
        post.push_back(Particle{p.state, v});
    }
    like /= b.spatial.total_weight();
    const double den = 1.0 - b.r + b.r * like;
    if (!(den > 0.0) || !(like > 0.0) || !std::isfinite(like)) return std::nullopt;
    const double r = std::clamp(b.r * like / den, 0.0, 1.0);
    ParticleSet weighted(std::move(post));
    ParticleSet spatial = normalize(resample(weighted, cfg.n_particles, rng));
    return BernoulliComponent{r, std::move(spatial), b.track_id};
}

/// Existence mass per cell, sum_j r_j P_j(cell m).
inline std::vector<double> occupancy_mass(const std::vector<BernoulliComponent>& comps, const GridGeometry& geom) {
    std::vector<double> occ(geom.num_cells(), 0.0);
    for (const auto& b : comps) {
        const double scale = b.r / b.spatial.total_weight();
        for (const auto& p : b.spatial.particles()) {
            const std::size_t m = cell_index(geom, p.state);
            if (m != kOutsideCell) occ[m] += scale * p.weight;
        }
    }
    return occ;
}

/// Births from every cell of the previous frame above eta_new: uniform over
/// the cell, birth-model velocity and intensity, then one motion step.
/// `occupied`, when given, holds per-cell existence mass used for gating.
inline std::vector<BernoulliComponent> tmb_birth(const IntensityImage& prev_image, const TmbConfig& cfg,
                                                 const BirthModel& birth, const DynamicsConfig& dyn, Rng& rng,
                                                 std::uint64_t& next_track_id,
                                                 const std::vector<double>* occupied = nullptr) {
    std::vector<BernoulliComponent> out;
    const auto& g = prev_image.geometry;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double w = 1.0 / static_cast<double>(cfg.n_particles);
    for (std::size_t m = 0; m < prev_image.cells.size(); ++m) {
        if (!(prev_image[m] > cfg.eta_new)) continue;
        if (occupied && (*occupied)[m] >= cfg.r_birth) continue;
        const double x0 = g.origin_x + static_cast<double>(m % g.width) * g.cell_size;
        const double y0 = g.origin_y + static_cast<double>(m / g.width) * g.cell_size;
        std::vector<Particle> ps;
        ps.reserve(cfg.n_particles);
        for (std::size_t i = 0; i < cfg.n_particles; ++i) {
            const double px = x0 + u01(rng) * g.cell_size;
            const double py = y0 + u01(rng) * g.cell_size;
            ObjectState x = sample_birth_kinematics(birth, rng);
            x.p1 = px;
            x.p2 = py;
            ps.push_back(Particle{propagate_state(x, dyn, rng), w});
        }
        out.push_back(BernoulliComponent{cfg.r_birth, ParticleSet(std::move(ps)), next_track_id++});
    }
    return out;
}

/// One T-MB recursion: predict, add births from the previous frame, update
/// every component independently, prune below eta_t, cap the component count.
inline PmbState tmb_step(const PmbState& state, const IntensityImage& image, const IntensityImage* prev_image,
                         const TmbConfig& cfg, const DynamicsConfig& dyn, const BirthModel& birth,
                         const NoiseModel& noise, Rng& rng, TmbStats* stats = nullptr) {
    DynamicsConfig motion = dyn;
    motion.p_s = cfg.p_s;

    PmbState next;
    next.k = image.k;
    next.next_track_id = state.next_track_id;

    std::vector<BernoulliComponent> predicted;
    predicted.reserve(state.bernoullis.size());
    for (const auto& b : state.bernoullis) predicted.push_back(predict_bernoulli(b, motion, rng));
    if (prev_image != nullptr) {
        std::vector<double> occ;
        if (cfg.birth_gating) occ = occupancy_mass(state.bernoullis, prev_image->geometry);
        auto born = tmb_birth(*prev_image, cfg, birth, motion, rng, next.next_track_id,
                              cfg.birth_gating ? &occ : nullptr);
        for (auto& b : born) predicted.push_back(std::move(b));
    }

    for (const auto& b : predicted) {
        auto updated = tmb_update_component(b, image, noise, cfg, rng);
        if (updated && !(updated->r < cfg.eta_t)) next.bernoullis.push_back(std::move(*updated));
    }

    if (next.bernoullis.size() > cfg.max_components) {
        std::stable_sort(next.bernoullis.begin(), next.bernoullis.end(),
                         [](const BernoulliComponent& a, const BernoulliComponent& b) { return a.r > b.r; });
        next.bernoullis.resize(cfg.max_components);
        if (stats) ++stats->cap_bound_steps;
    }
    return next;
}

}  // namespace tbd
