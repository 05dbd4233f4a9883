#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "tbd/rfs_core.hpp"

namespace tbd {

struct DynamicsConfig {
    double p_s = 0.999;
    double q_pos = 1e-3;  // per-component variance of the kinematic driving noise
    double q_int = 1e-4;  // variance of the intensity random walk
    double dt = 1.0;
};

/// Axis-aligned rectangle [x_min, x_max) x [y_min, y_max).
struct Region {
    double x_min = 0.0;
    double x_max = 64.0;
    double y_min = 0.0;
    double y_max = 64.0;

    [[nodiscard]] bool contains(double x, double y) const {
        return x >= x_min && x < x_max && y >= y_min && y < y_max;
    }
    [[nodiscard]] double area() const { return (x_max - x_min) * (y_max - y_min); }
};

/// Poisson birth process: mean count mu_b per step, uniform position over the
/// ROI, zero-mean Gaussian velocity, uniform intensity on [0, eta_i].
struct BirthModel {
    double mu_b = 4.0 / (64.0 * 64.0);
    Region roi{};
    double sigma_v2 = 1e-2;
    double eta_i = 30.0;
    std::size_t n_birth_particles = 50'000;
};

/// Nearly-constant-velocity step plus additive Gaussian noise; intensity random walk.
inline ObjectState propagate_state(const ObjectState& x, const DynamicsConfig& cfg, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const double sp = std::sqrt(cfg.q_pos);
    const double si = std::sqrt(cfg.q_int);
    ObjectState y = x;
    y.p1 += cfg.dt * x.v1;
    y.p2 += cfg.dt * x.v2;
    if (sp > 0.0) {
        y.p1 += sp * n01(rng);
        y.p2 += sp * n01(rng);
        y.v1 += sp * n01(rng);
        y.v2 += sp * n01(rng);
    }
    if (si > 0.0) y.gamma += si * n01(rng);
    return y;
}

/// Draws velocity and intensity from the birth model; the caller sets position.
inline ObjectState sample_birth_kinematics(const BirthModel& birth, Rng& rng) {
    std::normal_distribution<double> vel(0.0, std::sqrt(birth.sigma_v2));
    std::uniform_real_distribution<double> inten(0.0, birth.eta_i);
    ObjectState x;
    x.v1 = vel(rng);
    x.v2 = vel(rng);
    x.gamma = inten(rng);
    return x;
}

/// Draws a full state from f_B.
inline ObjectState sample_birth_state(const BirthModel& birth, Rng& rng) {
    std::uniform_real_distribution<double> ux(birth.roi.x_min, birth.roi.x_max);
    std::uniform_real_distribution<double> uy(birth.roi.y_min, birth.roi.y_max);
    const double p1 = ux(rng);
    const double p2 = uy(rng);
    ObjectState x = sample_birth_kinematics(birth, rng);
    x.p1 = p1;
    x.p2 = p2;
    return x;
}

/// Survival thinning of the existence probability plus per-particle propagation.
inline BernoulliComponent predict_bernoulli(const BernoulliComponent& b, const DynamicsConfig& cfg, Rng& rng) {
    std::vector<Particle> out;
    out.reserve(b.spatial.size());
    for (const auto& p : b.spatial.particles()) {
        out.push_back(Particle{propagate_state(p.state, cfg, rng), p.weight});
    }
    return BernoulliComponent{cfg.p_s * b.r, ParticleSet(std::move(out)), b.track_id};
}

/// Predicted PHD: surviving particles (weights times p_s) followed by a
/// fresh batch of birth particles carrying mu_b in total.
inline PoissonIntensity predict_phd(const PoissonIntensity& phd, const DynamicsConfig& cfg, const BirthModel& birth,
                                    Rng& rng) {
    std::vector<Particle> out;
    out.reserve(phd.particles.size() + birth.n_birth_particles);
    for (const auto& p : phd.particles.particles()) {
        out.push_back(Particle{propagate_state(p.state, cfg, rng), cfg.p_s * p.weight});
    }
    if (birth.mu_b > 0.0 && birth.n_birth_particles > 0) {
        const double w = birth.mu_b / static_cast<double>(birth.n_birth_particles);
        for (std::size_t i = 0; i < birth.n_birth_particles; ++i) {
            out.push_back(Particle{sample_birth_state(birth, rng), w});
        }
    }
    return PoissonIntensity{ParticleSet(std::move(out))};
}

}  // namespace tbd
