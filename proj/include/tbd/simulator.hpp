#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "tbd/dynamics.hpp"
#include "tbd/measurement.hpp"
#include "tbd/random.hpp"
#include "tbd/rfs_core.hpp"

namespace tbd {

struct ScenarioConfig {
    int n_objects = 10;
    int n_steps = 200;
    int appear_before = 30;
    int disappear_after = 170;
    Region birth_region{17.0, 48.0, 17.0, 48.0};
    double gamma_init = 10.0;
    double sigma_v2 = 1e-2;
    GridGeometry geometry{};
    DynamicsConfig dynamics{};
    NoiseModel noise{};
};

struct TruthTrack {
    int birth = 1;  // first step the object exists
    int death = 1;  // first step it no longer exists
    std::vector<ObjectState> states;  // states[k - birth] for k in [birth, death)

    [[nodiscard]] bool alive_at(int k) const { return k >= birth && k < death; }
    [[nodiscard]] const ObjectState& at(int k) const { return states[static_cast<std::size_t>(k - birth)]; }
};

struct GroundTruth {
    std::vector<TruthTrack> tracks;

    [[nodiscard]] std::vector<ObjectState> alive_states(int k) const {
        std::vector<ObjectState> out;
        for (const auto& t : tracks)
            if (t.alive_at(k)) out.push_back(t.at(k));
        return out;
    }
};

/// Birth steps uniform on [1, appear_before]; death steps uniform on
/// [disappear_after + 1, n_steps + 1], cut short when the object leaves the ROI.
inline GroundTruth generate_truth(const ScenarioConfig& cfg, Rng& rng) {
    std::uniform_int_distribution<int> birth_step(1, cfg.appear_before);
    std::uniform_int_distribution<int> death_step(cfg.disappear_after + 1, cfg.n_steps + 1);
    std::uniform_real_distribution<double> ux(cfg.birth_region.x_min, cfg.birth_region.x_max);
    std::uniform_real_distribution<double> uy(cfg.birth_region.y_min, cfg.birth_region.y_max);
    std::normal_distribution<double> vel(0.0, std::sqrt(cfg.sigma_v2));

    GroundTruth truth;
    truth.tracks.reserve(static_cast<std::size_t>(cfg.n_objects));
    for (int i = 0; i < cfg.n_objects; ++i) {
        TruthTrack t;
        t.birth = birth_step(rng);
        t.death = death_step(rng);
        ObjectState x;
        x.p1 = ux(rng);
        x.p2 = uy(rng);
        x.v1 = vel(rng);
        x.v2 = vel(rng);
        x.gamma = cfg.gamma_init;
        t.states.push_back(x);
        for (int k = t.birth + 1; k < t.death; ++k) {
            x = propagate_state(x, cfg.dynamics, rng);
            if (!cfg.geometry.contains(x.p1, x.p2)) {
                t.death = k;
                break;
            }
            t.states.push_back(x);
        }
        truth.tracks.push_back(std::move(t));
    }
    return truth;
}

/// Random stream dedicated to frame k of a run; images are reproducible from (seed, run, k).
inline Rng image_stream(std::uint64_t seed, std::uint64_t run, int k) {
    return make_stream(seed, run, (static_cast<std::uint64_t>(Substream::images) << 32) + static_cast<std::uint64_t>(k));
}

/// Swerling-1 image: each cell is Rayleigh with scale sqrt(gamma + sigma_n^2)
/// when an object occupies it, sqrt(sigma_n^2) otherwise. Several occupants
/// of one cell are resolved by drawing one of them with probability
/// proportional to its intensity.
inline IntensityImage render_image(const std::vector<ObjectState>& states, const NoiseModel& noise,
                                   const GridGeometry& geom, int k, Rng& rng) {
    const std::size_t M = geom.num_cells();
    std::vector<std::vector<std::size_t>> occupants(M);
    for (std::size_t i = 0; i < states.size(); ++i) {
        const std::size_t m = cell_index(geom, states[i]);
        if (m != kOutsideCell) occupants[m].push_back(i);
    }
    IntensityImage img{geom, std::vector<double>(M), k};
    const double s2 = noise.sigma_n * noise.sigma_n;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t m = 0; m < M; ++m) {
        double d = 0.0;
        const auto& occ = occupants[m];
        if (occ.size() == 1) {
            d = states[occ[0]].clamped_gamma();
        } else if (occ.size() > 1) {
            double total = 0.0;
            for (auto i : occ) total += states[i].clamped_gamma();
            std::size_t pick = occ.back();
            if (total > 0.0) {
                double u = u01(rng) * total;
                for (auto i : occ) {
                    u -= states[i].clamped_gamma();
                    if (u < 0.0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = occ[static_cast<std::size_t>(u01(rng) * static_cast<double>(occ.size())) % occ.size()];
            }
            d = states[pick].clamped_gamma();
        }
        img.cells[m] = sample_rayleigh(std::sqrt(d + s2), rng);
    }
    return img;
}

}  // namespace tbd
