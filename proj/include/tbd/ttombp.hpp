#pragma once

#include <cstddef>
#include <vector>

#include "tbd/association.hpp"
#include "tbd/dynamics.hpp"
#include "tbd/measurement.hpp"
#include "tbd/rfs_core.hpp"
#include "tbd/update.hpp"

namespace tbd {

/// Everything the Poisson/multi-Bernoulli TBD recursion needs besides its state.
struct TtombpConfig {
    DynamicsConfig dynamics{};
    BirthModel birth{};
    NoiseModel noise{};
    UpdateConfig update{};
    BuildOptions build{};
    SpaOptions spa{};
};

/// Per-step bookkeeping, useful for tests and logging.
struct StepDiagnostics {
    std::size_t legacy_count = 0;      // J_{k-1}
    std::size_t cell_records = 0;      // measurement nodes in the association problem
    std::size_t spawned = 0;           // new potential objects considered
    bool spa_converged = true;
    int spa_iterations = 0;
    double predicted_phd_mass = 0.0;
    double marginal_existence = 0.0;   // sum_j sum_{m>=1} p(a_j = m) + sum_m p1_m r_new_m
    double posterior_existence = 0.0;  // sum of kept r plus recycled mass
};

/// One filter recursion: predict, build association weights, sum-product
/// marginals, MB approximation, recycling, PHD particle cap.
inline PmbState ttombp_step(const PmbState& state, const IntensityImage& image, const TtombpConfig& cfg, Rng& rng,
                            StepDiagnostics* diag = nullptr) {
    PmbState predicted;
    predicted.k = image.k;
    predicted.next_track_id = state.next_track_id;
    predicted.bernoullis.reserve(state.bernoullis.size());
    for (const auto& b : state.bernoullis) predicted.bernoullis.push_back(predict_bernoulli(b, cfg.dynamics, rng));
    predicted.phd = predict_phd(state.phd, cfg.dynamics, cfg.birth, rng);

    const AssociationWeights w = build_weights(predicted, image, cfg.noise, cfg.build);
    const MarginalPmfs marg = spa_marginals(w, cfg.spa);

    PmbState next;
    next.k = image.k;
    next.next_track_id = predicted.next_track_id;
    auto components = mb_approximation(w, marg, cfg.update, rng, next.next_track_id,
                                       MbApproximationOptions{.resample_recyclable = false});
    auto recycled = recycle(std::move(components), cfg.update);
    next.bernoullis = std::move(recycled.kept);
    next.phd = cap_phd(recycled.phd_increment, cfg.update, rng);

    if (diag) {
        diag->legacy_count = state.bernoullis.size();
        diag->cell_records = w.cells.size();
        diag->spawned = 0;
        double marginal = 0.0;
        for (const auto& pmf : marg.legacy) marginal += pmf.existence();
        for (std::size_t s = 0; s < w.cells.size(); ++s) {
            if (!w.cells[s].spawn) continue;
            ++diag->spawned;
            marginal += marg.p1[s] * w.cells[s].r_new;
        }
        diag->spa_converged = marg.converged;
        diag->spa_iterations = marg.iterations;
        diag->predicted_phd_mass = predicted.phd.mass();
        diag->marginal_existence = marginal;
        double post = recycled.phd_increment.mass();
        for (const auto& b : next.bernoullis) post += b.r;
        diag->posterior_existence = post;
    }
    return next;
}

}  // namespace tbd
