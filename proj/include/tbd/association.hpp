#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "tbd/errors.hpp"
#include "tbd/measurement.hpp"
#include "tbd/rfs_core.hpp"

namespace tbd {

/// How a particle's chance of contributing to the cell it occupies enters the
/// association weights.
///
/// `psf` multiplies by the PSF value d^(m)(x) itself. `normalized_psf` uses
/// d^(m)(x) / sum_m' d^(m')(x), which for the single-cell PSF is the
/// occupancy indicator of cell m. Only the latter yields a proper likelihood
/// (it integrates to one over the image), see README.
enum class ContributionWeight { psf, normalized_psf };

struct BuildOptions {
    ContributionWeight contribution = ContributionWeight::normalized_psf;
    /// New-object records with r_new below this are not spawned.
    double min_new_existence = 1e-6;
};

/// Association of legacy component j with one measurement cell.
struct LegacyEntry {
    std::size_t slot = 0;  // index into AssociationWeights::cells
    double beta = 0.0;
    ParticleSet conditional;  // normalized f^(j,m); may be empty for synthetic instances
};

struct LegacyWeights {
    double beta0 = 1.0;
    std::vector<LegacyEntry> entries;  // sorted by slot
    std::uint64_t track_id = 0;
};

/// Measurement node together with the new potential object it may spawn.
struct CellRecord {
    std::size_t cell = 0;
    double f0 = 1.0;
    double beta_new = 1.0;
    double r_new = 0.0;
    bool spawn = false;
    ParticleSet conditional;  // normalized f^(j,1); empty when r_new == 0
};

struct AssociationWeights {
    std::vector<LegacyWeights> legacy;
    std::vector<CellRecord> cells;  // sorted by cell index
};

struct LegacyPmf {
    double p0 = 1.0;
    std::vector<double> p;  // aligned with LegacyWeights::entries

    [[nodiscard]] double existence() const {
        double s = 0.0;
        for (double v : p) s += v;
        return s;
    }
};

struct MarginalPmfs {
    std::vector<LegacyPmf> legacy;
    std::vector<double> p1;  // aligned with AssociationWeights::cells
    bool converged = true;
    int iterations = 0;
};

struct SpaOptions {
    int max_iters = 200;
    double tol = 1e-6;
    double damping = 0.5;
};

namespace detail {

/// Contribution of particle `p` to the cell it occupies, as c/f0 (scale-free).
inline double scaled_contribution(const Particle& p, double z, const NoiseModel& noise, ContributionWeight cw) {
    const double d = p.state.clamped_gamma();
    const double a = cw == ContributionWeight::psf ? d : 1.0;
    if (a == 0.0 || p.weight == 0.0) return 0.0;
    return p.weight * a * likelihood_ratio(z, d, noise);
}

struct CellGroup {
    std::size_t cell;
    double scaled_c;  // c / f0
    std::vector<Particle> particles;  // weights are unnormalized contributions
};

/// Groups in-ROI particles by cell with their contributions; zero-support groups dropped.
inline std::vector<CellGroup> group_by_cell(const ParticleSet& ps, const IntensityImage& image,
                                            const NoiseModel& noise, ContributionWeight cw) {
    const auto& geom = image.geometry;
    std::vector<std::pair<std::size_t, std::size_t>> keyed;  // (cell, particle)
    keyed.reserve(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::size_t m = cell_index(geom, ps[i].state);
        if (m != kOutsideCell) keyed.emplace_back(m, i);
    }
    std::sort(keyed.begin(), keyed.end());

    std::vector<CellGroup> groups;
    for (std::size_t a = 0; a < keyed.size();) {
        std::size_t b = a;
        const std::size_t m = keyed[a].first;
        CellGroup g{m, 0.0, {}};
        while (b < keyed.size() && keyed[b].first == m) {
            const Particle& p = ps[keyed[b].second];
            const double v = scaled_contribution(p, image[m], noise, cw);
            if (v > 0.0) {
                g.scaled_c += v;
                g.particles.push_back(Particle{p.state, v});
            }
            ++b;
        }
        if (g.scaled_c > 0.0 && std::isfinite(g.scaled_c)) groups.push_back(std::move(g));
        a = b;
    }
    return groups;
}

/// Counting-sort variant for large particle sets (the PHD).
inline std::vector<CellGroup> group_by_cell_dense(const ParticleSet& ps, const IntensityImage& image,
                                                  const NoiseModel& noise, ContributionWeight cw) {
    const auto& geom = image.geometry;
    const std::size_t M = geom.num_cells();
    std::vector<std::size_t> cell_of(ps.size());
    std::vector<std::size_t> counts(M + 1, 0);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        cell_of[i] = cell_index(geom, ps[i].state);
        if (cell_of[i] != kOutsideCell) ++counts[cell_of[i] + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    std::vector<std::size_t> order(counts[M]);
    std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (cell_of[i] != kOutsideCell) order[fill[cell_of[i]]++] = i;
    }
    std::vector<CellGroup> groups;
    for (std::size_t m = 0; m < M; ++m) {
        if (counts[m] == counts[m + 1]) continue;
        CellGroup g{m, 0.0, {}};
        g.particles.reserve(counts[m + 1] - counts[m]);
        for (std::size_t k = counts[m]; k < counts[m + 1]; ++k) {
            const Particle& p = ps[order[k]];
            const double v = scaled_contribution(p, image[m], noise, cw);
            if (v > 0.0) {
                g.scaled_c += v;
                g.particles.push_back(Particle{p.state, v});
            }
        }
        if (g.scaled_c > 0.0 && std::isfinite(g.scaled_c)) groups.push_back(std::move(g));
    }
    return groups;
}

inline ParticleSet normalized_from(std::vector<Particle> particles, double total) {
    const double inv = 1.0 / total;
    for (auto& p : particles) p.weight *= inv;
    return ParticleSet(std::move(particles));
}

}  // namespace detail

/// Association weights of the exact update for a predicted PMB state.
///
/// Legacy j, cell m: beta = r * c^(j,m), beta0 = 1 - r.
/// Cell m: beta_new = f0(z) + c^(m), r_new = c^(m) / beta_new.
/// Pairs without particle support are omitted.
inline AssociationWeights build_weights(const PmbState& predicted, const IntensityImage& image,
                                        const NoiseModel& noise, const BuildOptions& opts = {}) {
    const std::size_t M = image.geometry.num_cells();
    if (image.cells.size() != M) throw ShapeError("image cell count does not match its geometry");

    // slot_of[m] is assigned lazily once we know which cells take part.
    std::vector<std::size_t> slot_of(M, kOutsideCell);
    std::vector<char> legacy_support(M, 0);

    std::vector<std::vector<detail::CellGroup>> legacy_groups;
    legacy_groups.reserve(predicted.bernoullis.size());
    for (const auto& b : predicted.bernoullis) {
        auto groups = b.r > 0.0 ? detail::group_by_cell(b.spatial, image, noise, opts.contribution)
                                : std::vector<detail::CellGroup>{};
        for (const auto& g : groups) legacy_support[g.cell] = 1;
        legacy_groups.push_back(std::move(groups));
    }
    auto phd_groups = detail::group_by_cell_dense(predicted.phd.particles, image, noise, opts.contribution);

    AssociationWeights w;
    // Merge legacy-supported cells and PHD-supported cells in cell order.
    std::size_t gi = 0;
    for (std::size_t m = 0; m < M; ++m) {
        const bool has_phd = gi < phd_groups.size() && phd_groups[gi].cell == m;
        if (!legacy_support[m] && !has_phd) continue;
        CellRecord rec;
        rec.cell = m;
        rec.f0 = f0_likelihood(image[m], noise);
        if (has_phd) {
            auto& g = phd_groups[gi++];
            const double c = rec.f0 * g.scaled_c;
            rec.beta_new = rec.f0 + c;
            rec.r_new = g.scaled_c / (1.0 + g.scaled_c);
            rec.spawn = rec.r_new >= opts.min_new_existence;
            if (rec.spawn) rec.conditional = detail::normalized_from(std::move(g.particles), g.scaled_c);
        } else {
            rec.beta_new = rec.f0;
        }
        if (!legacy_support[m] && !rec.spawn) continue;
        slot_of[m] = w.cells.size();
        w.cells.push_back(std::move(rec));
    }

    w.legacy.reserve(predicted.bernoullis.size());
    for (std::size_t j = 0; j < predicted.bernoullis.size(); ++j) {
        const auto& b = predicted.bernoullis[j];
        LegacyWeights lw;
        lw.beta0 = 1.0 - b.r;
        lw.track_id = b.track_id;
        for (auto& g : legacy_groups[j]) {
            const std::size_t slot = slot_of[g.cell];
            const double c = w.cells[slot].f0 * g.scaled_c;
            const double beta = b.r * c;
            if (!(beta > 0.0)) continue;
            lw.entries.push_back(LegacyEntry{slot, beta, detail::normalized_from(std::move(g.particles), g.scaled_c)});
        }
        w.legacy.push_back(std::move(lw));
    }
    return w;
}

/// True when the bipartite graph (legacy components, cells, nonzero beta edges) has no cycle.
inline bool is_forest(const AssociationWeights& w) {
    const std::size_t J = w.legacy.size();
    std::vector<std::size_t> parent(J + w.cells.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t j = 0; j < J; ++j) {
        for (const auto& e : w.legacy[j].entries) {
            if (!(e.beta > 0.0)) continue;
            const std::size_t a = find(j);
            const std::size_t b = find(J + e.slot);
            if (a == b) return false;
            parent[a] = b;
        }
    }
    return true;
}

/// Approximate association marginals by loopy sum-product message passing.
///
/// With g(j,m) = beta(j,m) / beta_new(m) and nu initialised to one:
///   phi(j->m) = g(j,m) / (beta0(j) + sum_{m' != m} g(j,m') nu(m'->j))
///   nu(m->j)  = 1 / (1 + sum_{j' != j} phi(j'->m))
/// Exact on cycle-free association graphs.
inline MarginalPmfs spa_marginals(const AssociationWeights& w, const SpaOptions& opts = {}) {
    const std::size_t J = w.legacy.size();
    const std::size_t S = w.cells.size();
    const double inf = std::numeric_limits<double>::infinity();

    MarginalPmfs out;
    out.p1.assign(S, 1.0);
    out.legacy.resize(J);

    // Per-slot incidence: (j, entry index).
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> incident(S);
    std::vector<std::vector<double>> g(J), nu(J), phi(J);
    for (std::size_t j = 0; j < J; ++j) {
        const auto& entries = w.legacy[j].entries;
        g[j].resize(entries.size());
        nu[j].assign(entries.size(), 1.0);
        phi[j].assign(entries.size(), 0.0);
        for (std::size_t e = 0; e < entries.size(); ++e) {
            g[j][e] = entries[e].beta / w.cells[entries[e].slot].beta_new;
            incident[entries[e].slot].emplace_back(j, e);
        }
    }

    std::vector<double> prefix, suffix;
    auto exclusive_sums = [&](const std::vector<double>& v, std::vector<double>& excl) {
        const std::size_t n = v.size();
        prefix.assign(n + 1, 0.0);
        suffix.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
        for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + v[i];
        excl.resize(n);
        for (std::size_t i = 0; i < n; ++i) excl[i] = prefix[i] + suffix[i + 1];
    };

    std::vector<double> terms, excl;
    auto update_phi = [&] {
        for (std::size_t j = 0; j < J; ++j) {
            const std::size_t n = g[j].size();
            terms.resize(n);
            for (std::size_t e = 0; e < n; ++e) terms[e] = g[j][e] * nu[j][e];
            exclusive_sums(terms, excl);
            for (std::size_t e = 0; e < n; ++e) {
                const double den = w.legacy[j].beta0 + excl[e];
                phi[j][e] = den > 0.0 ? g[j][e] / den : (g[j][e] > 0.0 ? inf : 0.0);
            }
        }
    };

    bool damping = false;
    double prev_delta = inf;
    int increases = 0;
    out.converged = J == 0;
    int it = 0;
    for (; it < opts.max_iters && J > 0; ++it) {
        update_phi();
        double delta = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const auto& inc = incident[s];
            if (inc.empty()) continue;
            terms.resize(inc.size());
            for (std::size_t i = 0; i < inc.size(); ++i) terms[i] = phi[inc[i].first][inc[i].second];
            exclusive_sums(terms, excl);
            for (std::size_t i = 0; i < inc.size(); ++i) {
                double& msg = nu[inc[i].first][inc[i].second];
                double next = 1.0 / (1.0 + excl[i]);
                if (damping) next = opts.damping * msg + (1.0 - opts.damping) * next;
                delta = std::max(delta, std::abs(next - msg));
                msg = next;
            }
        }
        if (delta < opts.tol) {
            out.converged = true;
            ++it;
            break;
        }
        increases = delta > prev_delta ? increases + 1 : 0;
        if (increases >= 2) damping = true;
        prev_delta = delta;
    }
    out.iterations = it;
    update_phi();

    for (std::size_t j = 0; j < J; ++j) {
        const auto& lw = w.legacy[j];
        auto& pmf = out.legacy[j];
        pmf.p.resize(lw.entries.size());
        double z = lw.beta0;
        for (std::size_t e = 0; e < lw.entries.size(); ++e) {
            pmf.p[e] = g[j][e] * nu[j][e];
            z += pmf.p[e];
        }
        if (z > 0.0) {
            pmf.p0 = lw.beta0 / z;
            for (auto& v : pmf.p) v /= z;
        } else {
            pmf.p0 = 1.0;
            std::fill(pmf.p.begin(), pmf.p.end(), 0.0);
        }
    }
    for (std::size_t s = 0; s < S; ++s) {
        double sum = 0.0;
        for (const auto& [j, e] : incident[s]) sum += phi[j][e];
        out.p1[s] = 1.0 / (1.0 + sum);
    }
    return out;
}

/// Exact association marginals by enumerating every admissible association.
/// Limited to at most 8 legacy components and 8 legacy-supported cells.
inline MarginalPmfs enumerate_marginals(const AssociationWeights& w) {
    const std::size_t J = w.legacy.size();
    const std::size_t S = w.cells.size();
    std::vector<char> supported(S, 0);
    for (const auto& lw : w.legacy)
        for (const auto& e : lw.entries) supported[e.slot] = 1;
    const auto n_supported = static_cast<std::size_t>(std::count(supported.begin(), supported.end(), 1));
    if (J > 8 || n_supported > 8) throw SizeError("enumerate_marginals: instance too large to enumerate");

    std::vector<std::size_t> supported_slots;
    for (std::size_t s = 0; s < S; ++s)
        if (supported[s]) supported_slots.push_back(s);

    // choice[j] = 0 for non-existence, e+1 for entry e.
    std::vector<std::size_t> choice(J, 0);
    std::vector<char> taken(S, 0);
    std::vector<std::vector<double>> mass(J);
    for (std::size_t j = 0; j < J; ++j) mass[j].assign(w.legacy[j].entries.size() + 1, 0.0);
    std::vector<double> free_mass(S, 0.0);
    double total = 0.0;

    std::function<void(std::size_t, double)> visit = [&](std::size_t j, double weight) {
        if (j == J) {
            double wt = weight;
            for (std::size_t s : supported_slots)
                if (!taken[s]) wt *= w.cells[s].beta_new;
            if (!(wt > 0.0)) return;
            total += wt;
            for (std::size_t i = 0; i < J; ++i) mass[i][choice[i]] += wt;
            for (std::size_t s : supported_slots)
                if (!taken[s]) free_mass[s] += wt;
            return;
        }
        const auto& lw = w.legacy[j];
        choice[j] = 0;
        visit(j + 1, weight * lw.beta0);
        for (std::size_t e = 0; e < lw.entries.size(); ++e) {
            const std::size_t s = lw.entries[e].slot;
            if (taken[s] || !(lw.entries[e].beta > 0.0)) continue;
            taken[s] = 1;
            choice[j] = e + 1;
            visit(j + 1, weight * lw.entries[e].beta);
            taken[s] = 0;
        }
        choice[j] = 0;
    };
    visit(0, 1.0);
    if (!(total > 0.0)) throw DegenerateSetError("enumerate_marginals: no admissible association has positive weight");

    MarginalPmfs out;
    out.legacy.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        out.legacy[j].p0 = mass[j][0] / total;
        out.legacy[j].p.resize(w.legacy[j].entries.size());
        for (std::size_t e = 0; e < w.legacy[j].entries.size(); ++e) out.legacy[j].p[e] = mass[j][e + 1] / total;
    }
    out.p1.assign(S, 1.0);
    for (std::size_t s : supported_slots) out.p1[s] = free_mass[s] / total;
    return out;
}

}  // namespace tbd
