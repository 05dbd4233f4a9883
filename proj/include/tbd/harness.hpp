#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tbd/io.hpp"
#include "tbd/metrics.hpp"
#include "tbd/simulator.hpp"
#include "tbd/tmb.hpp"
#include "tbd/ttombp.hpp"

#ifndef TBD_VERSION
#define TBD_VERSION "0.1.0"
#endif

namespace tbd {

enum class FilterKind { ttombp, tmb };

inline std::string to_string(FilterKind f) { return f == FilterKind::ttombp ? "ttombp" : "tmb"; }

inline FilterKind parse_filter(const std::string& s) {
    if (s == "ttombp") return FilterKind::ttombp;
    if (s == "tmb") return FilterKind::tmb;
    throw ConfigError("unknown filter '" + s + "' (expected ttombp or tmb)");
}

struct RunConfig {
    ScenarioConfig scenario{};
    FilterKind filter = FilterKind::ttombp;
    DynamicsConfig dynamics{};
    BirthModel birth{};
    UpdateConfig update{};
    BuildOptions build{};
    SpaOptions spa{};
    TmbConfig tmb{};
    OspaParams ospa{};
    int n_runs = 50;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    int threads = 1;

    [[nodiscard]] TtombpConfig ttombp() const {
        return TtombpConfig{dynamics, birth, scenario.noise, update, build, spa};
    }
};

/// Full-scale defaults for a scenario with the given initial intensity.
inline RunConfig default_run_config(double gamma_init = 10.0) {
    RunConfig cfg;
    cfg.scenario.gamma_init = gamma_init;
    cfg.tmb.eta_new = tmb_birth_threshold(gamma_init, cfg.scenario.noise);
    return cfg;
}

inline void validate(const RunConfig& c) {
    const auto& s = c.scenario;
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(what);
    };
    require(s.n_objects >= 0, "scenario.n_objects must be non-negative");
    require(s.n_steps >= 1, "scenario.n_steps must be at least 1");
    require(1 <= s.appear_before && s.appear_before < s.disappear_after && s.disappear_after <= s.n_steps,
            "scenario requires 1 <= appear_before < disappear_after <= n_steps");
    require(s.geometry.width > 0 && s.geometry.height > 0 && s.geometry.cell_size > 0.0, "grid must be non-empty");
    require(s.birth_region.x_min >= s.geometry.origin_x && s.birth_region.x_max <= s.geometry.max_x() &&
                s.birth_region.y_min >= s.geometry.origin_y && s.birth_region.y_max <= s.geometry.max_y() &&
                s.birth_region.x_min < s.birth_region.x_max && s.birth_region.y_min < s.birth_region.y_max,
            "scenario.birth_region must be a non-empty subset of the ROI");
    require(s.noise.sigma_n > 0.0, "sigma_n must be positive");
    require(c.dynamics.p_s >= 0.0 && c.dynamics.p_s <= 1.0, "dynamics.p_s must lie in [0,1]");
    require(c.dynamics.q_pos >= 0.0 && c.dynamics.q_int >= 0.0, "dynamics variances must be non-negative");
    require(c.birth.mu_b >= 0.0 && c.birth.eta_i > 0.0 && c.birth.sigma_v2 >= 0.0, "invalid birth model");
    require(c.update.eta_r > 0.0 && c.update.eta_r < 1.0, "update.eta_r must lie in (0,1)");
    require(c.update.estimate_threshold > 0.0 && c.update.estimate_threshold < 1.0,
            "update.estimate_threshold must lie in (0,1)");
    require(c.update.n_bernoulli_particles >= 1 && c.update.n_phd_particles_cap >= 1, "particle counts must be >= 1");
    require(c.spa.max_iters >= 1 && c.spa.tol > 0.0 && c.spa.damping >= 0.0 && c.spa.damping < 1.0,
            "invalid spa options");
    require(c.tmb.eta_new > 0.0 && c.tmb.eta_t > 0.0 && c.tmb.r_birth > 0.0 && c.tmb.n_particles >= 1,
            "invalid tmb config");
    require(c.ospa.c > 0.0 && c.ospa.p >= 1.0, "invalid ospa parameters");
    require(c.n_runs >= 1, "n_runs must be at least 1");
    require(c.threads >= 1, "threads must be at least 1");
}

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError("unknown config key '" + where + (where.empty() ? "" : ".") + it.key() + "'");
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(dst);
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
    }
}

}  // namespace detail

/// Parses a single JSON config document; every key is optional, unknown keys are errors.
inline RunConfig parse_run_config(const json& j) {
    using detail::check_keys;
    using detail::read_opt;
    check_keys(j, "", {"scenario", "filter", "dynamics", "birth", "update", "spa", "tmb", "ospa", "n_runs",
                       "base_seed", "output_dir", "threads"});
    RunConfig c;
    bool eta_new_given = false;
    bool tmb_ps_given = false;

    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        check_keys(s, "scenario", {"n_objects", "n_steps", "appear_before", "disappear_after", "birth_region",
                                   "gamma_init", "sigma_v2", "sigma_n", "grid"});
        read_opt(s, "n_objects", c.scenario.n_objects, "scenario");
        read_opt(s, "n_steps", c.scenario.n_steps, "scenario");
        read_opt(s, "appear_before", c.scenario.appear_before, "scenario");
        read_opt(s, "disappear_after", c.scenario.disappear_after, "scenario");
        read_opt(s, "gamma_init", c.scenario.gamma_init, "scenario");
        read_opt(s, "sigma_v2", c.scenario.sigma_v2, "scenario");
        read_opt(s, "sigma_n", c.scenario.noise.sigma_n, "scenario");
        if (s.contains("birth_region")) {
            std::vector<double> r;
            read_opt(s, "birth_region", r, "scenario");
            if (r.size() != 4) throw ConfigError("scenario.birth_region must be [x_min, x_max, y_min, y_max]");
            c.scenario.birth_region = Region{r[0], r[1], r[2], r[3]};
        }
        if (s.contains("grid")) {
            const auto& g = s.at("grid");
            check_keys(g, "scenario.grid", {"width", "height", "cell_size"});
            read_opt(g, "width", c.scenario.geometry.width, "scenario.grid");
            read_opt(g, "height", c.scenario.geometry.height, "scenario.grid");
            read_opt(g, "cell_size", c.scenario.geometry.cell_size, "scenario.grid");
        }
    }
    if (j.contains("filter")) {
        std::string f;
        read_opt(j, "filter", f, "");
        c.filter = parse_filter(f);
    }
    if (j.contains("dynamics")) {
        const auto& d = j.at("dynamics");
        check_keys(d, "dynamics", {"p_s", "q_pos", "q_int", "dt"});
        read_opt(d, "p_s", c.dynamics.p_s, "dynamics");
        read_opt(d, "q_pos", c.dynamics.q_pos, "dynamics");
        read_opt(d, "q_int", c.dynamics.q_int, "dynamics");
        read_opt(d, "dt", c.dynamics.dt, "dynamics");
    }
    if (j.contains("birth")) {
        const auto& b = j.at("birth");
        check_keys(b, "birth", {"mu_b", "sigma_v2", "eta_i", "n_particles"});
        read_opt(b, "mu_b", c.birth.mu_b, "birth");
        read_opt(b, "sigma_v2", c.birth.sigma_v2, "birth");
        read_opt(b, "eta_i", c.birth.eta_i, "birth");
        read_opt(b, "n_particles", c.birth.n_birth_particles, "birth");
    }
    if (j.contains("update")) {
        const auto& u = j.at("update");
        check_keys(u, "update", {"eta_r", "n_bernoulli_particles", "n_phd_particles_cap", "estimate_threshold",
                                 "contribution", "min_new_existence"});
        read_opt(u, "eta_r", c.update.eta_r, "update");
        read_opt(u, "n_bernoulli_particles", c.update.n_bernoulli_particles, "update");
        read_opt(u, "n_phd_particles_cap", c.update.n_phd_particles_cap, "update");
        read_opt(u, "estimate_threshold", c.update.estimate_threshold, "update");
        read_opt(u, "min_new_existence", c.build.min_new_existence, "update");
        if (u.contains("contribution")) {
            std::string s;
            read_opt(u, "contribution", s, "update");
            if (s == "psf") {
                c.build.contribution = ContributionWeight::psf;
            } else if (s == "normalized_psf") {
                c.build.contribution = ContributionWeight::normalized_psf;
            } else {
                throw ConfigError("update.contribution must be 'psf' or 'normalized_psf'");
            }
        }
    }
    if (j.contains("spa")) {
        const auto& s = j.at("spa");
        check_keys(s, "spa", {"max_iters", "tol", "damping"});
        read_opt(s, "max_iters", c.spa.max_iters, "spa");
        read_opt(s, "tol", c.spa.tol, "spa");
        read_opt(s, "damping", c.spa.damping, "spa");
    }
    if (j.contains("tmb")) {
        const auto& t = j.at("tmb");
        check_keys(t, "tmb", {"eta_new", "r_birth", "eta_t", "p_s", "n_particles", "max_components",
                                   "birth_gating"});
        eta_new_given = t.contains("eta_new");
        tmb_ps_given = t.contains("p_s");
        read_opt(t, "eta_new", c.tmb.eta_new, "tmb");
        read_opt(t, "r_birth", c.tmb.r_birth, "tmb");
        read_opt(t, "eta_t", c.tmb.eta_t, "tmb");
        read_opt(t, "p_s", c.tmb.p_s, "tmb");
        read_opt(t, "n_particles", c.tmb.n_particles, "tmb");
        read_opt(t, "max_components", c.tmb.max_components, "tmb");
        read_opt(t, "birth_gating", c.tmb.birth_gating, "tmb");
    }
    if (j.contains("ospa")) {
        const auto& o = j.at("ospa");
        check_keys(o, "ospa", {"c", "p"});
        read_opt(o, "c", c.ospa.c, "ospa");
        read_opt(o, "p", c.ospa.p, "ospa");
    }
    read_opt(j, "n_runs", c.n_runs, "");
    read_opt(j, "base_seed", c.base_seed, "");
    read_opt(j, "output_dir", c.output_dir, "");
    read_opt(j, "threads", c.threads, "");

    // Derived couplings.
    c.scenario.dynamics = c.dynamics;
    c.birth.roi = Region{c.scenario.geometry.origin_x, c.scenario.geometry.max_x(), c.scenario.geometry.origin_y,
                         c.scenario.geometry.max_y()};
    if (!eta_new_given) c.tmb.eta_new = tmb_birth_threshold(c.scenario.gamma_init, c.scenario.noise);
    if (!tmb_ps_given) c.tmb.p_s = c.dynamics.p_s;
    validate(c);
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

/// Full effective configuration, suitable for run metadata and for parse_run_config.
inline json to_json(const RunConfig& c) {
    const auto& s = c.scenario;
    return json{
        {"scenario",
         {{"n_objects", s.n_objects},
          {"n_steps", s.n_steps},
          {"appear_before", s.appear_before},
          {"disappear_after", s.disappear_after},
          {"birth_region", {s.birth_region.x_min, s.birth_region.x_max, s.birth_region.y_min, s.birth_region.y_max}},
          {"gamma_init", s.gamma_init},
          {"sigma_v2", s.sigma_v2},
          {"sigma_n", s.noise.sigma_n},
          {"grid", {{"width", s.geometry.width}, {"height", s.geometry.height}, {"cell_size", s.geometry.cell_size}}}}},
        {"filter", to_string(c.filter)},
        {"dynamics", {{"p_s", c.dynamics.p_s}, {"q_pos", c.dynamics.q_pos}, {"q_int", c.dynamics.q_int}, {"dt", c.dynamics.dt}}},
        {"birth",
         {{"mu_b", c.birth.mu_b},
          {"sigma_v2", c.birth.sigma_v2},
          {"eta_i", c.birth.eta_i},
          {"n_particles", c.birth.n_birth_particles}}},
        {"update",
         {{"eta_r", c.update.eta_r},
          {"n_bernoulli_particles", c.update.n_bernoulli_particles},
          {"n_phd_particles_cap", c.update.n_phd_particles_cap},
          {"estimate_threshold", c.update.estimate_threshold},
          {"contribution", c.build.contribution == ContributionWeight::psf ? "psf" : "normalized_psf"},
          {"min_new_existence", c.build.min_new_existence}}},
        {"spa", {{"max_iters", c.spa.max_iters}, {"tol", c.spa.tol}, {"damping", c.spa.damping}}},
        {"tmb",
         {{"eta_new", c.tmb.eta_new},
          {"r_birth", c.tmb.r_birth},
          {"eta_t", c.tmb.eta_t},
          {"p_s", c.tmb.p_s},
          {"n_particles", c.tmb.n_particles},
          {"max_components", c.tmb.max_components},
          {"birth_gating", c.tmb.birth_gating}}},
        {"ospa", {{"c", c.ospa.c}, {"p", c.ospa.p}}},
        {"n_runs", c.n_runs},
        {"base_seed", c.base_seed},
        {"output_dir", c.output_dir},
        {"threads", c.threads}};
}

/// Seed of Monte Carlo run `run`.
inline std::uint64_t run_seed(const RunConfig& c, int run) { return c.base_seed + static_cast<std::uint64_t>(run); }

struct SimulatedRun {
    GroundTruth truth;
    std::vector<IntensityImage> images;  // images[k-1] is frame k
};

/// Truth and frames 1..n_steps of one run; independent of the filter choice.
inline SimulatedRun simulate_run(const RunConfig& c, int run) {
    const std::uint64_t seed = run_seed(c, run);
    Rng truth_rng = make_stream(seed, static_cast<std::uint64_t>(run), Substream::truth);
    SimulatedRun sim;
    sim.truth = generate_truth(c.scenario, truth_rng);
    sim.images.reserve(static_cast<std::size_t>(c.scenario.n_steps));
    for (int k = 1; k <= c.scenario.n_steps; ++k) {
        Rng img_rng = image_stream(seed, static_cast<std::uint64_t>(run), k);
        sim.images.push_back(render_image(sim.truth.alive_states(k), c.scenario.noise, c.scenario.geometry, k, img_rng));
    }
    return sim;
}

struct TrackResult {
    std::vector<StepEstimates> estimates;  // one entry per frame
    std::size_t max_components = 0;
    std::size_t spa_nonconverged = 0;
    std::size_t tmb_cap_bound = 0;
    bool existence_in_range = true;  // every r stayed in [0,1]
};

/// Runs the configured filter over a frame sequence.
inline TrackResult track_images(const RunConfig& c, const std::vector<IntensityImage>& images, Rng& rng) {
    TrackResult res;
    PmbState state;
    const auto ttombp_cfg = c.ttombp();
    TmbStats tmb_stats;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (c.filter == FilterKind::ttombp) {
            StepDiagnostics diag;
            state = ttombp_step(state, images[i], ttombp_cfg, rng, &diag);
            if (!diag.spa_converged) ++res.spa_nonconverged;
        } else {
            const IntensityImage* prev = i > 0 ? &images[i - 1] : nullptr;
            state = tmb_step(state, images[i], prev, c.tmb, c.dynamics, c.birth, c.scenario.noise, rng, &tmb_stats);
        }
        for (const auto& b : state.bernoullis)
            if (!(b.r >= 0.0 && b.r <= 1.0)) res.existence_in_range = false;
        res.max_components = std::max(res.max_components, state.bernoullis.size());
        res.estimates.push_back(StepEstimates{images[i].k, extract_estimates(state, c.update)});
    }
    res.tmb_cap_bound = tmb_stats.cap_bound_steps;
    return res;
}

struct StepMetric {
    int k = 0;
    double ospa = 0.0;
    std::size_t n_estimates = 0;
    std::size_t n_truth = 0;
};

inline std::vector<Point2> positions(const std::vector<ObjectState>& xs) {
    std::vector<Point2> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(Point2{x.p1, x.p2});
    return out;
}

inline std::vector<StepMetric> evaluate_run(const GroundTruth& truth, const std::vector<StepEstimates>& est,
                                            const OspaParams& params) {
    std::vector<StepMetric> out;
    out.reserve(est.size());
    for (const auto& step : est) {
        std::vector<ObjectState> xs;
        for (const auto& e : step.estimates) xs.push_back(e.state);
        const auto truth_k = truth.alive_states(step.k);
        const double d = ospa(positions(xs), positions(truth_k), params);
        if (!std::isfinite(d)) throw Error("non-finite OSPA at k=" + std::to_string(step.k));
        out.push_back(StepMetric{step.k, d, xs.size(), truth_k.size()});
    }
    return out;
}

struct RunOutcome {
    std::vector<StepMetric> metrics;
    TrackResult track;
    GroundTruth truth;
};

inline RunOutcome execute_run(const RunConfig& c, int run) {
    SimulatedRun sim = simulate_run(c, run);
    Rng filter_rng = make_stream(run_seed(c, run), static_cast<std::uint64_t>(run), Substream::filter);
    RunOutcome out;
    out.track = track_images(c, sim.images, filter_rng);
    out.metrics = evaluate_run(sim.truth, out.track.estimates, c.ospa);
    out.truth = std::move(sim.truth);
    return out;
}

inline void write_metrics_jsonl(const std::filesystem::path& path, const std::vector<StepMetric>& metrics) {
    auto out = detail::open_for_write(path);
    for (const auto& m : metrics) {
        out << json{{"k", m.k}, {"ospa", m.ospa}, {"n_estimates", m.n_estimates}, {"n_truth", m.n_truth}}.dump()
            << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

struct ExperimentResult {
    std::vector<std::vector<double>> ospa;  // [run][k-1]
    std::vector<double> mospa;
    std::vector<double> stderr_;
    std::size_t spa_nonconverged = 0;
    std::size_t tmb_cap_bound = 0;
    bool existence_in_range = true;
    double wall_seconds = 0.0;

    /// Mean of the MOSPA curve over steps [k0, k1].
    [[nodiscard]] double time_average(int k0, int k1) const {
        double s = 0.0;
        int n = 0;
        for (int k = k0; k <= k1 && k <= static_cast<int>(mospa.size()); ++k, ++n) s += mospa[static_cast<std::size_t>(k - 1)];
        return n ? s / n : 0.0;
    }
};

/// Monte Carlo experiment over a worker pool. Results depend only on the
/// config: run i always uses seed base_seed + i, and aggregation happens in
/// run order after all workers finish. Files are written when `write_files`.
inline ExperimentResult run_experiment(const RunConfig& c, bool write_files = true) {
    validate(c);
    const auto t0 = std::chrono::steady_clock::now();
    const std::filesystem::path root(c.output_dir);
    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(c.n_runs));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (int i = next++; i < c.n_runs; i = next++) {
            try {
                RunOutcome out = execute_run(c, i);
                if (write_files) {
                    const auto dir = root / "runs" / std::to_string(i);
                    write_truth_jsonl(dir / "truth.jsonl", out.truth);
                    write_estimates_jsonl(dir / "estimates.jsonl", out.track.estimates);
                    write_metrics_jsonl(dir / "metrics.jsonl", out.metrics);
                }
                out.truth = {};
                out.track.estimates.clear();
                outcomes[static_cast<std::size_t>(i)] = std::move(out);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = c.n_runs;
            }
        }
    };
    const int n_threads = std::min(c.threads, c.n_runs);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentResult res;
    for (const auto& o : outcomes) {
        std::vector<double> row;
        row.reserve(o.metrics.size());
        for (const auto& m : o.metrics) row.push_back(m.ospa);
        res.ospa.push_back(std::move(row));
        res.spa_nonconverged += o.track.spa_nonconverged;
        res.tmb_cap_bound += o.track.tmb_cap_bound;
        res.existence_in_range = res.existence_in_range && o.track.existence_in_range;
    }
    res.mospa = mospa_curve(res.ospa);
    res.stderr_ = mospa_stderr(res.ospa);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (write_files) {
        std::filesystem::create_directories(root);
        write_mospa_csv(root / "mospa.csv", res.ospa);
        json meta{{"version", TBD_VERSION},
                  {"config", to_json(c)},
                  {"wall_time_seconds", res.wall_seconds},
                  {"birth_death_model",
                   "birth step uniform on [1, appear_before]; death step uniform on "
                   "[disappear_after + 1, n_steps + 1] or first step outside the ROI"},
                  {"spa_nonconverged_steps", res.spa_nonconverged},
                  {"tmb_component_cap_bound_steps", res.tmb_cap_bound}};
        auto out = detail::open_for_write(root / "meta.json");
        out << meta.dump(2) << '\n';
    }
    return res;
}

}  // namespace tbd
