#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbd/errors.hpp"
#include "tbd/rfs_core.hpp"
#include "tbd/simulator.hpp"
#include "tbd/update.hpp"

namespace tbd {

using json = nlohmann::json;

inline void to_json(json& j, const ObjectState& x) {
    j = json{{"p1", x.p1}, {"p2", x.p2}, {"v1", x.v1}, {"v2", x.v2}, {"gamma", x.gamma}};
}

inline void from_json(const json& j, ObjectState& x) {
    j.at("p1").get_to(x.p1);
    j.at("p2").get_to(x.p2);
    j.at("v1").get_to(x.v1);
    j.at("v2").get_to(x.v2);
    j.at("gamma").get_to(x.gamma);
}

// Particle sets are stored column-wise to keep files compact.
inline void to_json(json& j, const ParticleSet& ps) {
    std::vector<double> p1, p2, v1, v2, g, w;
    for (const auto& p : ps.particles()) {
        p1.push_back(p.state.p1);
        p2.push_back(p.state.p2);
        v1.push_back(p.state.v1);
        v2.push_back(p.state.v2);
        g.push_back(p.state.gamma);
        w.push_back(p.weight);
    }
    j = json{{"p1", p1}, {"p2", p2}, {"v1", v1}, {"v2", v2}, {"gamma", g}, {"weight", w}};
}

inline void from_json(const json& j, ParticleSet& ps) {
    const auto p1 = j.at("p1").get<std::vector<double>>();
    const auto p2 = j.at("p2").get<std::vector<double>>();
    const auto v1 = j.at("v1").get<std::vector<double>>();
    const auto v2 = j.at("v2").get<std::vector<double>>();
    const auto g = j.at("gamma").get<std::vector<double>>();
    const auto w = j.at("weight").get<std::vector<double>>();
    const std::size_t n = w.size();
    if (p1.size() != n || p2.size() != n || v1.size() != n || v2.size() != n || g.size() != n) {
        throw ShapeError("particle set columns have different lengths");
    }
    std::vector<Particle> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = Particle{ObjectState{p1[i], p2[i], v1[i], v2[i], g[i]}, w[i]};
    ps = ParticleSet(std::move(out));
}

inline void to_json(json& j, const BernoulliComponent& b) {
    j = json{{"r", b.r}, {"track_id", b.track_id}, {"spatial", b.spatial}};
}

inline void from_json(const json& j, BernoulliComponent& b) {
    j.at("r").get_to(b.r);
    j.at("track_id").get_to(b.track_id);
    b.spatial = j.at("spatial").get<ParticleSet>();
}

inline void to_json(json& j, const PmbState& s) {
    j = json{{"k", s.k}, {"next_track_id", s.next_track_id}, {"bernoullis", s.bernoullis}, {"phd", s.phd.particles}};
}

inline void from_json(const json& j, PmbState& s) {
    j.at("k").get_to(s.k);
    j.at("next_track_id").get_to(s.next_track_id);
    s.bernoullis = j.at("bernoullis").get<std::vector<BernoulliComponent>>();
    s.phd.particles = j.at("phd").get<ParticleSet>();
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace detail

/// One record per (object, k).
inline void write_truth_jsonl(const std::filesystem::path& path, const GroundTruth& truth) {
    auto out = detail::open_for_write(path);
    for (std::size_t i = 0; i < truth.tracks.size(); ++i) {
        const auto& t = truth.tracks[i];
        for (int k = t.birth; k < t.death; ++k) {
            json rec = t.at(k);
            rec["object"] = i;
            rec["k"] = k;
            out << rec.dump() << '\n';
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
}

/// Truth positions keyed by step.
inline std::map<int, std::vector<ObjectState>> read_truth_jsonl(const std::filesystem::path& path) {
    std::map<int, std::vector<ObjectState>> by_k;
    for (const auto& rec : detail::read_jsonl(path)) by_k[rec.at("k").get<int>()].push_back(rec.get<ObjectState>());
    return by_k;
}

struct StepEstimates {
    int k = 0;
    std::vector<Estimate> estimates;
};

/// One record per (estimate, k).
inline void write_estimates_jsonl(const std::filesystem::path& path, const std::vector<StepEstimates>& steps) {
    auto out = detail::open_for_write(path);
    for (const auto& step : steps) {
        for (const auto& e : step.estimates) {
            json rec = e.state;
            rec["k"] = step.k;
            rec["track_id"] = e.track_id;
            rec["r"] = e.r;
            out << rec.dump() << '\n';
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
}

inline std::map<int, std::vector<ObjectState>> read_estimates_jsonl(const std::filesystem::path& path) {
    std::map<int, std::vector<ObjectState>> by_k;
    for (const auto& rec : detail::read_jsonl(path)) by_k[rec.at("k").get<int>()].push_back(rec.get<ObjectState>());
    return by_k;
}

}  // namespace tbd
