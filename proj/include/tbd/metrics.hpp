#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "tbd/errors.hpp"

namespace tbd {

using Point2 = std::array<double, 2>;

struct OspaParams {
    double c = 20.0;
    double p = 2.0;
};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// Hungarian method with potentials. Returns the column of each row.
/// Among equally good augmenting choices the lowest column index wins.
inline std::vector<std::size_t> optimal_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    if (n == 0) return {};
    const std::size_t m = cost[0].size();
    for (const auto& row : cost)
        if (row.size() != m) throw ShapeError("optimal_assignment: ragged cost matrix");
    if (n > m) throw ShapeError("optimal_assignment: more rows than columns");

    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; column 0 is the virtual start.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= m; ++j)
        if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

/// OSPA distance between two 2D point sets.
inline double ospa(const std::vector<Point2>& x, const std::vector<Point2>& y, const OspaParams& params = {}) {
    const std::vector<Point2>& small = x.size() <= y.size() ? x : y;
    const std::vector<Point2>& large = x.size() <= y.size() ? y : x;
    const std::size_t m = small.size();
    const std::size_t n = large.size();
    if (n == 0) return 0.0;
    const double cp = std::pow(params.c, params.p);
    double total = cp * static_cast<double>(n - m);
    if (m > 0) {
        std::vector<std::vector<double>> cost(m, std::vector<double>(n));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double d = std::hypot(small[i][0] - large[j][0], small[i][1] - large[j][1]);
                cost[i][j] = std::pow(std::min(d, params.c), params.p);
            }
        const auto assign = optimal_assignment(cost);
        for (std::size_t i = 0; i < m; ++i) total += cost[i][assign[i]];
    }
    return std::min(std::pow(total / static_cast<double>(n), 1.0 / params.p), params.c);
}

/// Per-step mean across runs; rows are runs, columns are steps.
inline std::vector<double> mospa_curve(const std::vector<std::vector<double>>& per_run) {
    if (per_run.empty()) return {};
    const std::size_t K = per_run[0].size();
    for (const auto& run : per_run)
        if (run.size() != K) throw ShapeError("mospa_curve: runs have different lengths");
    std::vector<double> mean(K, 0.0);
    for (const auto& run : per_run)
        for (std::size_t k = 0; k < K; ++k) mean[k] += run[k];
    for (auto& v : mean) v /= static_cast<double>(per_run.size());
    return mean;
}

/// Standard error of the per-step mean (sample standard deviation / sqrt(n)).
inline std::vector<double> mospa_stderr(const std::vector<std::vector<double>>& per_run) {
    const auto mean = mospa_curve(per_run);
    std::vector<double> se(mean.size(), 0.0);
    const std::size_t n = per_run.size();
    if (n < 2) return se;
    for (std::size_t k = 0; k < mean.size(); ++k) {
        double ss = 0.0;
        for (const auto& run : per_run) ss += (run[k] - mean[k]) * (run[k] - mean[k]);
        se[k] = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    }
    return se;
}

/// Columns `k, mospa_mean, mospa_stderr, n_runs`; step k = first_k + column index.
inline void write_mospa_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& per_run,
                            int first_k = 1) {
    const auto mean = mospa_curve(per_run);
    const auto se = mospa_stderr(per_run);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "k,mospa_mean,mospa_stderr,n_runs\n";
    char buf[128];
    for (std::size_t k = 0; k < mean.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%zu\n", first_k + static_cast<int>(k), mean[k], se[k],
                      per_run.size());
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace tbd
