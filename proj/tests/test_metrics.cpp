#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "tbd/metrics.hpp"
#include "tbd/random.hpp"

namespace tbd {
namespace {

// OSPA by trying every injection of the smaller set into the larger one.
double brute_force_ospa(std::vector<Point2> x, std::vector<Point2> y, double c, double p) {
    if (x.size() > y.size()) std::swap(x, y);
    const std::size_t m = x.size(), n = y.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d = std::hypot(x[i][0] - y[perm[i]][0], x[i][1] - y[perm[i]][1]);
            s += std::pow(std::min(d, c), p);
        }
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow((best + std::pow(c, p) * static_cast<double>(n - m)) / static_cast<double>(n), 1.0 / p);
}

std::vector<Point2> random_set(Rng& rng, std::size_t max_size) {
    std::uniform_int_distribution<std::size_t> size(0, max_size);
    std::uniform_real_distribution<double> pos(0.0, 40.0);
    std::vector<Point2> out(size(rng));
    for (auto& q : out) q = {pos(rng), pos(rng)};
    return out;
}

TEST(OspaTest, Examples) {
    const std::vector<Point2> x{{1, 2}, {5, 5}};
    EXPECT_EQ(ospa(x, x), 0.0);
    EXPECT_EQ(ospa({}, {}), 0.0);
    EXPECT_DOUBLE_EQ(ospa({}, {{0, 0}, {1, 1}, {2, 2}}), 20.0);
    EXPECT_DOUBLE_EQ(ospa({{0, 0}, {1, 1}, {2, 2}}, {}), 20.0);
    EXPECT_NEAR(ospa({{0, 0}}, {{3, 4}}), 5.0, 1e-12);
    EXPECT_DOUBLE_EQ(ospa({{0, 0}}, {{300, 400}}), 20.0);
}

TEST(OspaTest, MatchesBruteForce) {
    Rng rng = make_stream(1);
    for (int i = 0; i < 500; ++i) {
        const auto x = random_set(rng, 6);
        const auto y = random_set(rng, 6);
        EXPECT_NEAR(ospa(x, y), brute_force_ospa(x, y, 20.0, 2.0), 1e-9);
        EXPECT_NEAR(ospa(x, y, OspaParams{5.0, 1.0}), brute_force_ospa(x, y, 5.0, 1.0), 1e-9);
    }
}

TEST(OspaTest, MetricProperties) {
    Rng rng = make_stream(2);
    for (int i = 0; i < 300; ++i) {
        const auto x = random_set(rng, 5);
        const auto y = random_set(rng, 5);
        const auto z = random_set(rng, 5);
        const double xy = ospa(x, y);
        EXPECT_NEAR(xy, ospa(y, x), 1e-12);
        EXPECT_LE(xy, 20.0);
        EXPECT_GE(xy, 0.0);
        EXPECT_LE(xy, ospa(x, z) + ospa(z, y) + 1e-9);
    }
}

TEST(AssignmentTest, Examples) {
    EXPECT_EQ(optimal_assignment({{7.0}}), (std::vector<std::size_t>{0}));
    EXPECT_EQ(optimal_assignment({{0, 5, 5}, {5, 0, 5}, {5, 5, 0}}), (std::vector<std::size_t>{0, 1, 2}));
    const std::vector<std::vector<double>> c{{1, 2}, {2, 1}};
    const auto a = optimal_assignment(c);
    EXPECT_EQ(a, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(c[0][a[0]] + c[1][a[1]], 2.0);
    EXPECT_EQ(optimal_assignment({{1, 1}}), (std::vector<std::size_t>{0}));
    EXPECT_TRUE(optimal_assignment({}).empty());
    EXPECT_THROW(optimal_assignment({{1}, {2}}), ShapeError);
}

TEST(AssignmentTest, MatchesExhaustiveSearch) {
    Rng rng = make_stream(3);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::uniform_int_distribution<std::size_t> dim(1, 7);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = dim(rng);
        const std::size_t m = std::uniform_int_distribution<std::size_t>(1, n)(rng);
        std::vector<std::vector<double>> c(m, std::vector<double>(n));
        for (auto& row : c)
            for (auto& v : row) v = std::round(u(rng));  // integer costs create ties
        const auto a = optimal_assignment(c);
        std::vector<char> used(n, 0);
        double got = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            ASSERT_LT(a[i], n);
            EXPECT_FALSE(used[a[i]]);
            used[a[i]] = 1;
            got += c[i][a[i]];
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += c[i][perm[i]];
            best = std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        EXPECT_NEAR(got, best, 1e-9);
    }
}

TEST(MospaTest, Curves) {
    EXPECT_EQ(mospa_curve({{1, 2, 3}}), (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(mospa_curve({{2, 0}, {4, 0}}), (std::vector<double>{3, 0}));
    EXPECT_EQ(mospa_curve({{5, 5}, {5, 5}, {5, 5}}), (std::vector<double>{5, 5}));
    EXPECT_THROW(mospa_curve({{1, 2}, {1}}), ShapeError);
    EXPECT_EQ(mospa_stderr({{1, 2}}), (std::vector<double>{0, 0}));
    EXPECT_NEAR(mospa_stderr({{2}, {4}})[0], std::sqrt(2.0) / std::sqrt(2.0), 1e-12);
}

TEST(MospaTest, CsvLayout) {
    const auto dir = std::filesystem::temp_directory_path() / "tbd_test_metrics";
    std::filesystem::create_directories(dir);
    write_mospa_csv(dir / "mospa.csv", {{2, 1}, {4, 1}});
    std::ifstream in(dir / "mospa.csv");
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    EXPECT_EQ(header, "k,mospa_mean,mospa_stderr,n_runs");
    EXPECT_EQ(row1, "1,3,1,2");
    EXPECT_EQ(row2, "2,1,0,2");
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace tbd
