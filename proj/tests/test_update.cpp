#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "tbd/update.hpp"

namespace tbd {
namespace {

ParticleSet cloud(double p1, std::size_t n, double total = 1.0) {
    std::vector<Particle> ps;
    for (std::size_t i = 0; i < n; ++i)
        ps.push_back(Particle{ObjectState{p1 + 0.001 * static_cast<double>(i), 1, 0, 0, 5}, total / static_cast<double>(n)});
    return ParticleSet(std::move(ps));
}

UpdateConfig small_cfg() {
    UpdateConfig cfg;
    cfg.n_bernoulli_particles = 200;
    return cfg;
}

AssociationWeights two_cell_legacy() {
    AssociationWeights w;
    for (std::size_t s = 0; s < 2; ++s) {
        CellRecord c;
        c.cell = s;
        w.cells.push_back(c);
    }
    LegacyWeights lw;
    lw.track_id = 5;
    lw.entries.push_back(LegacyEntry{0, 1.0, cloud(1.0, 10)});
    lw.entries.push_back(LegacyEntry{1, 1.0, cloud(2.0, 10)});
    w.legacy.push_back(std::move(lw));
    return w;
}

TEST(MbApproximationTest, LegacyExistenceIsSumOfAssociationMarginals) {
    const auto w = two_cell_legacy();
    MarginalPmfs m;
    m.legacy.push_back(LegacyPmf{0.25, {0.5, 0.25}});
    m.p1 = {1.0, 1.0};
    Rng rng = make_stream(1);
    std::uint64_t next = 10;
    const auto out = mb_approximation(w, m, small_cfg(), rng, next);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_DOUBLE_EQ(out[0].r, 0.75);
    EXPECT_EQ(out[0].track_id, 5u);
    EXPECT_EQ(out[0].spatial.size(), 200u);
    EXPECT_NEAR(out[0].spatial.total_weight(), 1.0, 1e-12);
    EXPECT_EQ(next, 10u);
    int near_first = 0;
    for (const auto& p : out[0].spatial.particles()) near_first += p.state.p1 < 1.5;
    // Mixture weights 2:1, systematic resampling is exact to one particle.
    EXPECT_NEAR(near_first, 200.0 * 2.0 / 3.0, 1.0);
}

TEST(MbApproximationTest, LegacyWithCertainNonExistenceIsDropped) {
    const auto w = two_cell_legacy();
    MarginalPmfs m;
    m.legacy.push_back(LegacyPmf{1.0, {0.0, 0.0}});
    m.p1 = {1.0, 1.0};
    Rng rng = make_stream(2);
    std::uint64_t next = 1;
    EXPECT_TRUE(mb_approximation(w, m, small_cfg(), rng, next).empty());
}

TEST(MbApproximationTest, NewComponentExistence) {
    AssociationWeights w;
    CellRecord c;
    c.r_new = 0.35301;
    c.spawn = true;
    c.conditional = cloud(3.0, 4);
    w.cells.push_back(c);
    MarginalPmfs m;
    m.p1 = {0.5};
    Rng rng = make_stream(3);
    std::uint64_t next = 7;
    const auto out = mb_approximation(w, m, small_cfg(), rng, next);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NEAR(out[0].r, 0.17651, 1e-5);
    EXPECT_EQ(out[0].track_id, 7u);
    EXPECT_EQ(next, 8u);
    EXPECT_EQ(out[0].spatial.size(), 200u);
}

TEST(MbApproximationTest, DeferredResamplingKeepsWeightedParticles) {
    AssociationWeights w;
    CellRecord c;
    c.r_new = 0.1;
    c.spawn = true;
    c.conditional = cloud(3.0, 4);
    w.cells.push_back(c);
    MarginalPmfs m;
    m.p1 = {0.5};
    Rng rng = make_stream(3);
    std::uint64_t next = 1;
    const auto out = mb_approximation(w, m, small_cfg(), rng, next, MbApproximationOptions{false});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].spatial.size(), 4u);
    EXPECT_NEAR(out[0].spatial.total_weight(), 1.0, 1e-12);
}

TEST(RecycleTest, Examples) {
    const auto cfg = UpdateConfig{};
    auto res = recycle({BernoulliComponent{0.05, cloud(1, 10), 1}, BernoulliComponent{0.6, cloud(2, 10), 2}}, cfg);
    ASSERT_EQ(res.kept.size(), 1u);
    EXPECT_EQ(res.kept[0].track_id, 2u);
    EXPECT_NEAR(res.phd_increment.mass(), 0.05, 1e-15);

    res = recycle({BernoulliComponent{0.2, cloud(1, 10), 1}, BernoulliComponent{0.6, cloud(2, 10), 2}}, cfg);
    EXPECT_EQ(res.kept.size(), 2u);
    EXPECT_EQ(res.phd_increment.mass(), 0.0);

    res = recycle({BernoulliComponent{0.09, cloud(1, 10), 1}, BernoulliComponent{0.01, cloud(2, 7, 3.0), 2}}, cfg);
    EXPECT_TRUE(res.kept.empty());
    EXPECT_NEAR(res.phd_increment.mass(), 0.10, 1e-15);
    EXPECT_EQ(res.phd_increment.particles.size(), 17u);
}

TEST(RecycleTest, ConservesMassAndIsIdempotent) {
    Rng rng = make_stream(4);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    std::vector<BernoulliComponent> comps;
    double low = 0.0;
    for (std::uint64_t i = 0; i < 40; ++i) {
        const double r = u(rng);
        if (r < 0.1) low += r;
        comps.push_back(BernoulliComponent{r, cloud(static_cast<double>(i), 5, 0.7), i});
    }
    const auto once = recycle(comps, UpdateConfig{});
    EXPECT_NEAR(once.phd_increment.mass(), low, 1e-9);
    const auto twice = recycle(once.kept, UpdateConfig{});
    EXPECT_EQ(twice.kept.size(), once.kept.size());
    for (std::size_t i = 0; i < once.kept.size(); ++i) EXPECT_EQ(twice.kept[i].track_id, once.kept[i].track_id);
    EXPECT_EQ(twice.phd_increment.mass(), 0.0);
}

TEST(CapPhdTest, ResamplesDownPreservingMass) {
    std::vector<Particle> ps;
    Rng gen = make_stream(5);
    std::uniform_real_distribution<double> u(0.0, 1e-5);
    for (int i = 0; i < 100000; ++i) ps.push_back(Particle{ObjectState{1, 1, 0, 0, 1}, u(gen)});
    const PoissonIntensity phd{ParticleSet(std::move(ps))};
    Rng rng = make_stream(6);
    const auto capped = cap_phd(phd, UpdateConfig{}, rng);
    EXPECT_EQ(capped.particles.size(), 50000u);
    EXPECT_NEAR(capped.mass(), phd.mass(), 1e-9 * phd.mass());

    const PoissonIntensity small{cloud(1, 10, 0.3)};
    const auto same = cap_phd(small, UpdateConfig{}, rng);
    EXPECT_EQ(same.particles, small.particles);
}

TEST(ExtractEstimatesTest, Threshold) {
    PmbState s;
    std::vector<Particle> at_p{{ObjectState{4, 5, 0.1, 0.2, 9}, 0.5}, {ObjectState{4, 5, 0.1, 0.2, 9}, 0.5}};
    s.bernoullis.push_back(BernoulliComponent{0.51, ParticleSet(at_p), 1});
    s.bernoullis.push_back(BernoulliComponent{0.49, cloud(1, 3), 2});
    const auto est = extract_estimates(s, UpdateConfig{});
    ASSERT_EQ(est.size(), 1u);
    EXPECT_EQ(est[0].track_id, 1u);
    EXPECT_DOUBLE_EQ(est[0].state.p1, 4.0);
    EXPECT_DOUBLE_EQ(est[0].state.p2, 5.0);
    EXPECT_TRUE(extract_estimates(PmbState{}, UpdateConfig{}).empty());
}

}  // namespace
}  // namespace tbd
