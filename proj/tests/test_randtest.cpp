#include <cmpairs/dataset.hpp>
#include <cmpairs/error.hpp>
#include <cmpairs/inference.hpp>
#include <cmpairs/matching.hpp>
#include <cmpairs/randtest.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace cmpairs {
namespace {

using testing::record;

MatchedDesign identity_design(std::size_t clusters) {
    MatchedDesign d;
    d.permutation = testing::identity_permutation(clusters);
    return d;
}

Errc error_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::invalid_argument;
}

// Apply a within-pair swap to the treatment labels of an identity-order design.
Dataset swap_labels(Dataset ds, std::uint64_t mask) {
    for (std::size_t j = 0; j < ds.pair_count(); ++j) {
        if ((mask >> j) & 1U) {
            auto& a = ds.clusters[2 * j].treatment;
            auto& b = ds.clusters[2 * j + 1].treatment;
            std::swap(a, b);
        }
    }
    return ds;
}

TEST(RandTest, ConstantOutcomesNeverReject) {
    auto ds = testing::random_dataset(5, 3);
    for (auto& c : ds.clusters)
        for (double& y : c.sampled_outcomes) y = 1.25;
    const auto r = randomization_test(ds, identity_design(10));
    EXPECT_EQ(r.t_obs, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
    EXPECT_FALSE(r.reject);
    EXPECT_EQ(r.draws, 32u);
}

TEST(RandTest, TwoPairEnumeration) {
    // Pair differences (3, 1): single flips give T = sqrt(4/3) * 2 / 4, the identity and the
    // full flip give sqrt(4/3) * 4 / 2. The full flip always ties the identity.
    const Dataset ds = make_dataset({record("a", 1, {3}, {}, 1), record("b", 1, {0}, {}, 0),
                                     record("c", 1, {1}, {}, 1), record("d", 1, {0}, {}, 0)});
    RandTestOptions opt;
    opt.keep_distribution = true;
    const auto r = randomization_test(ds, identity_design(4), opt);
    const double big = std::sqrt(4.0 / 3.0) * 2.0;
    const double small = std::sqrt(4.0 / 3.0) * 0.5;
    EXPECT_NEAR(r.t_obs, big, 1e-12);
    ASSERT_EQ(r.distribution.size(), 4u);
    auto dist = r.distribution;
    std::sort(dist.begin(), dist.end());
    EXPECT_NEAR(dist[0], small, 1e-12);
    EXPECT_NEAR(dist[1], small, 1e-12);
    EXPECT_NEAR(dist[2], big, 1e-12);
    EXPECT_NEAR(dist[3], big, 1e-12);
    EXPECT_EQ(r.p_value, 0.5);
    EXPECT_EQ(r.p_value, testing::sign_flip_p_value({3.0, 1.0}));
}

TEST(RandTest, StatisticMatchesNormalTest) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ds = testing::random_dataset(6, seed);
        const auto d = identity_design(12);
        EXPECT_NEAR(rand_statistic(ds, d), std::abs(infer(ds, d).z), 1e-10);
        EXPECT_NEAR(rand_statistic(ds, d, 0.4), std::abs(infer(ds, d, {.delta0 = 0.4}).z), 1e-10);
    }
}

TEST(RandTest, ExactTestIsValidByEnumeration) {
    // Under the sharp null every relabelling within pairs is equally likely.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (std::size_t pairs : {4u, 5u, 6u}) {
            const auto base = testing::random_dataset(pairs, seed * 31 + pairs);
            const auto d = identity_design(2 * pairs);
            const std::uint64_t total = std::uint64_t{1} << pairs;
            std::vector<double> ps;
            for (std::uint64_t mask = 0; mask < total; ++mask) {
                ps.push_back(randomization_test(swap_labels(base, mask), d).p_value);
            }
            for (double alpha : {0.05, 0.1, 0.2, 0.3, 0.5}) {
                const auto hits = std::count_if(ps.begin(), ps.end(), [&](double p) { return p <= alpha; });
                EXPECT_LE(static_cast<double>(hits) / static_cast<double>(total), alpha + 1e-12);
            }
        }
    }
}

TEST(RandTest, DistributionIsInvariantUnderSwaps) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ds = testing::random_dataset(5, seed);
        const auto d = identity_design(10);
        RandTestOptions opt;
        opt.keep_distribution = true;
        const auto a = randomization_test(ds, d, opt);
        const auto b = randomization_test(swap_labels(ds, 0b10110), d, opt);
        auto da = a.distribution, db = b.distribution;
        std::sort(da.begin(), da.end());
        std::sort(db.begin(), db.end());
        ASSERT_EQ(da.size(), db.size());
        for (std::size_t i = 0; i < da.size(); ++i) EXPECT_NEAR(da[i], db[i], 1e-9);
    }
}

TEST(RandTest, InvariantToMemberOrder) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ds = testing::random_dataset(6, seed);
        auto d = identity_design(12);
        const auto a = randomization_test(ds, d);
        for (std::size_t j = 0; j < 6; j += 2) std::swap(d.permutation[2 * j], d.permutation[2 * j + 1]);
        const auto b = randomization_test(ds, d);
        EXPECT_NEAR(a.t_obs, b.t_obs, 1e-10);
        EXPECT_EQ(a.p_value, b.p_value);
    }
}

TEST(RandTest, NonZeroNullMatchesShiftedData) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const double delta = 0.9;
        const auto control = testing::random_dataset(5, seed, 1, 20, true);
        Dataset observed = control;
        for (auto& c : observed.clusters)
            if (*c.treatment == 1)
                for (double& y : c.sampled_outcomes) y += delta;
        const auto d = identity_design(10);
        const auto a = randomization_test(observed, d, {.delta0 = delta});
        const auto b = randomization_test(control, d);
        EXPECT_NEAR(a.t_obs, b.t_obs, 1e-9);
        EXPECT_EQ(a.p_value, b.p_value);
    }
}

TEST(RandTest, UnitSizesMatchSignFlipReference) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t pairs = 2 + seed % 7;
        const auto ds = testing::random_dataset(pairs, seed, 1, 1, true, true);
        std::vector<double> diffs;
        for (std::size_t j = 0; j < pairs; ++j) {
            const auto& a = ds.clusters[2 * j];
            const auto& b = ds.clusters[2 * j + 1];
            const double ya = a.sampled_outcomes[0], yb = b.sampled_outcomes[0];
            diffs.push_back(*a.treatment == 1 ? ya - yb : yb - ya);
        }
        const auto r = randomization_test(ds, identity_design(2 * pairs));
        EXPECT_NEAR(r.t_obs, testing::pair_diff_statistic(diffs), 1e-10);
        EXPECT_NEAR(r.p_value, testing::sign_flip_p_value(diffs), 1e-12);
    }
}

TEST(RandTest, SwapPatternsStartWithIdentity) {
    const auto patterns = draw_swap_patterns(70, 50, 9);
    ASSERT_EQ(patterns.size(), 50u);
    EXPECT_TRUE(std::all_of(patterns[0].begin(), patterns[0].end(), [](auto b) { return b == 0; }));
    EXPECT_EQ(patterns, draw_swap_patterns(70, 50, 9));
    EXPECT_NE(patterns, draw_swap_patterns(70, 50, 10));
    std::size_t ones = 0;
    for (std::size_t i = 1; i < patterns.size(); ++i)
        for (auto b : patterns[i]) ones += b;
    EXPECT_NEAR(static_cast<double>(ones) / (49.0 * 70.0), 0.5, 0.05);
}

TEST(RandTest, StochasticCoveringAllSwapsEqualsExact) {
    const auto ds = testing::random_dataset(3, 5);
    const auto d = identity_design(6);
    const auto exact = randomization_test(ds, d);
    std::uint64_t seed = 0;
    for (;; ++seed) {
        const auto patterns = draw_swap_patterns(3, 8, seed);
        std::set<SwapPattern> distinct(patterns.begin(), patterns.end());
        if (distinct.size() == 8) {
            const auto r = randomization_test_over(ds, d, patterns, 0.05, 0.0);
            EXPECT_EQ(r.p_value, exact.p_value);
            EXPECT_EQ(r.draws, 8u);
            break;
        }
        ASSERT_LT(seed, 200'000u);
    }
}

TEST(RandTest, StochasticApproximatesExact) {
    const auto ds = testing::random_dataset(9, 17);
    const auto d = identity_design(18);
    const auto exact = randomization_test(ds, d);
    RandTestOptions opt;
    opt.mode = RandMode::stochastic;
    opt.draws = 19'999;
    opt.seed = 4;
    const auto r = randomization_test(ds, d, opt);
    EXPECT_EQ(r.draws, 19'999u);
    EXPECT_NEAR(r.p_value, exact.p_value, 0.015);
    EXPECT_EQ(r.t_obs, exact.t_obs);
}

TEST(RandTest, Errors) {
    const auto big = testing::random_dataset(21, 1);
    EXPECT_EQ(error_of([&] { (void)randomization_test(big, identity_design(42)); }),
              Errc::too_many_pairs_for_exact);
    const auto ds = testing::random_dataset(4, 1);
    RandTestOptions opt;
    opt.mode = RandMode::stochastic;
    opt.draws = 18;
    EXPECT_EQ(error_of([&] { (void)randomization_test(ds, identity_design(8), opt); }), Errc::bad_b);
    const auto unbalanced = make_dataset({record("a", 1, {3}, {}, 1), record("b", 1, {0}, {}, 1),
                                          record("c", 1, {1}, {}, 0), record("d", 1, {0}, {}, 0)});
    EXPECT_EQ(error_of([&] { (void)randomization_test(unbalanced, identity_design(4)); }),
              Errc::invalid_design);
}

}  // namespace
}  // namespace cmpairs
