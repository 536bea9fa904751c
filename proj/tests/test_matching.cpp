#include <cmpairs/dataset.hpp>
#include <cmpairs/error.hpp>
#include <cmpairs/matching.hpp>
#include <cmpairs/random.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace cmpairs {
namespace {

ClusterSummary summary(std::string id, std::vector<double> x, std::int64_t n = 1) {
    ClusterSummary s;
    s.cluster_id = std::move(id);
    s.n_total = n;
    s.n_sampled = 1;
    s.ybar = 0.0;
    s.covariates = std::move(x);
    return s;
}

std::vector<std::pair<std::string, std::string>> named_pairs(const MatchedDesign& d,
                                                              const std::vector<ClusterSummary>& s) {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t j = 0; j < d.pair_count(); ++j) {
        auto [a, b] = d.pair(j);
        out.emplace_back(s[a].cluster_id, s[b].cluster_id);
    }
    return out;
}

double within_pair_distance(const MatchedDesign& d, const std::vector<std::vector<double>>& pts) {
    double total = 0.0;
    for (std::size_t j = 0; j < d.pair_count(); ++j) {
        auto [a, b] = d.pair(j);
        double s = 0.0;
        for (std::size_t c = 0; c < pts[a].size(); ++c) s += std::pow(pts[a][c] - pts[b][c], 2);
        total += std::sqrt(s);
    }
    return total;
}

void expect_bijection(const MatchedDesign& d, std::size_t n) {
    auto p = d.permutation;
    std::sort(p.begin(), p.end());
    EXPECT_EQ(p, testing::identity_permutation(n));
}

using Pairs = std::vector<std::pair<std::string, std::string>>;

TEST(SortedMatching, AlreadySortedKeys) {
    std::vector<ClusterSummary> s{summary("a", {1}), summary("b", {2}), summary("c", {3}),
                                  summary("d", {4})};
    const auto d = pair_sorted_scalar(s, FeatureSelector::covariate(0));
    EXPECT_EQ(named_pairs(d, s), (Pairs{{"a", "b"}, {"c", "d"}}));
}

TEST(SortedMatching, UnsortedKeys) {
    std::vector<ClusterSummary> s{summary("a", {4}), summary("b", {1}), summary("c", {3}),
                                  summary("d", {2})};
    const auto d = pair_sorted_scalar(s, FeatureSelector::covariate(0));
    EXPECT_EQ(named_pairs(d, s), (Pairs{{"b", "d"}, {"c", "a"}}));
}

TEST(SortedMatching, SizeKeyMarksMatchedOnSize) {
    std::vector<ClusterSummary> s{summary("a", {0}, 9), summary("b", {0}, 2), summary("c", {0}, 4),
                                  summary("d", {0}, 8)};
    const auto d = pair_sorted_scalar(s, FeatureSelector::size_only());
    EXPECT_TRUE(d.matched_on_size);
    EXPECT_EQ(named_pairs(d, s), (Pairs{{"b", "c"}, {"d", "a"}}));
}

TEST(SortedMatching, Errors) {
    std::vector<ClusterSummary> s{summary("a", {1, 2}), summary("b", {2, 1}), summary("c", {3, 0}),
                                  summary("d", {4, 4})};
    try {
        (void)pair_sorted_scalar(s, FeatureSelector::all_covariates(2, false));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::non_scalar_key);
    }
    std::vector<ClusterSummary> two{summary("a", {1}), summary("b", {2})};
    try {
        (void)pair_sorted_scalar(two, FeatureSelector::covariate(0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::too_few_pairs);
    }
}

TEST(SortedMatching, OptimalAgainstBruteForce) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CounterRng rng(seed);
        std::vector<ClusterSummary> s;
        std::vector<std::vector<double>> pts;
        for (std::size_t i = 0; i < 6; ++i) {
            const double x = rng.normal();
            s.push_back(summary(testing::padded_id(i), {x}));
            pts.push_back({x});
        }
        const auto d = pair_sorted_scalar(s, FeatureSelector::covariate(0));
        expect_bijection(d, 6);
        EXPECT_NEAR(within_pair_distance(d, pts), testing::brute_force_min_matching(pts), 1e-12);
    }
}

TEST(GreedyMatching, NearestNeighbourExample) {
    std::vector<ClusterSummary> s{summary("a", {0}), summary("b", {10}), summary("c", {0.1}),
                                  summary("d", {10.1})};
    const auto d = pair_greedy_nn(s, FeatureSelector::covariate(0));
    auto pairs = named_pairs(d, s);
    for (auto& p : pairs) {
        if (p.first > p.second) std::swap(p.first, p.second);
    }
    std::sort(pairs.begin(), pairs.end());
    EXPECT_EQ(pairs, (Pairs{{"a", "c"}, {"b", "d"}}));
}

TEST(GreedyMatching, IdenticalClustersPairTogether) {
    std::vector<ClusterSummary> s{summary("a", {1, 5}), summary("b", {7, 2}), summary("c", {1, 5}),
                                  summary("d", {7, 2})};
    const auto d = pair_greedy_nn(s, FeatureSelector::all_covariates(2, false));
    std::vector<ClusterSummary> ordered;
    for (std::size_t j = 0; j < d.pair_count(); ++j) {
        auto [a, b] = d.pair(j);
        EXPECT_EQ(s[a].covariates, s[b].covariates);
    }
}

TEST(GreedyMatching, NoBetterThanOptimal) {
    EXPECT_EQ(testing::matching_count(8), 105u);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CounterRng rng(seed);
        std::vector<ClusterSummary> s;
        std::vector<std::vector<double>> z;
        for (std::size_t i = 0; i < 8; ++i) {
            s.push_back(summary(testing::padded_id(i), {rng.normal(), rng.normal()}));
        }
        // distances are evaluated on the z-scored scale the matcher uses
        for (std::size_t c = 0; c < 2; ++c) {
            double m = 0.0, v = 0.0;
            for (auto& e : s) m += e.covariates[c] / 8.0;
            for (auto& e : s) v += std::pow(e.covariates[c] - m, 2) / 8.0;
            for (std::size_t i = 0; i < 8; ++i) {
                if (z.size() <= i) z.emplace_back();
                z[i].push_back((s[i].covariates[c] - m) / std::sqrt(v));
            }
        }
        const auto d = pair_greedy_nn(s, FeatureSelector::all_covariates(2, false));
        expect_bijection(d, 8);
        EXPECT_GE(within_pair_distance(d, z) + 1e-12, testing::brute_force_min_matching(z));
    }
}

TEST(GreedyMatching, ZeroVarianceCoordinateIsAllowed) {
    std::vector<ClusterSummary> s{summary("a", {1, 3}), summary("b", {1, 0}), summary("c", {1, 2.9}),
                                  summary("d", {1, 0.2})};
    const auto d = pair_greedy_nn(s, FeatureSelector::all_covariates(2, false));
    auto pairs = named_pairs(d, s);
    for (auto& p : pairs) {
        if (p.first > p.second) std::swap(p.first, p.second);
    }
    std::sort(pairs.begin(), pairs.end());
    EXPECT_EQ(pairs, (Pairs{{"a", "c"}, {"b", "d"}}));
}

MatchedDesign design_of(std::vector<std::size_t> perm, FeatureSelector f) {
    MatchedDesign d;
    d.permutation = std::move(perm);
    d.method = MatchMethod::sorted_scalar;
    d.features = std::move(f);
    d.matched_on_size = d.features.include_size;
    return d;
}

TEST(PairOrdering, SortsPairsByMeanKey) {
    // pair means 5, 1, 3
    std::vector<ClusterSummary> s{summary("a", {4.5}), summary("b", {5.5}), summary("c", {0.5}),
                                  summary("d", {1.5}), summary("e", {2.5}), summary("f", {3.5})};
    const auto d = design_of({0, 1, 2, 3, 4, 5}, FeatureSelector::covariate(0));
    const auto o = order_pairs_for_variance(d, s);
    EXPECT_EQ(o.permutation, (std::vector<std::size_t>{2, 3, 4, 5, 0, 1}));
    // already sorted -> unchanged
    EXPECT_EQ(order_pairs_for_variance(o, s), o);
}

TEST(PairOrdering, PreservesMemberOrder) {
    std::vector<ClusterSummary> s{summary("a", {5.5}), summary("b", {4.5}), summary("c", {1.5}),
                                  summary("d", {0.5})};
    const auto o = order_pairs_for_variance(design_of({0, 1, 2, 3}, FeatureSelector::covariate(0)), s);
    EXPECT_EQ(o.permutation, (std::vector<std::size_t>{2, 3, 0, 1}));
}

TEST(PairOrdering, ReducesPairsOfPairsDiscrepancy) {
    // pair means 2, 9, 3, 8
    std::vector<ClusterSummary> s{summary("a", {1.9}), summary("b", {2.1}), summary("c", {8.9}),
                                  summary("d", {9.1}), summary("e", {2.9}), summary("f", {3.1}),
                                  summary("g", {7.9}), summary("h", {8.1})};
    const auto d = design_of({0, 1, 2, 3, 4, 5, 6, 7}, FeatureSelector::covariate(0));
    const auto o = order_pairs_for_variance(d, s);
    EXPECT_EQ(o.permutation, (std::vector<std::size_t>{0, 1, 4, 5, 6, 7, 2, 3}));
    const auto before = imbalance_report(d, s);
    const auto after = imbalance_report(o, s);
    for (const auto& [key, value] : after.popo_discrepancies) {
        EXPECT_LT(value, before.popo_discrepancies.at(key));
    }
}

TEST(PairOrdering, MultivariatePairsOfPairsAreClose) {
    // Two tight groups in 2-D; consecutive pairs should stay within a group.
    std::vector<ClusterSummary> s;
    const double centres[4][2] = {{0, 0}, {10, 10}, {0.2, 0.1}, {10.1, 9.9}};
    for (std::size_t p = 0; p < 4; ++p) {
        s.push_back(summary(testing::padded_id(2 * p), {centres[p][0], centres[p][1]}));
        s.push_back(summary(testing::padded_id(2 * p + 1), {centres[p][0] + 0.01, centres[p][1]}));
    }
    MatchedDesign d = design_of({0, 1, 2, 3, 4, 5, 6, 7}, FeatureSelector::all_covariates(2, false));
    d.method = MatchMethod::greedy_nn;
    const auto o = order_pairs_for_variance(d, s);
    expect_bijection(o, 8);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto a = o.permutation[4 * j];
        const auto b = o.permutation[4 * j + 2];
        EXPECT_LT(std::abs(s[a].covariates[0] - s[b].covariates[0]), 1.0);
    }
}

TEST(Imbalance, PerfectMatchIsZero) {
    std::vector<ClusterSummary> s{summary("a", {1}, 3), summary("b", {1}, 3), summary("c", {2}, 5),
                                  summary("d", {2}, 5)};
    const auto d = design_of({0, 1, 2, 3}, FeatureSelector{{0}, true});
    const auto r = imbalance_report(d, s);
    for (const auto& [k, v] : r.pair_discrepancies) EXPECT_EQ(v, 0.0);
    for (const auto& [k, v] : r.fourth_moment_sums) EXPECT_EQ(v, 0.0);
}

TEST(Imbalance, HandExamples) {
    std::vector<ClusterSummary> s{summary("a", {1}, 2), summary("b", {2}, 2), summary("c", {3}, 4),
                                  summary("d", {5}, 4)};
    const auto x_only = imbalance_report(design_of({0, 1, 2, 3}, FeatureSelector::covariate(0)), s);
    EXPECT_FALSE(x_only.matched_on_size);
    EXPECT_DOUBLE_EQ(x_only.pair_discrepancies.at({1, 0}), 1.5);
    EXPECT_DOUBLE_EQ(x_only.pair_discrepancies.at({2, 0}), 2.5);
    EXPECT_EQ(x_only.pair_discrepancies.count({1, 1}), 0u);

    const auto w = imbalance_report(design_of({0, 1, 2, 3}, FeatureSelector{{0}, true}), s);
    EXPECT_TRUE(w.matched_on_size);
    EXPECT_DOUBLE_EQ(w.pair_discrepancies.at({1, 1}), 5.0);
    EXPECT_DOUBLE_EQ(w.pair_discrepancies.at({1, 2}), (4 * 1 + 16 * 2) / 2.0);
    EXPECT_DOUBLE_EQ(w.fourth_moment_sums.at(4), (1 + 16) / 2.0);
}

TEST(Imbalance, LevelZeroEntriesIgnoreMemberOrder) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng(seed);
        std::vector<ClusterSummary> s;
        for (std::size_t i = 0; i < 10; ++i) {
            s.push_back(summary(testing::padded_id(i), {rng.normal(), rng.normal()},
                                rng.uniform_int(1, 20)));
        }
        const FeatureSelector f{{0, 1}, true};
        auto d = design_of(testing::identity_permutation(10), f);
        auto swapped = d;
        for (std::size_t j = 0; j < 5; j += 2) {
            std::swap(swapped.permutation[2 * j], swapped.permutation[2 * j + 1]);
        }
        const auto a = imbalance_report(d, s);
        const auto b = imbalance_report(swapped, s);
        for (int r = 1; r <= 2; ++r) {
            EXPECT_NEAR(a.pair_discrepancies.at({r, 0}), b.pair_discrepancies.at({r, 0}), 1e-12);
        }
        for (int r = 1; r <= 4; ++r) {
            EXPECT_NEAR(a.fourth_moment_sums.at(r), b.fourth_moment_sums.at(r), 1e-12);
        }
    }
}

TEST(Imbalance, ShrinksWithMoreClusters) {
    auto median_discrepancy = [](std::size_t G) {
        std::vector<double> values;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            CounterRng rng(seed * 7919 + G);
            std::vector<ClusterSummary> s;
            for (std::size_t i = 0; i < 2 * G; ++i) {
                s.push_back(summary(testing::padded_id(i), {rng.uniform01(), rng.uniform01()}));
            }
            const auto d = pair_greedy_nn(s, FeatureSelector::all_covariates(2, false));
            values.push_back(imbalance_report(d, s).pair_discrepancies.at({2, 0}));
        }
        std::nth_element(values.begin(), values.begin() + 25, values.end());
        return values[25];
    };
    EXPECT_LT(median_discrepancy(500), median_discrepancy(50));
}

TEST(DesignCsv, RoundTrip) {
    std::vector<ClusterSummary> s{summary("a", {4}), summary("b", {1}), summary("c", {3}),
                                  summary("d", {2})};
    const auto d = pair_sorted_scalar(s, FeatureSelector::covariate(0));
    std::ostringstream out;
    write_design_csv(out, d, s);
    EXPECT_EQ(out.str(), "pair_index,position,cluster_id\n0,0,b\n0,1,d\n1,0,c\n1,1,a\n");
    std::vector<std::string> ids{"a", "b", "c", "d"};
    std::istringstream in(out.str());
    const auto back = read_design_csv(in, ids, FeatureSelector::covariate(0));
    EXPECT_EQ(back.permutation, d.permutation);
}

TEST(DesignCsv, Errors) {
    std::vector<std::string> ids{"a", "b", "c", "d"};
    auto code_of = [&](const std::string& text) {
        std::istringstream in(text);
        try {
            (void)read_design_csv(in, ids);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::invalid_argument;
    };
    EXPECT_EQ(code_of("pair_index,position,cluster_id\n0,0,a\n0,1,b\n1,0,c\n1,1,z\n"),
              Errc::unknown_cluster);
    EXPECT_EQ(code_of("pair_index,position,cluster_id\n0,0,a\n0,1,b\n1,0,c\n1,1,a\n"),
              Errc::invalid_design);
    EXPECT_EQ(code_of("pair_index,position,cluster_id\n0,0,a\n0,1,b\n"), Errc::invalid_design);
    EXPECT_THROW(validate_design(design_of({0, 1, 1, 3}, {}), 4), Error);
}

}  // namespace
}  // namespace cmpairs
