#include <cmpairs/normal.hpp>
#include <cmpairs/random.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace cmpairs {
namespace {

TEST(Normal, ReferenceValues) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
    EXPECT_NEAR(normal_cdf(-3.0), 0.0013498980316300946, 1e-17);
    EXPECT_NEAR(normal_sf(8.0), 6.22096057427174e-16, 1e-28);
    EXPECT_NEAR(half_normal_cdf(1.0), 0.6826894921370859, 1e-15);
}

TEST(Normal, QuantileInvertsCdf) {
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
    for (double p = 1e-10; p < 1.0; p = p < 0.01 ? p * 7 : p + 0.013) {
        EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-13 + 1e-12 * p);
    }
    EXPECT_THROW((void)normal_quantile(0.0), std::exception);
    EXPECT_THROW((void)normal_quantile(1.0), std::exception);
}

TEST(Random, DeterministicAndStreamSeparated) {
    CounterRng a(1, 2), b(1, 2), c(1, 3), d(2, 2);
    for (int i = 0; i < 10; ++i) {
        const auto x = a();
        EXPECT_EQ(x, b());
        EXPECT_NE(x, c());
        EXPECT_NE(x, d());
    }
    std::set<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 10'000; ++s) seeds.insert(derive_seed(7, s));
    EXPECT_EQ(seeds.size(), 10'000u);
}

TEST(Random, DistributionMoments) {
    CounterRng rng(42);
    const int n = 400'000;
    double su = 0, sn = 0, snn = 0, si = 0;
    int min_i = 100, max_i = -100;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        snn += z * z;
        const auto k = rng.uniform_int(-3, 5);
        si += static_cast<double>(k);
        min_i = std::min<int>(min_i, static_cast<int>(k));
        max_i = std::max<int>(max_i, static_cast<int>(k));
    }
    EXPECT_NEAR(su / n, 0.5, 0.003);
    EXPECT_NEAR(sn / n, 0.0, 0.008);
    EXPECT_NEAR(snn / n, 1.0, 0.01);
    EXPECT_NEAR(si / n, 1.0, 0.02);
    EXPECT_EQ(min_i, -3);
    EXPECT_EQ(max_i, 5);
    EXPECT_GT(rng.uniform_open0(), 0.0);
}

}  // namespace
}  // namespace cmpairs
