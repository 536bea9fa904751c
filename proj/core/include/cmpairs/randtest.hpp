#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cmpairs/dataset.hpp"
#include "cmpairs/inference.hpp"
#include "cmpairs/matching.hpp"

namespace cmpairs {

enum class RandMode { exact, stochastic };

std::string_view rand_mode_name(RandMode mode) noexcept;

/// Per-pair swap indicators: entry j == 1 exchanges the treatment labels of
/// the two members of pair j.
using SwapPattern = std::vector<std::uint8_t>;

/// Studentized statistic T = |sqrt(G) delta_hat / v| on one labelling.
struct StudentizedStat {
    double delta_hat = 0.0;
    VarianceEstimate variance;
    /// +infinity when the variance is clamped but delta_hat is not ~0;
    /// 0 when both are ~0.
    double t = 0.0;
};

/// Recomputes the estimate, adjusted outcomes and variance from scratch for
/// one treatment labelling.
StudentizedStat studentized_statistic(std::span<const double> size, std::span<const double> ybar,
                                      std::span<const int> treatment,
                                      std::span<const std::size_t> permutation,
                                      double floor = kVarianceFloor);

/// T on the data with outcomes shifted to Y - D_g * delta0.
double rand_statistic(const Dataset& dataset, const MatchedDesign& design, double delta0 = 0.0);

struct RandTestOptions {
    double alpha = 0.05;
    double delta0 = 0.0;
    RandMode mode = RandMode::exact;
    /// Number of stochastic draws B, identity included; at least 19.
    std::size_t draws = 999;
    std::uint64_t seed = 0;
    /// Exact enumeration is refused above this many pairs.
    std::size_t max_exact_pairs = 20;
    /// Keep T(hZ) for every draw in the result.
    bool keep_distribution = false;
    double variance_floor = kVarianceFloor;
};

struct RandTestResult {
    double t_obs = 0.0;
    double p_value = 1.0;
    RandMode mode = RandMode::exact;
    /// |H_G(pi)| = 2^G in exact mode, B in stochastic mode.
    std::size_t draws = 0;
    bool reject = false;
    double alpha = 0.05;
    double delta0 = 0.0;
    std::vector<double> distribution;
};

/// Swap pattern of stochastic draw `index` (0-based). Draw 0 is the
/// identity; draw b > 0 takes its G fair coins from CounterRng(seed, b), so
/// each draw is reproducible on its own.
SwapPattern swap_pattern(std::size_t pair_count, std::uint64_t seed, std::size_t index);

/// The B patterns used by stochastic mode, identity first.
std::vector<SwapPattern> draw_swap_patterns(std::size_t pair_count, std::size_t draws,
                                            std::uint64_t seed);

/// Within-pair randomization test. p = #{h : T(hZ) >= T(Z)} / #draws, with
/// ties judged up to a relative 1e-10; reject when p <= alpha.
/// Throws too_many_pairs_for_exact, bad_b, invalid_argument, missing_treatment.
RandTestResult randomization_test(const Dataset& dataset, const MatchedDesign& design,
                                  const RandTestOptions& options = {});

/// Same test over an explicit set of swap patterns (identity expected first).
/// Reported with mode = stochastic.
RandTestResult randomization_test_over(const Dataset& dataset, const MatchedDesign& design,
                                       std::span<const SwapPattern> patterns, double alpha,
                                       double delta0, double floor = kVarianceFloor);

}  // namespace cmpairs
