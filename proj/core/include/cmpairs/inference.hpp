#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cmpairs/dataset.hpp"
#include "cmpairs/estimation.hpp"
#include "cmpairs/matching.hpp"

namespace cmpairs {

inline constexpr double kVarianceFloor = 1e-12;

/// Size-rescaled, arm-centred cluster means
///   Yhat_g = (N_g / Nbar) (Ybar_g - sum_{D_j = D_g} N_j Ybar_j / sum_{D_j = D_g} N_j),
/// with Nbar the average cluster size. Within each arm the Yhat sum to zero.
struct AdjustedOutcomes {
    std::vector<double> yhat;
    double treated_mean = 0.0;
    double control_mean = 0.0;
    double nbar = 0.0;
};

AdjustedOutcomes adjusted_outcomes(std::span<const ClusterSummary> summaries);

AdjustedOutcomes adjusted_outcomes_kernel(std::span<const double> size, std::span<const double> ybar,
                                          std::span<const int> treatment);

/// Pairs-of-pairs variance estimator v2 = tau2 - lambda2 / 2.
struct VarianceEstimate {
    double tau2 = 0.0;
    double lambda2 = 0.0;
    double v2 = 0.0;
    /// v2 fell at or below the floor and was replaced by it.
    bool clamped = false;
};

/// tau2 = (1/G) sum_j (Yhat_{second} - Yhat_{first})^2 over pairs and
/// lambda2 = (2/G) sum over consecutive pairs-of-pairs (pairs 2i, 2i + 1) of
/// the product of their within-pair Yhat differences times the product of
/// their within-pair D differences. With odd G the last pair is not used by
/// lambda2. The design's pair order must already be the variance-ready order
/// (see order_pairs_for_variance). Throws too_few_pairs when G < 2.
VarianceEstimate variance_estimate(const AdjustedOutcomes& adjusted, const MatchedDesign& design,
                                   std::span<const int> treatment, double floor = kVarianceFloor);

VarianceEstimate variance_kernel(std::span<const double> yhat, std::span<const std::size_t> permutation,
                                 std::span<const int> treatment, double floor = kVarianceFloor);

struct InferenceOptions {
    double alpha = 0.05;
    double delta0 = 0.0;
    /// Compute the variance on outcomes shifted by -D_g * delta0. Because Yhat
    /// is centred within each arm, the shifted and unshifted variances agree;
    /// the flag only selects which data the estimator is evaluated on.
    bool shift_variance = true;
    double variance_floor = kVarianceFloor;
};

struct InferenceResult {
    PointEstimate estimate;
    VarianceEstimate variance;
    std::size_t pair_count = 0;
    double se = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double alpha = 0.05;
    double delta0 = 0.0;
    /// Variance was clamped: p is forced to 1 and the interval is unbounded.
    bool degenerate = false;
};

/// Plug-in normal inference from an estimate and its variance:
/// se = sqrt(v2 / G), z = (delta_hat - delta0) / se, two-sided p and a
/// 1 - alpha confidence interval.
InferenceResult normal_inference(const PointEstimate& estimate, const VarianceEstimate& variance,
                                 std::size_t pair_count, double alpha, double delta0);

/// Size-weighted estimate, pairs-of-pairs variance and the z-test of
/// Delta = delta0. Throws invalid_argument for alpha outside (0, 1).
InferenceResult infer(const Dataset& dataset, const MatchedDesign& design,
                      const InferenceOptions& options = {});

}  // namespace cmpairs
