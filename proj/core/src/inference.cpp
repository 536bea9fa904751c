#include "cmpairs/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmpairs/error.hpp"
#include "cmpairs/normal.hpp"

namespace cmpairs {

AdjustedOutcomes adjusted_outcomes_kernel(std::span<const double> size, std::span<const double> ybar,
                                          std::span<const int> treatment) {
    const PointEstimate means = size_weighted_kernel(size, ybar, treatment);
    AdjustedOutcomes out;
    out.treated_mean = means.mu1;
    out.control_mean = means.mu0;
    out.nbar = (means.n1 + means.n0) / static_cast<double>(size.size());
    out.yhat.resize(size.size());
    for (std::size_t g = 0; g < size.size(); ++g) {
        const double centre = treatment[g] == 1 ? means.mu1 : means.mu0;
        out.yhat[g] = size[g] / out.nbar * (ybar[g] - centre);
    }
    return out;
}

AdjustedOutcomes adjusted_outcomes(std::span<const ClusterSummary> summaries) {
    std::vector<double> size;
    std::vector<double> ybar;
    for (const auto& s : summaries) {
        size.push_back(static_cast<double>(s.n_total));
        ybar.push_back(s.ybar);
    }
    const std::vector<int> d = treatments_of(summaries);
    return adjusted_outcomes_kernel(size, ybar, d);
}

VarianceEstimate variance_kernel(std::span<const double> yhat, std::span<const std::size_t> permutation,
                                 std::span<const int> treatment, double floor) {
    const std::size_t G = permutation.size() / 2;
    if (G < 2) {
        throw Error(Errc::too_few_pairs, "the pairs-of-pairs variance estimator needs G >= 2");
    }
    double tau = 0.0;
    for (std::size_t j = 0; j < G; ++j) {
        const double diff = yhat[permutation[2 * j + 1]] - yhat[permutation[2 * j]];
        tau += diff * diff;
    }
    double lambda = 0.0;
    for (std::size_t j = 0; j + 1 < G; j += 2) {
        const std::size_t a = permutation[2 * j];
        const std::size_t b = permutation[2 * j + 1];
        const std::size_t c = permutation[2 * j + 2];
        const std::size_t d = permutation[2 * j + 3];
        lambda += (yhat[a] - yhat[b]) * (yhat[c] - yhat[d]) *
                  static_cast<double>(treatment[a] - treatment[b]) *
                  static_cast<double>(treatment[c] - treatment[d]);
    }
    VarianceEstimate v;
    v.tau2 = tau / static_cast<double>(G);
    v.lambda2 = 2.0 * lambda / static_cast<double>(G);
    v.v2 = v.tau2 - 0.5 * v.lambda2;
    if (v.v2 <= floor) {
        v.v2 = floor;
        v.clamped = true;
    }
    return v;
}

VarianceEstimate variance_estimate(const AdjustedOutcomes& adjusted, const MatchedDesign& design,
                                   std::span<const int> treatment, double floor) {
    validate_design(design, adjusted.yhat.size());
    if (treatment.size() != adjusted.yhat.size()) {
        throw Error(Errc::invalid_argument, "treatment vector length does not match cluster count");
    }
    return variance_kernel(adjusted.yhat, design.permutation, treatment, floor);
}

InferenceResult normal_inference(const PointEstimate& estimate, const VarianceEstimate& variance,
                                 std::size_t pair_count, double alpha, double delta0) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
    }
    InferenceResult r;
    r.estimate = estimate;
    r.variance = variance;
    r.pair_count = pair_count;
    r.alpha = alpha;
    r.delta0 = delta0;
    r.se = std::sqrt(variance.v2 / static_cast<double>(pair_count));
    if (variance.clamped) {
        r.degenerate = true;
        r.z = 0.0;
        r.p_value = 1.0;
        r.ci_low = -std::numeric_limits<double>::infinity();
        r.ci_high = std::numeric_limits<double>::infinity();
        return r;
    }
    r.z = (estimate.delta_hat - delta0) / r.se;
    r.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(r.z)));
    const double q = normal_quantile(1.0 - alpha / 2.0);
    r.ci_low = estimate.delta_hat - q * r.se;
    r.ci_high = estimate.delta_hat + q * r.se;
    return r;
}

InferenceResult infer(const Dataset& dataset, const MatchedDesign& design,
                      const InferenceOptions& options) {
    if (!dataset.has_treatments()) {
        throw Error(Errc::missing_treatment, "inference needs treatments for every cluster");
    }
    validate_design(design, dataset.cluster_count());
    const auto summaries = summarize(dataset);
    const std::vector<int> d = treatments_of(summaries);

    std::vector<double> size;
    std::vector<double> ybar;
    std::vector<double> shifted;
    for (std::size_t g = 0; g < summaries.size(); ++g) {
        size.push_back(static_cast<double>(summaries[g].n_total));
        ybar.push_back(summaries[g].ybar);
        shifted.push_back(summaries[g].ybar - options.delta0 * d[g]);
    }

    const PointEstimate estimate = size_weighted_kernel(size, ybar, d);
    const AdjustedOutcomes adjusted =
        adjusted_outcomes_kernel(size, options.shift_variance ? shifted : ybar, d);
    const VarianceEstimate variance =
        variance_kernel(adjusted.yhat, design.permutation, d, options.variance_floor);
    return normal_inference(estimate, variance, dataset.pair_count(), options.alpha, options.delta0);
}

}  // namespace cmpairs
