#include "cmpairs/estimation.hpp"

#include "cmpairs/error.hpp"

namespace cmpairs {

std::string_view estimand_name(Estimand e) noexcept {
    return e == Estimand::size_weighted ? "size_weighted" : "equal_weighted";
}

PointEstimate size_weighted_kernel(std::span<const double> size, std::span<const double> ybar,
                                   std::span<const int> treatment) {
    double sum_w[2] = {0.0, 0.0};
    double sum_wy[2] = {0.0, 0.0};
    for (std::size_t g = 0; g < size.size(); ++g) {
        const int d = treatment[g];
        sum_w[d] += size[g];
        sum_wy[d] += size[g] * ybar[g];
    }
    if (sum_w[0] <= 0.0 || sum_w[1] <= 0.0) {
        throw Error(Errc::empty_arm, "both treatment arms need at least one cluster");
    }
    PointEstimate e;
    e.mu1 = sum_wy[1] / sum_w[1];
    e.mu0 = sum_wy[0] / sum_w[0];
    e.delta_hat = e.mu1 - e.mu0;
    e.n1 = sum_w[1];
    e.n0 = sum_w[0];
    e.estimand = Estimand::size_weighted;
    return e;
}

PointEstimate estimate_size_weighted(std::span<const ClusterSummary> summaries) {
    std::vector<double> size;
    std::vector<double> ybar;
    size.reserve(summaries.size());
    ybar.reserve(summaries.size());
    for (const auto& s : summaries) {
        size.push_back(static_cast<double>(s.n_total));
        ybar.push_back(s.ybar);
    }
    const std::vector<int> d = treatments_of(summaries);
    return size_weighted_kernel(size, ybar, d);
}

PointEstimate estimate_equal_weighted(std::span<const ClusterSummary> summaries) {
    const std::vector<int> d = treatments_of(summaries);
    double count[2] = {0.0, 0.0};
    double sum[2] = {0.0, 0.0};
    double total[2] = {0.0, 0.0};
    for (std::size_t g = 0; g < summaries.size(); ++g) {
        count[d[g]] += 1.0;
        sum[d[g]] += summaries[g].ybar;
        total[d[g]] += static_cast<double>(summaries[g].n_total);
    }
    if (count[0] == 0.0 || count[1] == 0.0) {
        throw Error(Errc::empty_arm, "both treatment arms need at least one cluster");
    }
    PointEstimate e;
    e.mu1 = sum[1] / count[1];
    e.mu0 = sum[0] / count[0];
    e.delta_hat = e.mu1 - e.mu0;
    e.n1 = total[1];
    e.n0 = total[0];
    e.estimand = Estimand::equal_weighted;
    return e;
}

double wls_oracle(const Dataset& dataset) {
    if (!dataset.has_treatments()) {
        throw Error(Errc::missing_treatment, "wls_oracle needs treatments");
    }
    // Normal equations of sum w (y - a - b D)^2.
    double s_w = 0.0;
    double s_wd = 0.0;
    double s_wy = 0.0;
    double s_wdy = 0.0;
    bool arm_seen[2] = {false, false};
    for (const auto& c : dataset.clusters) {
        const double w = static_cast<double>(c.n_total) / static_cast<double>(c.sampled_outcomes.size());
        const double d = static_cast<double>(*c.treatment);
        arm_seen[*c.treatment] = true;
        for (double y : c.sampled_outcomes) {
            s_w += w;
            s_wd += w * d;
            s_wy += w * y;
            s_wdy += w * d * y;
        }
    }
    if (!arm_seen[0] || !arm_seen[1]) {
        throw Error(Errc::empty_arm, "both treatment arms need at least one cluster");
    }
    // [s_w s_wd; s_wd s_wd] [a; b] = [s_wy; s_wdy]  (D^2 = D)
    const double det = s_w * s_wd - s_wd * s_wd;
    if (!(det > 0.0)) {
        throw Error(Errc::singular_design, "weighted least squares normal equations are singular");
    }
    return (s_w * s_wdy - s_wd * s_wy) / det;
}

}  // namespace cmpairs
