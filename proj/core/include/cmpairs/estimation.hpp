#pragma once

#include <span>
#include <string_view>

#include "cmpairs/dataset.hpp"

namespace cmpairs {

enum class Estimand { size_weighted, equal_weighted };

std::string_view estimand_name(Estimand e) noexcept;

struct PointEstimate {
    double delta_hat = 0.0;
    double mu1 = 0.0;
    double mu0 = 0.0;
    /// Total size N(d) of each arm.
    double n1 = 0.0;
    double n0 = 0.0;
    Estimand estimand = Estimand::size_weighted;
};

/// Size-weighted difference in means: mu(d) = sum_{D=d} N_g Ybar_g / N(d).
/// Throws missing_treatment or empty_arm.
PointEstimate estimate_size_weighted(std::span<const ClusterSummary> summaries);

/// Equal-weighted difference of arm means of Ybar_g.
PointEstimate estimate_equal_weighted(std::span<const ClusterSummary> summaries);

/// Coefficient on D from weighted least squares of unit outcomes Y_{i,g} on
/// (1, D_g) with weight N_g / |S_g| on each squared residual, solved from the
/// 2x2 normal equations over unit rows.
double wls_oracle(const Dataset& dataset);

/// Array kernel behind estimate_size_weighted: arm means of ybar weighted by
/// size. Inputs are parallel arrays; treatment entries are 0 or 1.
PointEstimate size_weighted_kernel(std::span<const double> size, std::span<const double> ybar,
                                   std::span<const int> treatment);

}  // namespace cmpairs
