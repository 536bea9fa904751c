#pragma once

namespace cmpairs {

/// Standard normal CDF, computed as erfc(-x / sqrt 2) / 2. The libm erfc is
/// accurate to a few ulp, well inside 1e-12 absolute.
double normal_cdf(double x) noexcept;

/// Upper tail 1 - normal_cdf(x) without cancellation for large x.
double normal_sf(double x) noexcept;

/// Standard normal quantile for p in (0, 1). Acklam's rational approximation
/// followed by one Halley step against normal_cdf.
double normal_quantile(double p);

/// CDF of |Z| for Z standard normal: Phi(t) - Phi(-t), zero for t < 0.
double half_normal_cdf(double t) noexcept;

}  // namespace cmpairs
