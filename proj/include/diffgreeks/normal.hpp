#pragma once

namespace diffgreeks {

/// Standard normal density.
double normal_pdf(double x) noexcept;

/// Standard normal CDF, Phi(x) = erfc(-x/sqrt 2)/2. Absolute error below 1e-15.
double normal_cdf(double x) noexcept;

/// Inverse standard normal CDF for p in (0, 1). Acklam's rational
/// approximation followed by one Halley step against normal_cdf.
double normal_quantile(double p);

}  // namespace diffgreeks
