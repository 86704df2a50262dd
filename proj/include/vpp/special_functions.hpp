#pragma once

namespace vpp::math {

/// Error function. Absolute error below 1e-15 on the whole real line:
/// a positive-term series exp(-x^2) * sum 2^n x^(2n+1) / (2n+1)!! below
/// |x| = 2.5, and the Laplace continued fraction for erfc above it.
double erf(double x);

/// Complementary error function with relative accuracy in the upper tail.
double erfc(double x);

/// Inverse of erfc on (0, 2): Newton iteration on log(erfc(x)), which is
/// concave, so the iterates converge monotonically once right of the root.
double erfc_inv(double q);

/// Inverse error function on (-1, 1).
double erf_inv(double y);

/// Standard normal CDF.
double normal_cdf(double z);

/// Standard normal quantile, -sqrt(2) * erfc_inv(2p).
double normal_quantile(double p);

}  // namespace vpp::math
