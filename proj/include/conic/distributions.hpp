#pragma once

namespace conic {

/// CDF of the F(d1, d2) distribution.
double f_cdf(int d1, int d2, double x);

/// Inverse CDF of F(d1, d2), q in (0, 1).
double f_quantile(int d1, int d2, double q);

}  // namespace conic
