#pragma once

namespace bunching {

double normal_cdf(double x);
// Inverse of normal_cdf by bisection.
double normal_quantile(double p);

// Chi-square CDF and quantile for integer degrees of freedom >= 1.
double chi2_cdf(double x, int df);
double chi2_quantile(double p, int df);

// Unique c >= 0 with Phi(c - b) - Phi(-c - b) = 1 - alpha, i.e. the
// (1 - alpha) quantile of |N(b, 1)|.
double bias_aware_cv(double alpha, double b);

}  // namespace bunching
