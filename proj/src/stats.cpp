#include "bunching/stats.hpp"

#include "bunching/errors.hpp"

#include <cmath>
#include <numbers>

namespace bunching {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

template <typename F>
double bisect_increasing(F f, double target, double lo, double hi, double tol) {
  while (f(hi) < target) hi *= 2.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
  if (p < 0.5) return -normal_quantile(1.0 - p);
  return bisect_increasing(normal_cdf, p, 0.0, 8.0, 1e-13);
}

double chi2_cdf(double x, int df) {
  if (df < 1) throw DomainError("chi2_cdf: df must be at least 1");
  if (x <= 0.0) return 0.0;
  const double h = 0.5 * x;
  // P(df + 2) = P(df) - h^{df/2} e^{-h} / Gamma(df/2 + 1)
  double P;
  int d;
  if (df % 2 == 0) {
    P = 1.0 - std::exp(-h);
    d = 2;
  } else {
    P = std::erf(std::sqrt(h));
    d = 1;
  }
  for (; d < df; d += 2) P -= std::exp(0.5 * d * std::log(h) - h - std::lgamma(0.5 * d + 1.0));
  return P;
}

double chi2_quantile(double p, int df) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chi2_quantile: p must lie in (0,1)");
  return bisect_increasing([df](double x) { return chi2_cdf(x, df); }, p, 0.0, df + 10.0, 1e-12);
}

double bias_aware_cv(double alpha, double b) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("bias_aware_cv: alpha must lie in (0,1)");
  if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("bias_aware_cv: b must be finite and nonnegative");
  auto coverage = [b](double c) { return normal_cdf(c - b) - normal_cdf(-c - b); };
  return bisect_increasing(coverage, 1.0 - alpha, 0.0, b + 10.0, 1e-10);
}

}  // namespace bunching
