#include "bunching/errors.hpp"
#include "bunching/inference.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace bunching {

SmoothnessEstimate calibrate_smoothness(const Poly& density, const std::vector<Poly>& quantile_curves,
                                        const Eigen::VectorXd& rho_grid, int ell, double B_hat, double a,
                                        double b, int y_points, int x_points) {
  if (ell < 1) throw DomainError("calibration: ell must be at least 1");
  if (!(b > a)) throw DomainError("calibration: need a < b");
  if (y_points < 2 || x_points < 3) throw DomainError("calibration: grids too small");
  const Eigen::VectorXd ys = Eigen::VectorXd::LinSpaced(y_points, a, b);
  std::vector<std::complex<double>> circle(static_cast<std::size_t>(x_points));
  for (int m = 0; m < x_points; ++m)
    circle[static_cast<std::size_t>(m)] = std::polar(1.0, 2.0 * std::numbers::pi * m / x_points);

  // Trapezoid weights on the y grid.
  Eigen::VectorXd wy = Eigen::VectorXd::Constant(y_points, (b - a) / (y_points - 1));
  wy(0) *= 0.5;
  wy(y_points - 1) *= 0.5;
  double base = 0.0;
  for (int i = 0; i < y_points; ++i) base += wy(i) * std::abs(density(ys(i)));
  if (!(base > 0.0)) throw DomainError("calibration: density vanishes on the calibration region");

  SmoothnessEstimate out;
  out.rho = rho_grid;
  const auto R = rho_grid.size();
  out.beta.resize(R);
  out.delta.resize(R);
  out.bound.resize(R);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < R; ++r) {
    const double rho = rho_grid(r);
    if (!(rho >= 0.0)) throw DomainError("calibration: rho must be nonnegative");
    out.bound(r) = std::numeric_limits<double>::quiet_NaN();
    if (rho == 0.0) {
      out.beta(r) = 1.0;
      out.delta(r) = std::numeric_limits<double>::infinity();
      continue;
    }
    // Periodic trapezoid rule on x (equal weights).
    double num = 0.0;
    for (int i = 0; i < y_points; ++i) {
      double avg = 0.0;
      for (const auto& e : circle) avg += std::abs(density(std::complex<double>(ys(i)) + rho * e));
      num += wy(i) * avg / x_points;
    }
    out.beta(r) = num / base;

    double delta = 0.0;
    for (const Poly& g : quantile_curves) {
      for (int i = 0; i < y_points; ++i) {
        const double y = ys(i);
        if (g(y) - y < 0.0) continue;
        for (const auto& e : circle) delta = std::max(delta, std::abs(g(std::complex<double>(y) + rho * e) - y) / rho);
      }
    }
    out.delta(r) = delta;
    if (delta < 1.0) {
      out.bound(r) = out.beta(r) * std::pow(delta, ell) * B_hat;
      best = std::min(best, out.bound(r));
    }
  }
  if (std::isfinite(best)) {
    out.bbar = best;
  } else {
    warn("calibration failed: every rho gives delta >= 1; using bias bound 0");
    out.failed = true;
    out.bbar = 0.0;
  }
  return out;
}

SmoothnessEstimate calibrate_from_data(const Dataset& data, const StructuralModel& model,
                                       const Eigen::VectorXd& theta, const TestConfig& cfg,
                                       const Eigen::VectorXd& rho_grid) {
  cfg.validate();
  const EstimationSample sample = construct_estimation_sample(data, model, theta);
  const SieveFit f0 = fit_density_moment(sample, 0, cfg.kappa, cfg.sieve);
  const Eigen::VectorXd v = (sample.w.array() + sample.k0).matrix();
  std::vector<Poly> curves;
  for (int q = 1; q <= 19; ++q) curves.push_back(fit_conditional_quantile(sample, v, 0.05 * q, cfg.kappa));
  return calibrate_smoothness(f0.density(), curves, rho_grid, cfg.ell, sample.B_hat, sample.k0, sample.kbar1);
}

}  // namespace bunching
