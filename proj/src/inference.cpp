#include "bunching/inference.hpp"

#include "bunching/basis.hpp"
#include "bunching/errors.hpp"
#include "bunching/parallel.hpp"

#include <cmath>
#include <sstream>

namespace bunching {

void TestConfig::validate() const {
  if (kappa < 1) throw DomainError("kappa must be at least 1");
  if (ell < 1 || ell > kappa) throw DomainError("ell must satisfy 1 <= ell <= kappa");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (!(bias_bound >= 0.0)) throw DomainError("bias bound must be nonnegative");
  if (!(effective_n >= 0.0)) throw DomainError("effective_n must be nonnegative");
}

MomentEstimate estimate_bunching_moment(const Dataset& data, const StructuralModel& model,
                                        const Eigen::VectorXd& theta, const TestConfig& cfg) {
  cfg.validate();
  const EstimationSample sample = construct_estimation_sample(data, model, theta);
  MomentEstimate out;
  out.n = sample.n_total;
  out.n_retained = sample.size();
  out.B_hat = sample.B_hat;
  out.kbar1 = sample.kbar1;
  if (sample.size() == 0) throw DataError("estimation sample is empty at this theta");

  BasisSpec spec{cfg.kappa, sample.k0, sample.lo, sample.hi, sample.region()};
  out.chi_inv = 1.0 / extrapolation_norm(spec);

  out.s = Eigen::VectorXd::Zero(out.n);
  for (std::size_t b = 0; b < sample.bunch_index.size(); ++b)
    out.s(sample.bunch_index[b]) = sample.bunch_t(static_cast<Eigen::Index>(b));

  out.gamma_jj.resize(cfg.ell);
  Eigen::VectorXd sN = Eigen::VectorXd::Zero(sample.size());
  double mu = sample.B_hat;
  for (int j = 1; j <= cfg.ell; ++j) {
    const SieveFit fit = fit_density_moment(sample, j, cfg.kappa, cfg.sieve);
    out.box_ok = out.box_ok && fit.box_ok;
    out.gamma_jj(j - 1) = fit.gamma(j - 1);
    mu -= fit.gamma(j - 1) / j;
    sN -= influence_component(fit, sample.y0, j - 1) / j;
  }
  for (Eigen::Index i = 0; i < sample.size(); ++i) out.s(sample.index[static_cast<std::size_t>(i)]) = sN(i);
  out.mu_hat = mu;
  return out;
}

TestResult point_test_statistic(const Dataset& data, const StructuralModel& model, const Eigen::VectorXd& theta,
                                const TestConfig& cfg) {
  const MomentEstimate m = estimate_bunching_moment(data, model, theta, cfg);
  TestResult r;
  r.mu_hat = m.mu_hat;
  r.B_hat = m.B_hat;
  r.kbar1 = m.kbar1;
  r.chi_inv = m.chi_inv;
  r.n = m.n;
  r.n_retained = m.n_retained;
  r.gamma_jj = m.gamma_jj;
  r.bias_bound = cfg.bias_bound;
  const double n = static_cast<double>(m.n);
  const double var = m.s.squaredNorm() / n;
  if (!(var >= 1e-12)) {
    std::ostringstream os;
    os << "influence variance " << var << " is below the floor 1e-12";
    throw NumericalError(os.str());
  }
  r.sigma_hat = std::sqrt(var);
  const double n_eff = cfg.effective_n > 0.0 ? cfg.effective_n : n;
  r.stat = std::abs(std::sqrt(n_eff) * r.mu_hat / r.sigma_hat);
  r.cv = bias_aware_cv(cfg.alpha, std::sqrt(n_eff) * cfg.bias_bound / r.sigma_hat);
  r.reject = r.stat >= r.cv;
  return r;
}

std::vector<std::pair<double, double>> accepted_intervals(const std::vector<GridPoint>& points) {
  std::vector<std::pair<double, double>> out;
  bool open = false;
  double start = 0.0, last = 0.0;
  for (const GridPoint& p : points) {
    if (p.ok && p.accepted) {
      if (!open) start = p.theta;
      open = true;
      last = p.theta;
    } else if (open) {
      out.emplace_back(start, last);
      open = false;
    }
  }
  if (open) out.emplace_back(start, last);
  return out;
}

ConfidenceSet confidence_set(const Dataset& data, const StructuralModel& model, const std::vector<double>& grid,
                             const TestConfig& cfg, const Eigen::VectorXd& rest, int workers) {
  if (grid.empty()) throw DomainError("confidence set: empty theta grid");
  cfg.validate();
  ConfidenceSet cs;
  cs.points.resize(grid.size());
  parallel_for(
      grid.size(),
      [&](std::size_t g) {
        GridPoint& p = cs.points[g];
        p.theta = grid[g];
        Eigen::VectorXd theta(1 + rest.size());
        theta(0) = grid[g];
        if (rest.size() > 0) theta.tail(rest.size()) = rest;
        try {
          const TestResult r = point_test_statistic(data, model, theta, cfg);
          p.ok = true;
          p.stat = r.stat;
          p.cv = r.cv;
          p.mu_hat = r.mu_hat;
          p.sigma_hat = r.sigma_hat;
          p.chi_inv = r.chi_inv;
          p.chi_flag = r.chi_inv > cfg.chi_flag_strong ? 2 : (r.chi_inv > cfg.chi_flag ? 1 : 0);
          p.accepted = r.stat < r.cv;
        } catch (const std::exception& e) {
          p.ok = false;
          p.error = e.what();
        }
      },
      workers);
  cs.intervals = accepted_intervals(cs.points);
  return cs;
}

WaldResult wald_joint_test(const Dataset& data, const StructuralModel& model, const Eigen::VectorXd& theta,
                           const std::vector<WeightFn>& weights, const TestConfig& cfg) {
  if (weights.empty()) throw DomainError("Wald test needs at least one weight function");
  if (static_cast<int>(weights.size()) < model.theta_dim())
    throw DomainError("Wald test needs at least as many moments as parameters");
  const auto q = static_cast<Eigen::Index>(weights.size());
  WaldResult out;
  out.mu_hat.resize(q);
  Eigen::MatrixXd S(data.size(), q);
  for (Eigen::Index m = 0; m < q; ++m) {
    const Dataset dm = with_weights(data, weights[static_cast<std::size_t>(m)]);
    const MomentEstimate e = estimate_bunching_moment(dm, model, theta, cfg);
    out.mu_hat(m) = e.mu_hat;
    S.col(m) = e.s;
  }
  const double n = static_cast<double>(data.size());
  out.V = S.transpose() * S / n;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(out.V);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, out.V.trace()))
    throw NumericalError("Wald test: stacked influence covariance is singular");
  out.stat = n * out.mu_hat.dot(ldlt.solve(out.mu_hat));
  out.df = static_cast<int>(q);
  out.cv = chi2_quantile(1.0 - cfg.alpha, out.df);
  out.reject = out.stat > out.cv;
  return out;
}

}  // namespace bunching
