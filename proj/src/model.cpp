#include "bunching/model.hpp"

#include "bunching/errors.hpp"

#include <cmath>
#include <sstream>

namespace bunching {

void PolicySpec::validate() const {
  std::ostringstream err;
  if (!(tau0 >= 0.0 && tau0 < 1.0 && tau1 >= 0.0 && tau1 < 1.0)) err << "tax rates must lie in [0,1); ";
  if (!(tau0 < tau1)) err << "tau0 < tau1 required; ";
  if (!(k0 <= k && k <= k1)) err << "window must satisfy k0 <= k <= k1; ";
  if (!(support_lo < k0 && k1 < support_hi)) err << "support must strictly contain the window; ";
  if (!err.str().empty()) throw DomainError("invalid policy: " + err.str());
}

double PolicySpec::log_ratio() const { return std::log((1.0 - tau0) / (1.0 - tau1)); }

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Isoelastic: return "isoelastic";
    case ModelKind::AugmentedIsoelastic: return "augmented";
    case ModelKind::NotchIsoelastic: return "notch";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "isoelastic") return ModelKind::Isoelastic;
  if (name == "augmented") return ModelKind::AugmentedIsoelastic;
  if (name == "notch") return ModelKind::NotchIsoelastic;
  throw DataError("unknown model kind '" + name + "' (expected isoelastic, augmented or notch)");
}

StructuralModel StructuralModel::isoelastic(const PolicySpec& p) {
  p.validate();
  StructuralModel m;
  m.policy = p;
  return m;
}

StructuralModel StructuralModel::augmented(const PolicySpec& p) {
  StructuralModel m = isoelastic(p);
  m.kind = ModelKind::AugmentedIsoelastic;
  return m;
}

StructuralModel StructuralModel::notch(const PolicySpec& p, double notch_size, double eps_bar) {
  StructuralModel m = isoelastic(p);
  if (notch_size < 0.0) throw DomainError("notch size must be nonnegative");
  if (eps_bar < 0.0) throw DomainError("notch friction offset must be nonnegative");
  m.kind = ModelKind::NotchIsoelastic;
  m.notch_size = notch_size;
  m.eps_bar = eps_bar;
  return m;
}

void check_admissible(const StructuralModel& m, const Eigen::VectorXd& theta) {
  if (theta.size() != m.theta_dim()) {
    std::ostringstream os;
    os << to_string(m.kind) << " model expects " << m.theta_dim() << " parameter(s), got " << theta.size();
    throw DomainError(os.str());
  }
  if (!std::isfinite(theta(0)) || theta(0) < 0.0) throw DomainError("theta must be finite and nonnegative");
  if (m.kind == ModelKind::AugmentedIsoelastic) {
    if (!(std::abs(theta(1)) < theta(0))) throw DomainError("augmented model requires |omega| < theta");
  }
  if (m.kind == ModelKind::NotchIsoelastic && !(theta(0) > 0.0))
    throw DomainError("notch model requires theta > 0");
}

double elasticity(const StructuralModel& m, CovRef x, const Eigen::VectorXd& theta) {
  check_admissible(m, theta);
  if (m.kind != ModelKind::AugmentedIsoelastic) return theta(0);
  if (x.size() < 1) throw DataError("augmented model needs a covariate column");
  return theta(0) + theta(1) * x(0);
}

double counterfactual_choice(const StructuralModel& m, int d, CovRef x, double eta,
                             const Eigen::VectorXd& theta) {
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  const double e = elasticity(m, x, theta);
  const double tau = d == 0 ? m.policy.tau0 : m.policy.tau1;
  return std::pow(1.0 - tau, e) * eta;
}

double utility(const StructuralModel& m, int d, double y, double eta, double e) {
  const PolicySpec& p = m.policy;
  const double tau = d == 0 ? p.tau0 : p.tau1;
  const double liability = d == 1 ? m.notch_size : 0.0;
  const double cost = e > 0.0 ? eta / (1.0 + 1.0 / e) * std::pow(y / eta, 1.0 + 1.0 / e) : 0.0;
  return (1.0 - tau) * (y - p.k) - liability - cost;
}

double counterfactual_value(const StructuralModel& m, int d, CovRef x, double eta,
                            const Eigen::VectorXd& theta) {
  const double e = elasticity(m, x, theta);
  const double y = counterfactual_choice(m, d, x, eta, theta);
  const double yc = d == 0 ? std::min(y, m.policy.k) : std::max(y, m.policy.k);
  return utility(m, d, yc, eta, e);
}

double actual_choice(const StructuralModel& m, CovRef x, double eta, const Eigen::VectorXd& theta) {
  const double y0 = counterfactual_choice(m, 0, x, eta, theta);
  const double y1 = counterfactual_choice(m, 1, x, eta, theta);
  const double k = m.policy.k;
  if (y0 < k) return y0;
  if (!m.is_notch()) return y1 > k ? y1 : k;
  // Ties go to the lower choice.
  const double v0 = counterfactual_value(m, 0, x, eta, theta);
  const double v1 = counterfactual_value(m, 1, x, eta, theta);
  return v1 > v0 ? y1 : k;
}

double reversion(const StructuralModel& m, double y, CovRef x, const Eigen::VectorXd& theta) {
  const double e = elasticity(m, x, theta);
  return std::exp(e * m.policy.log_ratio()) * y;
}

double inverse_reversion(const StructuralModel& m, double y0, CovRef x, const Eigen::VectorXd& theta) {
  const double e = elasticity(m, x, theta);
  return std::exp(-e * m.policy.log_ratio()) * y0;
}

double marginal_buncher(const StructuralModel& m, CovRef x, const Eigen::VectorXd& theta) {
  const double e = elasticity(m, x, theta);
  const PolicySpec& p = m.policy;
  // At eta_lo the policy-1 optimum sits exactly at k, so v1 <= v0 there.
  const double eta_lo = p.k * std::pow(1.0 - p.tau1, -e);
  auto gap = [&](double eta) {
    return counterfactual_value(m, 1, x, eta, theta) - counterfactual_value(m, 0, x, eta, theta);
  };
  if (gap(eta_lo) > 0.0) throw NumericalError("marginal buncher: v1 > v0 at the lower bracket");
  if (m.notch_size == 0.0) return eta_lo;
  double hi = std::max(2.0 * eta_lo, p.support_hi * std::pow(1.0 - p.tau1, -e));
  int expansions = 0;
  while (gap(hi) <= 0.0) {
    hi *= 2.0;
    if (++expansions > 60) {
      std::ostringstream os;
      os << "marginal buncher: no sign change of v1 - v0 on [" << eta_lo << ", " << hi
         << "] (theta(x) = " << e << ", notch = " << m.notch_size << ")";
      throw NumericalError(os.str());
    }
  }
  double lo = eta_lo;
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

double notch_window_upper(const StructuralModel& m, CovRef x, const Eigen::VectorXd& theta) {
  if (!m.is_notch()) return m.policy.k1;
  const double H = marginal_buncher(m, x, theta);
  return counterfactual_choice(m, 1, x, H, theta) + m.eps_bar;
}

}  // namespace bunching
