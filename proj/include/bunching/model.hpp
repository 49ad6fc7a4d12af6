#pragma once

#include <Eigen/Dense>

#include <string>

namespace bunching {

using CovRef = Eigen::Ref<const Eigen::VectorXd>;

// Two-bracket schedule with marginal rates tau0 below and tau1 above the
// cutoff k, the friction window [k0, k1] and the support of Y(0).
struct PolicySpec {
  double tau0 = 0.0;
  double tau1 = 0.2;
  double k = 2.0;
  double k0 = 1.7;
  double k1 = 2.3;
  double support_lo = 0.0;
  double support_hi = 8.0;
  // When set, support_hi truncates the observed Y instead of Y(0); the Y(0)
  // bound of the estimation sample becomes min_i R(support_hi, x_i, theta).
  bool observed_upper = false;

  void validate() const;
  // log((1 - tau0) / (1 - tau1))
  double log_ratio() const;
};

enum class ModelKind { Isoelastic, AugmentedIsoelastic, NotchIsoelastic };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Parameter vector layout:
//   Isoelastic, NotchIsoelastic: (theta)
//   AugmentedIsoelastic:          (theta, omega), elasticity theta + omega * x(0)
struct StructuralModel {
  ModelKind kind = ModelKind::Isoelastic;
  PolicySpec policy;
  // Notch only: lump-sum liability above k and the friction offset added to
  // the marginal buncher's choice.
  double notch_size = 0.0;
  double eps_bar = 0.0;

  static StructuralModel isoelastic(const PolicySpec& p);
  static StructuralModel augmented(const PolicySpec& p);
  static StructuralModel notch(const PolicySpec& p, double notch_size, double eps_bar);

  int theta_dim() const { return kind == ModelKind::AugmentedIsoelastic ? 2 : 1; }
  bool is_notch() const { return kind == ModelKind::NotchIsoelastic; }
};

// Elasticity at covariate x; throws DomainError for inadmissible theta.
double elasticity(const StructuralModel& m, CovRef x, const Eigen::VectorXd& theta);
void check_admissible(const StructuralModel& m, const Eigen::VectorXd& theta);

// m(d, x, eta, theta) = (1 - tau_d)^{theta(x)} eta
double counterfactual_choice(const StructuralModel& m, int d, CovRef x, double eta,
                             const Eigen::VectorXd& theta);

// Value v(d, x, eta, theta) of the best choice under policy d restricted to its
// side of the cutoff (notch design). For kink models this is the same object
// with zero liability.
double counterfactual_value(const StructuralModel& m, int d, CovRef x, double eta,
                            const Eigen::VectorXd& theta);

// Utility U_d(y) of the isoelastic quasi-linear payoff.
double utility(const StructuralModel& m, int d, double y, double eta, double elasticity);

double actual_choice(const StructuralModel& m, CovRef x, double eta, const Eigen::VectorXd& theta);

// R(y, x, theta) = ((1 - tau0) / (1 - tau1))^{theta(x)} y
double reversion(const StructuralModel& m, double y, CovRef x, const Eigen::VectorXd& theta);
double inverse_reversion(const StructuralModel& m, double y0, CovRef x,
                         const Eigen::VectorXd& theta);

// eta of the marginal buncher, solving v(1) = v(0) by bisection.
double marginal_buncher(const StructuralModel& m, CovRef x, const Eigen::VectorXd& theta);

// Upper edge of the bunching window: k1 for kinks, K(x, theta) + eps_bar for notches.
double notch_window_upper(const StructuralModel& m, CovRef x, const Eigen::VectorXd& theta);

// Convenience for scalar theta.
inline Eigen::VectorXd theta_vec(double theta) { return Eigen::VectorXd::Constant(1, theta); }
inline Eigen::VectorXd theta_vec(double theta, double omega) {
  Eigen::VectorXd v(2);
  v << theta, omega;
  return v;
}

}  // namespace bunching
