#pragma once

#include "bunching/basis.hpp"
#include "bunching/sample.hpp"

#include <Eigen/Dense>

#include <memory>

namespace bunching {

struct SieveOptions {
  double c3 = 20.0;          // box level sup|log f| <= c3 * max(j, 1), checked after the fit
  double grad_tol = 1e-10;   // sup-norm of the gradient in the orthonormal basis
  int max_iter = 200;
  int grid_points = 512;     // positivity grid over S
};

struct SieveFit {
  int j = 0;
  int kappa = 0;
  std::shared_ptr<const OrthoBasis> basis;
  Region S;
  Eigen::VectorXd coef;     // orthonormal-basis coefficients c
  Eigen::VectorXd gamma;    // monomial coefficients in (y - k0): slot m is (y-k0)^{m}
  Eigen::VectorXd fitted;   // f_hat at the sample points
  Eigen::VectorXd a;        // t_i w_i^j
  Eigen::Index n_total = 0;
  double log_bound = 0.0;
  bool box_ok = true;
  bool converged = false;
  int iterations = 0;
  double foc_residual = 0.0;        // monomial coordinates
  double foc_residual_ortho = 0.0;  // orthonormal coordinates
  double objective = 0.0;

  Poly density() const { return basis->polynomial(coef); }
};

// Maximizes (1/n) sum_{i in N} a_i log(z'g) - (int_S z)'g with a_i = t_i w_i^j.
SieveFit fit_density_moment(const EstimationSample& sample, int j, int kappa,
                            const SieveOptions& opt = {});

// Same with explicit per-unit weights a_i >= 0 on the points y.
SieveFit fit_weighted_density(const Eigen::VectorXd& y, const Eigen::VectorXd& a, Eigen::Index n_total,
                              const Region& S, double k0, double lo, double hi, int kappa, int j,
                              const SieveOptions& opt = {});

// Per-unit influence vectors in monomial coordinates (rows i in N).
struct InfluenceSet {
  Eigen::MatrixXd nu;        // |N| x kappa
  Eigen::MatrixXd nu_ortho;  // |N| x kappa
};

InfluenceSet influence_vectors(const SieveFit& fit, const Eigen::VectorXd& y);

// Component m (0-based monomial slot) of the influence vectors, without forming all of them.
Eigen::VectorXd influence_component(const SieveFit& fit, const Eigen::VectorXd& y, int slot);

// Weighted least squares of v on z with weights t over the sample points.
struct ConditionalMomentFit {
  std::shared_ptr<const OrthoBasis> basis;
  Eigen::VectorXd coef;      // orthonormal coefficients
  Eigen::VectorXd gamma;     // monomial coefficients in (y - k0)
  Eigen::VectorXd residuals;
  Eigen::MatrixXd gram_inv;  // ((1/n) sum t o o')^{-1} in orthonormal coordinates
  Eigen::Index n_total = 0;

  Poly polynomial() const { return Poly(basis->k0(), gamma); }
  // D^order m_hat(k0)
  double derivative_at_k0(int order) const { return polynomial().derivative_at(basis->k0(), order); }
  // Per-unit influence of the orthonormal coefficients: rows (G^{-1} t_i o_i r_i)'.
  Eigen::MatrixXd influence(const Eigen::VectorXd& y, const Eigen::VectorXd& t) const;
};

ConditionalMomentFit fit_conditional_moment(const EstimationSample& sample, const Eigen::VectorXd& values,
                                            int kappa);
// Regressand w^j.
ConditionalMomentFit fit_conditional_moment(const EstimationSample& sample, int j, int kappa);

// Polynomial sieve quantile regression of v on y0 with weights t (IRLS on the
// check loss); returns monomial coefficients around k0.
Poly fit_conditional_quantile(const EstimationSample& sample, const Eigen::VectorXd& values, double tau,
                              int kappa);

}  // namespace bunching
