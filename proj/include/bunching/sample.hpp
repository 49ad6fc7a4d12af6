#pragma once

#include "bunching/basis.hpp"
#include "bunching/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace bunching {

using CovariateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Observed microdata: running variable y, covariates (one row per unit) and
// nonnegative weights t.
struct Dataset {
  Eigen::VectorXd y;
  CovariateMatrix x;
  Eigen::VectorXd t;

  Eigen::Index size() const { return y.size(); }
  Eigen::Index covariate_dim() const { return x.cols(); }
  CovRef covariates(Eigen::Index i) const { return x.row(i).transpose(); }

  static Dataset from_y(const Eigen::VectorXd& y);
  void validate() const;
};

using WeightFn = std::function<double(CovRef x)>;

// Copy of data with t_i = weight(x_i).
Dataset with_weights(const Dataset& data, const WeightFn& weight);

struct EstimationSample {
  // Retained units i in N(theta).
  Eigen::VectorXd y0;
  Eigen::VectorXd t;
  Eigen::VectorXd w;                // R(window upper, x_i, theta) - k0
  std::vector<Eigen::Index> index;  // rows of the source data
  // Window units: source rows and weights.
  std::vector<Eigen::Index> bunch_index;
  Eigen::VectorXd bunch_t;

  double kbar1 = 0.0;
  double k0 = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double B_hat = 0.0;
  Eigen::Index n_total = 0;

  Region region() const { return {lo, k0, kbar1, hi}; }
  Eigen::Index size() const { return y0.size(); }
};

// (1/n) sum t_i 1{y_i in [k0, k1]}
double bunching_share(const Dataset& data, double k0, double k1);

// Counterfactual correction under hypothesized theta. The window upper edge is
// notch_window_upper(model, x_i, theta) (constant k1 for kink models).
EstimationSample construct_estimation_sample(const Dataset& data, const StructuralModel& model,
                                             const Eigen::VectorXd& theta,
                                             std::optional<double> kbar1_override = std::nullopt);

}  // namespace bunching
