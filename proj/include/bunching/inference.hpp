#pragma once

#include "bunching/model.hpp"
#include "bunching/poly.hpp"
#include "bunching/sample.hpp"
#include "bunching/sieve.hpp"
#include "bunching/stats.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace bunching {

struct TestConfig {
  int kappa = 10;
  int ell = 5;
  double alpha = 0.05;
  double bias_bound = 0.0;  // b_bar, in bunching-mass units
  SieveOptions sieve;
  double chi_flag = 20.0;         // report threshold on 1/chi
  double chi_flag_strong = 45.0;
  // Sample size used in sqrt(n) mu_hat / sigma_hat; 0 means the data size.
  // Set it when the data are resampled at a multiple of the original size.
  double effective_n = 0.0;

  void validate() const;
};

// mu_hat and its per-unit influence terms for one weight function (the t
// column of the data).
struct MomentEstimate {
  double B_hat = 0.0;
  double mu_hat = 0.0;
  Eigen::VectorXd s;         // length n; t_i for window units, -sum_j nu_{ij,j}/j for i in N, 0 otherwise
  Eigen::VectorXd gamma_jj;  // gamma_hat_{kappa j, j}, j = 1..ell
  double kbar1 = 0.0;
  double chi_inv = 0.0;
  Eigen::Index n = 0;
  Eigen::Index n_retained = 0;
  bool box_ok = true;
};

MomentEstimate estimate_bunching_moment(const Dataset& data, const StructuralModel& model,
                                        const Eigen::VectorXd& theta, const TestConfig& cfg);

struct TestResult {
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double stat = 0.0;
  double cv = 0.0;
  bool reject = false;
  double B_hat = 0.0;
  double bias_bound = 0.0;
  double kbar1 = 0.0;
  double chi_inv = 0.0;
  Eigen::Index n = 0;
  Eigen::Index n_retained = 0;
  Eigen::VectorXd gamma_jj;
};

TestResult point_test_statistic(const Dataset& data, const StructuralModel& model, const Eigen::VectorXd& theta,
                                const TestConfig& cfg);

struct GridPoint {
  double theta = 0.0;
  bool ok = false;        // false: estimation failed (reported as NA)
  std::string error;
  double stat = 0.0;
  double cv = 0.0;
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double chi_inv = 0.0;
  int chi_flag = 0;       // 0 none, 1 above chi_flag, 2 above chi_flag_strong
  bool accepted = false;
};

struct ConfidenceSet {
  std::vector<GridPoint> points;
  std::vector<std::pair<double, double>> intervals;  // maximal runs of accepted grid points
};

// Inverts the test over a grid of the first parameter; remaining components
// (e.g. omega for the augmented model) are held at `rest`.
ConfidenceSet confidence_set(const Dataset& data, const StructuralModel& model, const std::vector<double>& grid,
                             const TestConfig& cfg, const Eigen::VectorXd& rest = Eigen::VectorXd(),
                             int workers = 0);

std::vector<std::pair<double, double>> accepted_intervals(const std::vector<GridPoint>& points);

struct WaldResult {
  double stat = 0.0;
  int df = 0;
  double cv = 0.0;
  bool reject = false;
  Eigen::VectorXd mu_hat;
  Eigen::MatrixXd V;
};

// Joint test stacking one bunching moment per weight function.
WaldResult wald_joint_test(const Dataset& data, const StructuralModel& model, const Eigen::VectorXd& theta,
                           const std::vector<WeightFn>& weights, const TestConfig& cfg);

struct SmoothnessEstimate {
  Eigen::VectorXd rho;
  Eigen::VectorXd beta;
  Eigen::VectorXd delta;
  Eigen::VectorXd bound;  // beta delta^ell B_hat, NaN where discarded
  double bbar = 0.0;
  bool failed = false;
};

// Smoothness constants on [a, b] from a fitted density and a family of
// fitted conditional-quantile curves.
SmoothnessEstimate calibrate_smoothness(const Poly& density, const std::vector<Poly>& quantile_curves,
                                        const Eigen::VectorXd& rho_grid, int ell, double B_hat, double a,
                                        double b, int y_points = 101, int x_points = 256);

// Fits the density (j = 0) and quantile curves of R(k1, x, theta) at tau =
// 0.05, ..., 0.95 on the sample built at theta, then calibrates on [k0, kbar1].
SmoothnessEstimate calibrate_from_data(const Dataset& data, const StructuralModel& model,
                                       const Eigen::VectorXd& theta, const TestConfig& cfg,
                                       const Eigen::VectorXd& rho_grid);

}  // namespace bunching
