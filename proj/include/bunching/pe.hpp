#pragma once

#include "bunching/model.hpp"

#include <Eigen/Dense>

namespace bunching {

// Equispaced histogram. Bin b covers [lo + b mesh, lo + (b+1) mesh); the
// window bins are [w_begin, w_end) and the cutoff bin holds k.
struct Histogram {
  double lo = 0.0;
  double mesh = 1.0;
  Eigen::VectorXd shares;
  int w_begin = 0;
  int w_end = 0;
  int cutoff_bin = 0;

  int bins() const { return static_cast<int>(shares.size()); }
  double center(int b) const { return lo + (b + 0.5) * mesh; }
  Eigen::VectorXd centers() const;
  void validate() const;
};

// Smallest aligned support [lo, hi] holding [ymin, ymax] such that k0 and k1
// fall on bin edges.
std::pair<double, double> aligned_support(double ymin, double ymax, double k0, double k1, double mesh);

// Bins y on [lo, hi) with width mesh. Points outside are dropped and the
// shares renormalized over what remains.
Histogram bin_histogram(const Eigen::VectorXd& y, double mesh, double lo, double hi, double k0, double k1, double k);

// Histogram from bin centers and shares (collapsed data).
Histogram histogram_from_centers(const Eigen::VectorXd& centers, const Eigen::VectorXd& shares, double k0, double k1,
                                 double k);

struct PeEstimate {
  int degree = 0;
  Eigen::VectorXd gamma;  // coefficients on (1, c, ..., c^degree)
  Eigen::VectorXd beta;   // window fixed effects
  Eigen::VectorXd residuals;
  double B_hat = 0.0;
  double f_hat = 0.0;  // density at the cutoff (per unit of y)
  double theta_hat = 0.0;
  double se_theta = 0.0;
  double P_R = 0.0;
  double integral = 0.0;  // sum_j fitted counterfactual share
  // Affine update B <- phi0 + phi1 B of the iterative scheme.
  double phi0 = 0.0;
  double phi1 = 0.0;
  int iterations = 0;
};

double small_kink_theta(double B_hat, double f_hat, double k, double tau0, double tau1);

// One-shot IV solve. n is the sample size behind the shares (for the
// standard error); window_average switches f_hat to the window mean.
PeEstimate pe_iv_estimate(const Histogram& h, int degree, const PolicySpec& policy, double n,
                          bool window_average = false);

// Iterated proportional adjustment starting from B = 0.
PeEstimate pe_iterative(const Histogram& h, int degree, const PolicySpec& policy, double n, int max_iter = 10000,
                        double tol = 1e-12, bool window_average = false);

// |theta_hat - theta| / se > z_{1 - alpha/2}
bool pe_rejects(const PeEstimate& e, double theta, double alpha);

}  // namespace bunching
