#pragma once

#include "bunching/inference.hpp"
#include "bunching/model.hpp"
#include "bunching/poly.hpp"
#include "bunching/sample.hpp"

#include <Eigen/Dense>

#include <vector>

namespace bunching {

// Piecewise polynomial: pieces[s] applies on [knots[s], knots[s+1]).
struct PiecewisePoly {
  std::vector<double> knots;  // t_0 < ... < t_S
  std::vector<Poly> pieces;   // S pieces

  static PiecewisePoly constant(double value, double a, double b);
  double operator()(double y) const;
  void validate() const;
};

struct EnvelopePair {
  PiecewisePoly lower;
  PiecewisePoly upper;
  void validate(int grid = 1001) const;
};

// moments[s][j-1] is the fitted E[(R - t_s)_+^j | Y(0) = y] as a polynomial,
// for each knot t_s of the envelope (s = 0..S-1) and j = 1..ell.
using KnotMoments = std::vector<std::vector<Poly>>;

// sum_s sum_{j<=ell} (1/j!) D^{j-1}[m_{s,j} Delta f_s](t_s), Delta f_s = f_{s+1} - f_s, f_0 = 0.
double envelope_series(const PiecewisePoly& f, const KnotMoments& moments, int ell);

struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
};

BoundPair envelope_bounds(const EnvelopePair& env, const KnotMoments& moments, int ell);

// Knot moments for a constant w = R(k1) - k0: (w - (t_s - k0))_+^j.
KnotMoments constant_knot_moments(const std::vector<double>& knots, double k0, double w, int ell);

BoundPair blomquist_bounds(double fY_k0, double fY_k1, const PolicySpec& policy, double theta, double sigma_lo,
                           double sigma_hi);

struct BertanhaInterval {
  enum class Kind { Empty, Interval, HalfLine };
  Kind kind = Kind::Empty;
  double lower = 0.0;
  double upper = 0.0;  // meaningful for Interval only
};

// All quantities on the log-income scale.
BertanhaInterval bertanha_interval(double f0, double f1, double k0, double k1, double M, double B, double log_ratio);

struct QlrInput {
  double mu1_hat = 0.0;
  double mu2_hat = 0.0;
  Eigen::Matrix2d V = Eigen::Matrix2d::Identity();  // asymptotic covariance of sqrt(n)(mu1_hat, mu2_hat)
  Eigen::Vector2d bias = Eigen::Vector2d::Zero();
  double alpha = 0.05;
  double n = 1.0;
};

struct QlrResult {
  double stat = 0.0;
  int df = 0;
  double cv = 0.0;
  bool reject = false;
  Eigen::Vector2d mu_star = Eigen::Vector2d::Zero();  // minimizer, in (mu1, mu2) coordinates
  std::vector<int> binding;
};

QlrResult qlr_test(const QlrInput& in);

// Plug-in (mu1_hat, mu2_hat) and their stacked-influence covariance at theta.
struct PartialIdMoments {
  double mu1_hat = 0.0;
  double mu2_hat = 0.0;
  Eigen::Matrix2d V = Eigen::Matrix2d::Zero();
  double B_hat = 0.0;    // E_hat[T 1{window}] / E_hat[T]
  double kbar1 = 0.0;
  Eigen::Index n = 0;
};

// Knots of the envelopes must start at k0; the conditional moments are
// estimated by weighted least squares with kappa terms.
PartialIdMoments partial_id_moments(const Dataset& data, const StructuralModel& model, const Eigen::VectorXd& theta,
                                    const EnvelopePair& env, int kappa, int ell);

struct PartialIdPoint {
  double theta = 0.0;
  bool ok = false;
  std::string error;
  PartialIdMoments moments;
  QlrResult qlr;
};

std::vector<PartialIdPoint> partial_id_grid(const Dataset& data, const StructuralModel& model,
                                            const std::vector<double>& grid, const EnvelopePair& env, int kappa,
                                            int ell, const Eigen::Vector2d& bias, double alpha, int workers = 0);

}  // namespace bunching
