#pragma once

#include "bunching/model.hpp"
#include "bunching/sample.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace bunching {

enum class DgpKind { Poly7, GaussianMixture };

std::string to_string(DgpKind kind);
DgpKind dgp_kind_from_string(const std::string& name);

struct GaussianComponent {
  double mean = 0.0;
  double sd = 1.0;
  double weight = 1.0;
};

struct DgpConfig {
  DgpKind kind = DgpKind::Poly7;
  Eigen::Index n = 20000;
  double theta0 = 0.5;
  double omega0 = 0.0;
  PolicySpec policy;
  double trim_lo = 0.01;
  double trim_hi = 0.95;
  // Range of the polynomial density before trimming.
  double range_lo = 0.0;
  double range_hi = 8.0;
  std::vector<GaussianComponent> mixture;  // empty: default_mixture()
  bool frictions = true;
  std::uint64_t seed = 20240101;

  void validate() const;
};

// Monomial coefficients of the degree-7 density on (1, y, ..., y^7).
Eigen::VectorXd dgp1_coefficients();

// Ten-component mixture used when no mixture is configured.
std::vector<GaussianComponent> default_mixture();

// Minimum component standard deviation (variance floor 0.1).
inline constexpr double kMixtureSdFloor = 0.31622776601683794;

// Skewed generalized error density with mean mu and standard deviation sigma,
// shape k > 0 and skew lambda in (-1, 1).
double sged_density(double y, double mu, double sigma, double k, double lambda);

// Trimmed and renormalized density of eta with inverse-CDF sampling from a
// cumulative table.
class EtaDistribution {
 public:
  explicit EtaDistribution(const DgpConfig& cfg, int table_points = 10000);

  double lo() const { return lo_; }  // trimming quantiles
  double hi() const { return hi_; }
  double pdf(double y) const;
  double cdf(double y) const;  // exact
  double draw(std::mt19937_64& rng) const;
  Eigen::VectorXd draw(Eigen::Index n, std::mt19937_64& rng) const;

 private:
  std::function<double(double)> raw_pdf_;
  std::function<double(double)> raw_cdf_;
  double lo_ = 0.0, hi_ = 0.0;
  double F_lo_ = 0.0, mass_ = 1.0;
  Eigen::VectorXd grid_, table_;
};

// Independent stream for replication `stream` under a master seed.
std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream);

// Inverse CDF of the triangular law on [a, b] with the given mode.
double triangular_quantile(double u, double a, double mode, double b);

// Y = Y* outside [k0, k1]; a triangular draw with mode k inside.
Eigen::VectorXd apply_kink_and_frictions(const Eigen::VectorXd& eta, const CovariateMatrix& x,
                                         const StructuralModel& model, const Eigen::VectorXd& theta, bool frictions,
                                         std::mt19937_64& rng);

// Model and parameter implied by the config (augmented when omega0 != 0).
StructuralModel dgp_model(const DgpConfig& cfg);
Eigen::VectorXd dgp_theta(const DgpConfig& cfg);

// One simulated dataset: X ~ U[-1, 1], eta from the trimmed density.
struct Simulated {
  Dataset data;
  Eigen::VectorXd eta;
};
Simulated simulate(const DgpConfig& cfg, const EtaDistribution& eta_dist, std::uint64_t replication);

}  // namespace bunching
