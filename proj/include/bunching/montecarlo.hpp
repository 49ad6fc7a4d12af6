#pragma once

#include "bunching/dgp.hpp"
#include "bunching/inference.hpp"

#include <string>
#include <vector>

namespace bunching {

enum class McEstimator { Gps, Pe, Wald };

std::string to_string(McEstimator e);
McEstimator mc_estimator_from_string(const std::string& name);

struct McConfig {
  DgpConfig dgp;
  McEstimator estimator = McEstimator::Gps;
  // Hypothesized theta (Gps, Pe) or omega with theta held at theta0 (Wald).
  std::vector<double> grid{0.5};
  int reps = 200;
  TestConfig test;
  int pe_degree = 7;
  double pe_mesh = 0.05;
  bool pe_window_average = false;
  int workers = 0;
};

struct McRow {
  double value = 0.0;  // theta, or omega for Wald
  int reps = 0;        // successful replications
  double reject_rate = 0.0;
  double mean_stat = 0.0;
  int fail_count = 0;
  double mean_chi_inv = 0.0;  // Gps and Wald only
};

struct McResult {
  std::vector<McRow> rows;
  double seconds = 0.0;
  std::vector<std::string> failures;  // first few failure messages
};

// Model used by the estimators: the DGP's policy with the support replaced by
// the trimmed range of eta.
StructuralModel mc_model(const McConfig& cfg, const EtaDistribution& eta);

McResult run_power_curve(const McConfig& cfg);

// Columns: theta,reps,reject_rate,mean_stat,fail_count
std::string power_curve_csv(const McResult& r);

}  // namespace bunching
