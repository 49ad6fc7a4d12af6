#include "bunching/montecarlo.hpp"

#include "bunching/errors.hpp"
#include "bunching/parallel.hpp"
#include "bunching/pe.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>

namespace bunching {

std::string to_string(McEstimator e) {
  switch (e) {
    case McEstimator::Gps: return "gps";
    case McEstimator::Pe: return "pe";
    case McEstimator::Wald: return "wald";
  }
  return "gps";
}

McEstimator mc_estimator_from_string(const std::string& name) {
  if (name == "gps") return McEstimator::Gps;
  if (name == "pe") return McEstimator::Pe;
  if (name == "wald") return McEstimator::Wald;
  throw DataError("unknown estimator '" + name + "' (expected gps, pe or wald)");
}

StructuralModel mc_model(const McConfig& cfg, const EtaDistribution& eta) {
  PolicySpec p = cfg.dgp.policy;
  // Y(0) = (1 - tau0)^theta_i eta for units below the cutoff; truncate observed
  // Y at the largest value every unit can reach, so no selection on x.
  const double lo_exp = cfg.dgp.theta0 - std::abs(cfg.dgp.omega0);
  const double hi_exp = cfg.dgp.theta0 + std::abs(cfg.dgp.omega0);
  p.support_lo = std::pow(1.0 - p.tau0, lo_exp) * eta.lo();
  p.support_hi = std::pow(1.0 - p.tau1, hi_exp) * eta.hi();
  p.observed_upper = true;
  return cfg.estimator == McEstimator::Wald ? StructuralModel::augmented(p) : StructuralModel::isoelastic(p);
}

namespace {

struct Outcome {
  bool ok = false;
  bool reject = false;
  double stat = 0.0;
  double chi_inv = 0.0;
};

}  // namespace

McResult run_power_curve(const McConfig& cfg) {
  if (cfg.reps < 1) throw DomainError("power curve: reps must be at least 1");
  if (cfg.grid.empty()) throw DomainError("power curve: empty grid");
  cfg.dgp.validate();
  cfg.test.validate();
  const auto start = std::chrono::steady_clock::now();
  const EtaDistribution eta(cfg.dgp);
  const StructuralModel model = mc_model(cfg, eta);
  const std::size_t G = cfg.grid.size();
  std::vector<Outcome> out(static_cast<std::size_t>(cfg.reps) * G);
  std::vector<std::string> failures;
  std::mutex mu;

  const std::vector<WeightFn> wald_weights{[](CovRef) { return 1.0; }, [](CovRef x) { return std::exp(x(0)); }};

  parallel_for(
      static_cast<std::size_t>(cfg.reps),
      [&](std::size_t r) {
        const Simulated sim = simulate(cfg.dgp, eta, r);
        for (std::size_t g = 0; g < G; ++g) {
          Outcome& o = out[r * G + g];
          try {
            switch (cfg.estimator) {
              case McEstimator::Gps: {
                const TestResult t = point_test_statistic(sim.data, model, theta_vec(cfg.grid[g]), cfg.test);
                o.reject = t.reject;
                o.stat = t.stat;
                o.chi_inv = t.chi_inv;
                break;
              }
              case McEstimator::Wald: {
                const WaldResult w = wald_joint_test(sim.data, model, theta_vec(cfg.dgp.theta0, cfg.grid[g]),
                                                     wald_weights, cfg.test);
                o.reject = w.reject;
                o.stat = w.stat;
                break;
              }
              case McEstimator::Pe: {
                const PolicySpec& p = cfg.dgp.policy;
                const auto [lo, hi] =
                    aligned_support(sim.data.y.minCoeff(), sim.data.y.maxCoeff(), p.k0, p.k1, cfg.pe_mesh);
                const Histogram h = bin_histogram(sim.data.y, cfg.pe_mesh, lo, hi, p.k0, p.k1, p.k);
                const PeEstimate e = pe_iv_estimate(h, cfg.pe_degree, p, static_cast<double>(cfg.dgp.n),
                                                    cfg.pe_window_average);
                o.stat = std::abs(e.theta_hat - cfg.grid[g]) / e.se_theta;
                o.reject = pe_rejects(e, cfg.grid[g], cfg.test.alpha);
                break;
              }
            }
            o.ok = true;
          } catch (const std::exception& ex) {
            std::lock_guard<std::mutex> lock(mu);
            if (failures.size() < 20) failures.push_back(ex.what());
          }
        }
      },
      cfg.workers);

  McResult res;
  res.failures = std::move(failures);
  for (std::size_t g = 0; g < G; ++g) {
    McRow row;
    row.value = cfg.grid[g];
    int rejects = 0;
    for (int r = 0; r < cfg.reps; ++r) {
      const Outcome& o = out[static_cast<std::size_t>(r) * G + g];
      if (!o.ok) {
        ++row.fail_count;
        continue;
      }
      ++row.reps;
      rejects += o.reject ? 1 : 0;
      row.mean_stat += o.stat;
      row.mean_chi_inv += o.chi_inv;
    }
    if (row.reps > 0) {
      row.reject_rate = static_cast<double>(rejects) / row.reps;
      row.mean_stat /= row.reps;
      row.mean_chi_inv /= row.reps;
    }
    res.rows.push_back(row);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::string power_curve_csv(const McResult& r) {
  std::ostringstream os;
  os.precision(10);
  os << "theta,reps,reject_rate,mean_stat,fail_count\n";
  for (const McRow& row : r.rows)
    os << row.value << ',' << row.reps << ',' << row.reject_rate << ',' << row.mean_stat << ',' << row.fail_count
       << '\n';
  return os.str();
}

}  // namespace bunching
