#include "bunching/dgp.hpp"
#include "bunching/errors.hpp"
#include "bunching/inference.hpp"
#include "bunching/io.hpp"
#include "bunching/montecarlo.hpp"
#include "bunching/partialid.hpp"
#include "bunching/pe.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace bunching;
using json = nlohmann::ordered_json;

namespace {

// Everything a command can read, after the config file and flag overrides.
struct RunConfig {
  PolicySpec policy;
  ModelKind model_kind = ModelKind::Isoelastic;
  double notch_size = 0.0;
  double eps_bar = 0.0;
  TestConfig test;
  double theta = 0.5;
  double omega = 0.0;
  std::vector<double> grid;
  std::string microdata;
  std::string histogram;
  Eigen::Index histogram_draws = 0;  // 0: use the shares directly (pe only)
  double histogram_shift = 0.0;
  double histogram_scale = 1.0;
  double histogram_trim_lo = 0.0;  // percentiles of observed y kept for estimation
  double histogram_trim_hi = 1.0;
  std::vector<std::string> weights{"one", "exp:x1"};
  DgpConfig dgp;
  McEstimator estimator = McEstimator::Gps;
  int reps = 200;
  int pe_degree = 7;
  double pe_mesh = 0.05;
  bool pe_window_average = false;
  json envelope;
  Eigen::Vector2d pid_bias = Eigen::Vector2d::Zero();
  std::vector<double> rho{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
  std::uint64_t seed = 20240101;
  std::string out;
};

const char* kConfigHelp = R"(Config file (JSON), all keys optional:
  policy: tau0=0 tau1=0.2 k=2 k0=1.7 k1=2.3 support_lo=0 support_hi=8 observed_upper=false
  model: kind=isoelastic|augmented|notch notch_size=0 eps_bar=0
  test: kappa=10 ell=5 alpha=0.05 bias_bound=0 c3=20 chi_flag=20 chi_flag_strong=45 effective_n=0
  theta=0.5  omega=0  grid: [values] or {lo, hi, step}
  data: microdata=PATH | histogram=PATH, draws=0, shift=0, scale=1, trim_lo=0, trim_hi=1
  weights=["one","exp:x1"]   (one | exp:xK | xK)
  dgp: kind=poly7|mixture n=20000 theta0=0.5 omega0=0 trim_lo=0.01 trim_hi=0.95
       range_lo=0 range_hi=8 frictions=true mixture=[{mean,sd,weight}]
  mc: estimator=gps|pe|wald reps=200
  pe: degree=7 mesh=0.05 window_average=false
  partial_id: lower={knots,pieces} upper={knots,pieces} bias=[0,0]
  calibrate: rho=[0,0.05,0.1,0.15,0.2,0.25,0.3,0.4,0.5]
  seed=20240101  out=PATH
Worker threads: BUNCHING_WORKERS. Exit codes: 0 ok, 2 data/config error, 3 numerical failure.)";

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

std::vector<double> parse_grid(const json& g) {
  std::vector<double> out;
  if (g.is_array()) return g.get<std::vector<double>>();
  if (g.is_number()) return {g.get<double>()};
  const double lo = g.at("lo").get<double>(), hi = g.at("hi").get<double>(), step = g.at("step").get<double>();
  if (!(step > 0.0) || hi < lo) throw DataError("grid: need lo <= hi and step > 0");
  const auto m = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  // Rounded so that 0.1 steps print as 0.6, not 0.6000000000000001.
  for (long i = 0; i <= m; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  return out;
}

std::vector<double> parse_grid_flag(const std::string& s) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw DataError("--grid expects VALUE or LO:HI:STEP");
  return parse_grid(json{{"lo", parts[0]}, {"hi", parts[1]}, {"step", parts[2]}});
}

void load_config(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  try {
    if (j.contains("policy")) {
      const auto& p = j["policy"];
      read(p, "tau0", c.policy.tau0);
      read(p, "tau1", c.policy.tau1);
      read(p, "k", c.policy.k);
      read(p, "k0", c.policy.k0);
      read(p, "k1", c.policy.k1);
      read(p, "support_lo", c.policy.support_lo);
      read(p, "support_hi", c.policy.support_hi);
      read(p, "observed_upper", c.policy.observed_upper);
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.contains("kind")) c.model_kind = model_kind_from_string(m["kind"].get<std::string>());
      read(m, "notch_size", c.notch_size);
      read(m, "eps_bar", c.eps_bar);
    }
    if (j.contains("test")) {
      const auto& t = j["test"];
      read(t, "kappa", c.test.kappa);
      read(t, "ell", c.test.ell);
      read(t, "alpha", c.test.alpha);
      read(t, "bias_bound", c.test.bias_bound);
      read(t, "c3", c.test.sieve.c3);
      read(t, "chi_flag", c.test.chi_flag);
      read(t, "chi_flag_strong", c.test.chi_flag_strong);
      read(t, "effective_n", c.test.effective_n);
    }
    read(j, "theta", c.theta);
    read(j, "omega", c.omega);
    if (j.contains("grid")) c.grid = parse_grid(j["grid"]);
    if (j.contains("data")) {
      const auto& d = j["data"];
      read(d, "microdata", c.microdata);
      read(d, "histogram", c.histogram);
      read(d, "draws", c.histogram_draws);
      read(d, "shift", c.histogram_shift);
      read(d, "scale", c.histogram_scale);
      read(d, "trim_lo", c.histogram_trim_lo);
      read(d, "trim_hi", c.histogram_trim_hi);
    }
    read(j, "weights", c.weights);
    if (j.contains("dgp")) {
      const auto& d = j["dgp"];
      if (d.contains("kind")) c.dgp.kind = dgp_kind_from_string(d["kind"].get<std::string>());
      read(d, "n", c.dgp.n);
      read(d, "theta0", c.dgp.theta0);
      read(d, "omega0", c.dgp.omega0);
      read(d, "trim_lo", c.dgp.trim_lo);
      read(d, "trim_hi", c.dgp.trim_hi);
      read(d, "range_lo", c.dgp.range_lo);
      read(d, "range_hi", c.dgp.range_hi);
      read(d, "frictions", c.dgp.frictions);
      if (d.contains("mixture"))
        for (const auto& m : d["mixture"])
          c.dgp.mixture.push_back({m.at("mean").get<double>(), m.at("sd").get<double>(), m.at("weight").get<double>()});
    }
    if (j.contains("mc")) {
      const auto& m = j["mc"];
      if (m.contains("estimator")) c.estimator = mc_estimator_from_string(m["estimator"].get<std::string>());
      read(m, "reps", c.reps);
    }
    if (j.contains("pe")) {
      const auto& p = j["pe"];
      read(p, "degree", c.pe_degree);
      read(p, "mesh", c.pe_mesh);
      read(p, "window_average", c.pe_window_average);
    }
    if (j.contains("partial_id")) {
      const auto& p = j["partial_id"];
      c.envelope = p;
      if (p.contains("bias")) {
        const auto b = p["bias"].get<std::vector<double>>();
        if (b.size() != 2) throw DataError("partial_id.bias must have two entries");
        c.pid_bias << b[0], b[1];
      }
    }
    if (j.contains("calibrate")) read(j["calibrate"], "rho", c.rho);
    read(j, "seed", c.seed);
    read(j, "out", c.out);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
}

StructuralModel build_model(const RunConfig& c) {
  switch (c.model_kind) {
    case ModelKind::Isoelastic: return StructuralModel::isoelastic(c.policy);
    case ModelKind::AugmentedIsoelastic: return StructuralModel::augmented(c.policy);
    case ModelKind::NotchIsoelastic: return StructuralModel::notch(c.policy, c.notch_size, c.eps_bar);
  }
  return StructuralModel::isoelastic(c.policy);
}

Eigen::VectorXd theta_of(const RunConfig& c, double theta) {
  return c.model_kind == ModelKind::AugmentedIsoelastic ? theta_vec(theta, c.omega) : theta_vec(theta);
}

double quantile_of(Eigen::VectorXd v, double p) {
  std::sort(v.data(), v.data() + v.size());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<Eigen::Index>(std::floor(pos));
  const auto j = std::min<Eigen::Index>(i + 1, v.size() - 1);
  return v(i) + (pos - static_cast<double>(i)) * (v(j) - v(i));
}

// Microdata, or draws from a collapsed histogram (shifted and scaled), with
// the support optionally set from percentiles of the observed y.
Dataset load_data(RunConfig& c) {
  if (c.microdata.empty() == c.histogram.empty())
    throw DataError("exactly one data source (data.microdata or data.histogram) is required");
  Dataset d;
  if (!c.microdata.empty()) {
    d = ingest_microdata(c.microdata);
  } else {
    if (c.histogram_draws <= 0) throw DataError("data.draws must be positive to resample a histogram");
    const CollapsedHistogram h = ingest_histogram(c.histogram);
    const Eigen::VectorXd raw = draw_from_histogram(h, c.histogram_draws, c.seed);
    d = Dataset::from_y(((raw.array() + c.histogram_shift) / c.histogram_scale).matrix());
  }
  if (c.histogram_trim_lo > 0.0 || c.histogram_trim_hi < 1.0) {
    c.policy.support_lo = quantile_of(d.y, c.histogram_trim_lo);
    c.policy.support_hi = quantile_of(d.y, c.histogram_trim_hi);
    c.policy.observed_upper = true;
  }
  return d;
}

WeightFn parse_weight(const std::string& s) {
  if (s == "one") return [](CovRef) { return 1.0; };
  auto column = [&](const std::string& name) {
    if (name.size() < 2 || name[0] != 'x') throw DataError("weight '" + s + "': expected a covariate xK");
    const int k = std::stoi(name.substr(1));
    if (k < 1) throw DataError("weight '" + s + "': covariates are numbered from 1");
    return static_cast<Eigen::Index>(k - 1);
  };
  if (s.rfind("exp:", 0) == 0) {
    const Eigen::Index k = column(s.substr(4));
    return [k](CovRef x) {
      if (k >= x.size()) throw DataError("weight refers to a missing covariate");
      return std::exp(x(k));
    };
  }
  const Eigen::Index k = column(s);
  return [k](CovRef x) {
    if (k >= x.size()) throw DataError("weight refers to a missing covariate");
    return x(k);
  };
}

PiecewisePoly parse_piecewise(const json& j) {
  PiecewisePoly p;
  p.knots = j.at("knots").get<std::vector<double>>();
  const auto pieces = j.at("pieces").get<std::vector<std::vector<double>>>();
  if (pieces.size() + 1 != p.knots.size()) throw DataError("envelope: need one more knot than pieces");
  for (std::size_t s = 0; s < pieces.size(); ++s) {
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(pieces[s].data(), static_cast<Eigen::Index>(pieces[s].size()));
    p.pieces.emplace_back(p.knots[s], c);
  }
  return p;
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.out.empty())
    std::cout << text;
  else
    write_text(c.out, text);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int cmd_simulate(RunConfig& c) {
  c.dgp.seed = c.seed;
  const EtaDistribution eta(c.dgp);
  const Simulated s = simulate(c.dgp, eta, 0);
  if (c.out.empty()) throw DataError("simulate requires --out (microdata CSV path)");
  write_microdata(c.out, s.data);
  json j;
  j["n"] = s.data.size();
  j["eta_lo"] = eta.lo();
  j["eta_hi"] = eta.hi();
  j["bunching_share"] = bunching_share(s.data, c.dgp.policy.k0, c.dgp.policy.k1);
  j["out"] = c.out;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_gps_test(RunConfig& c) {
  const Dataset d = load_data(c);
  const TestResult r = point_test_statistic(d, build_model(c), theta_of(c, c.theta), c.test);
  json j;
  j["theta"] = c.theta;
  j["mu_hat"] = r.mu_hat;
  j["sigma_hat"] = r.sigma_hat;
  j["stat"] = r.stat;
  j["cv"] = r.cv;
  j["reject"] = r.reject;
  j["B_hat"] = r.B_hat;
  j["bias_bound"] = r.bias_bound;
  j["kbar1"] = r.kbar1;
  j["chi_inv"] = r.chi_inv;
  j["chi_flag"] = r.chi_inv > c.test.chi_flag;
  j["n"] = r.n;
  j["n_retained"] = r.n_retained;
  j["gamma_jj"] = vec_json(r.gamma_jj);
  emit(c, j.dump(2) + "\n");
  return 0;
}

int cmd_gps_ci(RunConfig& c) {
  if (c.grid.empty()) throw DataError("gps-ci requires a theta grid");
  const Dataset d = load_data(c);
  Eigen::VectorXd rest;
  if (c.model_kind == ModelKind::AugmentedIsoelastic) rest = Eigen::VectorXd::Constant(1, c.omega);
  const ConfidenceSet cs = confidence_set(d, build_model(c), c.grid, c.test, rest);
  std::ostringstream os;
  os << "theta,stat,cv,accepted,mu_hat,sigma_hat,chi_inv,chi_flag,status\n";
  for (const GridPoint& p : cs.points) {
    os << fmt(p.theta) << ',';
    if (p.ok)
      os << fmt(p.stat) << ',' << fmt(p.cv) << ',' << (p.accepted ? 1 : 0) << ',' << fmt(p.mu_hat) << ','
         << fmt(p.sigma_hat) << ',' << fmt(p.chi_inv) << ',' << p.chi_flag << ",ok\n";
    else
      os << "NA,NA,NA,NA,NA,NA,NA,failed\n";
  }
  emit(c, os.str());
  for (const GridPoint& p : cs.points)
    if (!p.ok) std::cerr << "theta " << fmt(p.theta) << ": " << p.error << '\n';
  json j = json::array();
  for (const auto& [a, b] : cs.intervals) j.push_back({a, b});
  std::cerr << "accepted intervals: " << j.dump() << '\n';
  return 0;
}

int cmd_wald(RunConfig& c) {
  const Dataset d = load_data(c);
  std::vector<WeightFn> w;
  for (const auto& s : c.weights) w.push_back(parse_weight(s));
  const WaldResult r = wald_joint_test(d, build_model(c), theta_of(c, c.theta), w, c.test);
  json j;
  j["theta"] = c.theta;
  j["omega"] = c.omega;
  j["stat"] = r.stat;
  j["df"] = r.df;
  j["cv"] = r.cv;
  j["reject"] = r.reject;
  j["mu_hat"] = vec_json(r.mu_hat);
  emit(c, j.dump(2) + "\n");
  return 0;
}

int cmd_partial_id(RunConfig& c) {
  if (c.grid.empty()) throw DataError("partial-id requires a theta grid");
  if (!c.envelope.contains("lower") || !c.envelope.contains("upper"))
    throw DataError("partial-id requires partial_id.lower and partial_id.upper envelopes");
  const Dataset d = load_data(c);
  EnvelopePair env;
  try {
    env.lower = parse_piecewise(c.envelope["lower"]);
    env.upper = parse_piecewise(c.envelope["upper"]);
  } catch (const json::exception& e) {
    throw DataError(std::string("envelope: ") + e.what());
  }
  const auto pts = partial_id_grid(d, build_model(c), c.grid, env, c.test.kappa, c.test.ell, c.pid_bias, c.test.alpha);
  std::ostringstream os;
  os << "theta,mu1_hat,mu2_hat,stat,df,cv,reject,status\n";
  for (const auto& p : pts) {
    os << fmt(p.theta) << ',';
    if (p.ok)
      os << fmt(p.moments.mu1_hat) << ',' << fmt(p.moments.mu2_hat) << ',' << fmt(p.qlr.stat) << ',' << p.qlr.df
         << ',' << fmt(p.qlr.cv) << ',' << (p.qlr.reject ? 1 : 0) << ",ok\n";
    else
      os << "NA,NA,NA,NA,NA,NA,failed\n";
  }
  emit(c, os.str());
  for (const auto& p : pts)
    if (!p.ok) std::cerr << "theta " << fmt(p.theta) << ": " << p.error << '\n';
  return 0;
}

int cmd_pe(RunConfig& c) {
  Histogram h;
  double n = 0.0;
  const PolicySpec& p = c.policy;
  if (!c.histogram.empty() && c.histogram_draws <= 0) {
    CollapsedHistogram raw = ingest_histogram(c.histogram);
    raw.centers = ((raw.centers.array() + c.histogram_shift) / c.histogram_scale).matrix();
    h = histogram_from_centers(raw.centers, raw.shares, p.k0, p.k1, p.k);
    if (!(c.test.effective_n > 0.0)) throw DataError("pe on a collapsed histogram needs test.effective_n (sample size)");
    n = c.test.effective_n;
  } else {
    const Dataset d = load_data(c);
    const auto [lo, hi] = c.policy.observed_upper
                              ? aligned_support(c.policy.support_lo, c.policy.support_hi, p.k0, p.k1, c.pe_mesh)
                              : aligned_support(d.y.minCoeff(), d.y.maxCoeff(), p.k0, p.k1, c.pe_mesh);
    h = bin_histogram(d.y, c.pe_mesh, lo, hi, p.k0, p.k1, p.k);
    n = c.test.effective_n > 0.0 ? c.test.effective_n : static_cast<double>(d.size());
  }
  const PeEstimate e = pe_iv_estimate(h, c.pe_degree, p, n, c.pe_window_average);
  json j;
  j["degree"] = e.degree;
  j["B_hat"] = e.B_hat;
  j["f_hat"] = e.f_hat;
  j["theta_hat"] = e.theta_hat;
  j["se_theta"] = e.se_theta;
  const double z = normal_quantile(1.0 - c.test.alpha / 2.0);
  j["ci"] = {e.theta_hat - z * e.se_theta, e.theta_hat + z * e.se_theta};
  j["P_R"] = e.P_R;
  j["integral"] = e.integral;
  j["gamma"] = vec_json(e.gamma);
  j["beta"] = vec_json(e.beta);
  emit(c, j.dump(2) + "\n");
  return 0;
}

int cmd_calibrate(RunConfig& c) {
  const Dataset d = load_data(c);
  const Eigen::VectorXd rho = Eigen::Map<const Eigen::VectorXd>(c.rho.data(), static_cast<Eigen::Index>(c.rho.size()));
  const SmoothnessEstimate s = calibrate_from_data(d, build_model(c), theta_of(c, c.theta), c.test, rho);
  json rows = json::array();
  for (Eigen::Index r = 0; r < s.rho.size(); ++r) {
    json row;
    row["rho"] = s.rho(r);
    row["beta"] = s.beta(r);
    row["delta"] = std::isfinite(s.delta(r)) ? json(s.delta(r)) : json(nullptr);
    row["bound"] = std::isnan(s.bound(r)) ? json(nullptr) : json(s.bound(r));
    rows.push_back(row);
  }
  json j;
  j["theta"] = c.theta;
  j["ell"] = c.test.ell;
  j["bias_bound"] = s.bbar;
  j["failed"] = s.failed;
  j["grid"] = rows;
  emit(c, j.dump(2) + "\n");
  return 0;
}

int cmd_power(RunConfig& c) {
  McConfig m;
  m.dgp = c.dgp;
  m.dgp.seed = c.seed;
  m.estimator = c.estimator;
  m.grid = c.grid.empty() ? std::vector<double>{c.dgp.theta0} : c.grid;
  m.reps = c.reps;
  m.test = c.test;
  m.pe_degree = c.pe_degree;
  m.pe_mesh = c.pe_mesh;
  m.pe_window_average = c.pe_window_average;
  const McResult r = run_power_curve(m);
  emit(c, power_curve_csv(r));
  for (const auto& f : r.failures) std::cerr << "replication failure: " << f << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bunching designs: counterfactual-corrected sieve tests, partial identification, PE baseline"};
  app.footer(kConfigHelp);
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path, grid_flag;
  std::optional<double> theta, omega, alpha, bias_bound;
  std::optional<int> kappa, ell, reps, degree;
  std::optional<long> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> microdata, histogram, out, estimator, model_kind;
  std::optional<double> mesh;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--data", microdata, "microdata CSV (y, x1..xd, t)");
    sub->add_option("--histogram", histogram, "collapsed histogram CSV (bin_center, share)");
    sub->add_option("--out", out, "output path (default stdout)");
    sub->add_option("--theta", theta, "hypothesized theta (default 0.5)");
    sub->add_option("--omega", omega, "omega for the augmented model (default 0)");
    sub->add_option("--model", model_kind, "isoelastic | augmented | notch");
    sub->add_option("--kappa", kappa, "sieve dimension (default 10)");
    sub->add_option("--ell", ell, "approximation order (default 5)");
    sub->add_option("--alpha", alpha, "test size (default 0.05)");
    sub->add_option("--bias-bound", bias_bound, "bias bound b_bar (default 0)");
    sub->add_option("--grid", grid_flag, "theta grid VALUE or LO:HI:STEP");
    sub->add_option("--seed", seed, "master seed (default 20240101)");
    sub->add_option("--reps", reps, "Monte Carlo replications (default 200)");
    sub->add_option("--n", n, "simulated sample size (default 20000)");
    sub->add_option("--estimator", estimator, "power: gps | pe | wald");
    sub->add_option("--degree", degree, "PE polynomial degree (default 7)");
    sub->add_option("--mesh", mesh, "PE bin width (default 0.05)");
  };
  std::string chosen;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "draw a dataset from the configured DGP"},
      {"gps-test", "test H0: theta = theta_hyp"},
      {"gps-ci", "confidence set by test inversion over the grid (CSV)"},
      {"wald", "joint Wald test over weighted bunching moments"},
      {"partial-id", "QLR test of envelope bounds over the grid (CSV)"},
      {"pe", "iterative polynomial estimator via its IV form"},
      {"calibrate", "smoothness constants and bias bound from the data"},
      {"power", "Monte Carlo rejection rates over the grid (CSV)"}};
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_common(sub);
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) load_config(config_path, cfg);
    if (theta) cfg.theta = *theta;
    if (omega) cfg.omega = *omega;
    if (model_kind) cfg.model_kind = model_kind_from_string(*model_kind);
    if (kappa) cfg.test.kappa = *kappa;
    if (ell) cfg.test.ell = *ell;
    if (alpha) cfg.test.alpha = *alpha;
    if (bias_bound) cfg.test.bias_bound = *bias_bound;
    if (!grid_flag.empty()) cfg.grid = parse_grid_flag(grid_flag);
    if (seed) cfg.seed = *seed;
    if (reps) cfg.reps = *reps;
    if (n) cfg.dgp.n = *n;
    if (estimator) cfg.estimator = mc_estimator_from_string(*estimator);
    if (degree) cfg.pe_degree = *degree;
    if (mesh) cfg.pe_mesh = *mesh;
    if (microdata) cfg.microdata = *microdata;
    if (histogram) cfg.histogram = *histogram;
    if (out) cfg.out = *out;

    if (chosen == "simulate") return cmd_simulate(cfg);
    if (chosen == "gps-test") return cmd_gps_test(cfg);
    if (chosen == "gps-ci") return cmd_gps_ci(cfg);
    if (chosen == "wald") return cmd_wald(cfg);
    if (chosen == "partial-id") return cmd_partial_id(cfg);
    if (chosen == "pe") return cmd_pe(cfg);
    if (chosen == "calibrate") return cmd_calibrate(cfg);
    if (chosen == "power") return cmd_power(cfg);
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
