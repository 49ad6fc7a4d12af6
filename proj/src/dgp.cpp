#include "bunching/dgp.hpp"

#include "bunching/errors.hpp"
#include "bunching/poly.hpp"
#include "bunching/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bunching {

std::string to_string(DgpKind kind) { return kind == DgpKind::Poly7 ? "poly7" : "mixture"; }

DgpKind dgp_kind_from_string(const std::string& name) {
  if (name == "poly7" || name == "dgp1") return DgpKind::Poly7;
  if (name == "mixture" || name == "dgp2") return DgpKind::GaussianMixture;
  throw DataError("unknown dgp kind '" + name + "' (expected poly7 or mixture)");
}

void DgpConfig::validate() const {
  policy.validate();
  if (n < 1) throw DomainError("dgp: n must be positive");
  if (!(0.0 <= trim_lo && trim_lo < trim_hi && trim_hi <= 1.0)) throw DomainError("dgp: need 0 <= trim_lo < trim_hi <= 1");
  if (!(range_lo < range_hi)) throw DomainError("dgp: empty density range");
  if (!(theta0 > 0.0)) throw DomainError("dgp: theta0 must be positive");
  if (omega0 != 0.0 && !(std::abs(omega0) < theta0)) throw DomainError("dgp: need |omega0| < theta0");
  double wsum = 0.0;
  for (const auto& c : mixture) {
    if (!(c.sd >= kMixtureSdFloor - 1e-12)) throw DomainError("dgp: mixture sd below the variance floor 0.1");
    if (!(c.weight >= 0.0)) throw DomainError("dgp: negative mixture weight");
    wsum += c.weight;
  }
  if (!mixture.empty() && std::abs(wsum - 1.0) > 1e-8) throw DomainError("dgp: mixture weights must sum to one");
}

Eigen::VectorXd dgp1_coefficients() {
  Eigen::VectorXd c(8);
  c << 4.986, 25.223, 3.839, 14.006, -5.542, 0.612, -0.009, -0.001;
  return 1e-3 * c;
}

std::vector<GaussianComponent> default_mixture() {
  // Least-squares fit to 0.3 SGED(0.5, 1, 2, -0.5) + 0.7 SGED(5.5, 0.75, 3, 0.5)
  // shifted right by 2 so the trimmed support is positive.
  return {
      {1.8905, 0.9791, 0.1295}, {2.8015, 0.6436, 0.1148}, {3.4407, 0.3712, 0.0536}, {6.7225, 0.3163, 0.2312},
      {7.3615, 0.3165, 0.1945}, {7.9013, 0.3182, 0.1240}, {7.9923, 0.3275, 0.0204}, {8.4217, 0.3603, 0.0768},
      {8.5512, 0.3797, 0.0356}, {9.1135, 0.3567, 0.0196},
  };
}

double sged_density(double y, double mu, double sigma, double k, double lambda) {
  if (!(sigma > 0.0 && k > 0.0 && std::abs(lambda) < 1.0)) throw DomainError("sged: need sigma > 0, k > 0, |lambda| < 1");
  const double g1 = std::tgamma(1.0 / k), g2 = std::tgamma(2.0 / k), g3 = std::tgamma(3.0 / k);
  const double A = g2 / std::sqrt(g1 * g3);
  const double S = std::sqrt(1.0 + 3.0 * lambda * lambda - 4.0 * A * A * lambda * lambda);
  const double th = std::sqrt(g1 / g3) / S;
  const double delta = 2.0 * lambda * A / S;
  const double C = k / (2.0 * th * g1);
  const double z = y - mu + delta * sigma;
  const double sgn = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
  return C / sigma * std::exp(-std::pow(std::abs(z) / ((1.0 + lambda * sgn) * th * sigma), k));
}

EtaDistribution::EtaDistribution(const DgpConfig& cfg, int table_points) {
  cfg.validate();
  if (table_points < 2) throw DomainError("dgp: table needs at least two points");
  double a = 0.0, b = 0.0;
  if (cfg.kind == DgpKind::Poly7) {
    const Poly p(0.0, dgp1_coefficients());
    const Poly P = p.antiderivative();
    raw_pdf_ = [p](double y) { return p(y); };
    const double base = P(cfg.range_lo);
    raw_cdf_ = [P, base](double y) { return P(y) - base; };
    a = cfg.range_lo;
    b = cfg.range_hi;
    for (int i = 0; i <= 10000; ++i) {
      const double y = a + (b - a) * i / 10000.0;
      if (!(p(y) > 0.0)) {
        std::ostringstream os;
        os << "dgp: polynomial density is not positive at y = " << y;
        throw DataError(os.str());
      }
    }
  } else {
    const auto comps = cfg.mixture.empty() ? default_mixture() : cfg.mixture;
    a = comps.front().mean;
    b = a;
    for (const auto& c : comps) {
      a = std::min(a, c.mean - 12.0 * c.sd);
      b = std::max(b, c.mean + 12.0 * c.sd);
    }
    raw_pdf_ = [comps](double y) {
      double s = 0.0;
      for (const auto& c : comps) {
        const double z = (y - c.mean) / c.sd;
        s += c.weight * std::exp(-0.5 * z * z) / (c.sd * 2.5066282746310002);
      }
      return s;
    };
    raw_cdf_ = [comps](double y) {
      double s = 0.0;
      for (const auto& c : comps) s += c.weight * normal_cdf((y - c.mean) / c.sd);
      return s;
    };
  }
  const double total = raw_cdf_(b) - raw_cdf_(a);
  auto quantile = [&](double p) {
    const double target = raw_cdf_(a) + p * total;
    double l = a, h = b;
    for (int it = 0; it < 200 && h - l > 1e-14 * std::max(1.0, std::abs(h)); ++it) {
      const double m = 0.5 * (l + h);
      (raw_cdf_(m) < target ? l : h) = m;
    }
    return 0.5 * (l + h);
  };
  lo_ = quantile(cfg.trim_lo);
  hi_ = quantile(cfg.trim_hi);
  if (!(lo_ > 0.0)) throw DataError("dgp: trimmed support must be positive (eta > 0)");
  F_lo_ = raw_cdf_(lo_);
  mass_ = raw_cdf_(hi_) - F_lo_;
  grid_ = Eigen::VectorXd::LinSpaced(table_points, lo_, hi_);
  table_.resize(table_points);
  for (int i = 0; i < table_points; ++i) table_(i) = cdf(grid_(i));
  table_(0) = 0.0;
  table_(table_points - 1) = 1.0;
}

double EtaDistribution::pdf(double y) const {
  if (y < lo_ || y > hi_) return 0.0;
  return raw_pdf_(y) / mass_;
}

double EtaDistribution::cdf(double y) const {
  if (y <= lo_) return 0.0;
  if (y >= hi_) return 1.0;
  return (raw_cdf_(y) - F_lo_) / mass_;
}

namespace {

// Uniform on [0, 1) from the top 53 bits; portable across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

double EtaDistribution::draw(std::mt19937_64& rng) const {
  const double u = uniform01(rng);
  const auto* begin = table_.data();
  const auto* end = begin + table_.size();
  const auto* it = std::upper_bound(begin, end, u);
  const Eigen::Index i = std::clamp<Eigen::Index>(it - begin, 1, table_.size() - 1);
  const double f0 = table_(i - 1), f1 = table_(i);
  const double s = f1 > f0 ? (u - f0) / (f1 - f0) : 0.0;
  return grid_(i - 1) + s * (grid_(i) - grid_(i - 1));
}

Eigen::VectorXd EtaDistribution::draw(Eigen::Index n, std::mt19937_64& rng) const {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = draw(rng);
  return out;
}

std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double triangular_quantile(double u, double a, double mode, double b) {
  if (!(a <= mode && mode <= b && a < b)) throw DomainError("triangular: need a <= mode <= b, a < b");
  const double c = (mode - a) / (b - a);
  if (u < c) return a + std::sqrt(u * (b - a) * (mode - a));
  return b - std::sqrt((1.0 - u) * (b - a) * (b - mode));
}

Eigen::VectorXd apply_kink_and_frictions(const Eigen::VectorXd& eta, const CovariateMatrix& x,
                                         const StructuralModel& model, const Eigen::VectorXd& theta, bool frictions,
                                         std::mt19937_64& rng) {
  if (x.rows() != eta.size()) throw DataError("dgp: eta and x have different lengths");
  const PolicySpec& p = model.policy;
  Eigen::VectorXd y(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const CovRef xi = x.row(i).transpose();
    const double ystar = actual_choice(model, xi, eta(i), theta);
    const double upper = notch_window_upper(model, xi, theta);
    if (frictions && ystar >= p.k0 && ystar <= upper)
      y(i) = triangular_quantile(uniform01(rng), p.k0, p.k, upper);
    else
      y(i) = ystar;
  }
  return y;
}

StructuralModel dgp_model(const DgpConfig& cfg) {
  return cfg.omega0 != 0.0 ? StructuralModel::augmented(cfg.policy) : StructuralModel::isoelastic(cfg.policy);
}

Eigen::VectorXd dgp_theta(const DgpConfig& cfg) {
  return cfg.omega0 != 0.0 ? theta_vec(cfg.theta0, cfg.omega0) : theta_vec(cfg.theta0);
}

Simulated simulate(const DgpConfig& cfg, const EtaDistribution& eta_dist, std::uint64_t replication) {
  cfg.validate();
  std::mt19937_64 rng = make_rng(cfg.seed, replication);
  Simulated s;
  s.eta = eta_dist.draw(cfg.n, rng);
  CovariateMatrix x(cfg.n, 1);
  for (Eigen::Index i = 0; i < cfg.n; ++i) x(i, 0) = 2.0 * uniform01(rng) - 1.0;
  s.data.y = apply_kink_and_frictions(s.eta, x, dgp_model(cfg), dgp_theta(cfg), cfg.frictions, rng);
  s.data.x = std::move(x);
  s.data.t = Eigen::VectorXd::Ones(cfg.n);
  return s;
}

}  // namespace bunching
