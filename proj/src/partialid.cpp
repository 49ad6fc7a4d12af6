#include "bunching/partialid.hpp"

#include "bunching/errors.hpp"
#include "bunching/parallel.hpp"
#include "bunching/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bunching {

PiecewisePoly PiecewisePoly::constant(double value, double a, double b) {
  PiecewisePoly p;
  p.knots = {a, b};
  p.pieces = {Poly::constant(value, a)};
  return p;
}

void PiecewisePoly::validate() const {
  if (pieces.empty()) throw DataError("piecewise polynomial has no pieces");
  if (knots.size() != pieces.size() + 1) throw DataError("piecewise polynomial needs one more knot than pieces");
  for (std::size_t s = 1; s < knots.size(); ++s)
    if (!(knots[s] > knots[s - 1])) throw DataError("envelope knots must be strictly increasing");
}

double PiecewisePoly::operator()(double y) const {
  std::size_t s = 0;
  while (s + 1 < pieces.size() && y >= knots[s + 1]) ++s;
  return pieces[s](y);
}

void EnvelopePair::validate(int grid) const {
  lower.validate();
  upper.validate();
  const double a = std::max(lower.knots.front(), upper.knots.front());
  double b = std::min(lower.knots.back(), upper.knots.back());
  if (!std::isfinite(b)) b = a + 1.0;
  for (int i = 0; i < grid; ++i) {
    const double y = a + (b - a) * i / (grid - 1.0);
    if (upper(y) < lower(y) - 1e-12) {
      std::ostringstream os;
      os << "envelope violated: upper < lower at y = " << y;
      throw DataError(os.str());
    }
  }
}

double envelope_series(const PiecewisePoly& f, const KnotMoments& moments, int ell) {
  f.validate();
  const std::size_t S = f.pieces.size();
  if (moments.size() < S) throw DomainError("envelope series: missing conditional moments for some knots");
  double total = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const double ts = f.knots[s];
    Poly delta = f.pieces[s].recentered(ts);
    if (s > 0) delta = delta - f.pieces[s - 1].recentered(ts);
    if (static_cast<int>(moments[s].size()) < ell)
      throw DomainError("envelope series: ell exceeds the available conditional moment orders");
    for (int j = 1; j <= ell; ++j) {
      // (1/j!) D^{j-1} h (t_s) is the coefficient of (y - t_s)^{j-1} divided by j.
      const Poly h = moments[s][static_cast<std::size_t>(j - 1)].recentered(ts) * delta;
      if (j - 1 < h.size()) total += h.coeffs(j - 1) / j;
    }
  }
  return total;
}

BoundPair envelope_bounds(const EnvelopePair& env, const KnotMoments& moments, int ell) {
  if (ell < 1) throw DomainError("envelope bounds: ell must be at least 1");
  return {envelope_series(env.lower, moments, ell), envelope_series(env.upper, moments, ell)};
}

KnotMoments constant_knot_moments(const std::vector<double>& knots, double k0, double w, int ell) {
  KnotMoments out;
  for (double t : knots) {
    std::vector<Poly> row;
    const double gap = std::max(0.0, w - (t - k0));
    for (int j = 1; j <= ell; ++j) row.push_back(Poly::constant(std::pow(gap, j), t));
    out.push_back(std::move(row));
  }
  return out;
}

BoundPair blomquist_bounds(double fY_k0, double fY_k1, const PolicySpec& policy, double theta, double sigma_lo,
                           double sigma_hi) {
  if (!(fY_k0 > 0.0 && fY_k1 > 0.0)) throw DomainError("Blomquist bounds: densities must be positive");
  if (!(sigma_lo <= 1.0 && 1.0 <= sigma_hi && sigma_lo >= 0.0))
    throw DomainError("Blomquist bounds: need 0 <= sigma_lo <= 1 <= sigma_hi");
  const double r = std::exp(theta * policy.log_ratio());
  const double d_minus = fY_k0 * (r * policy.k1 - policy.k0);
  const double d_plus = fY_k1 * (policy.k1 - policy.k0 / r);
  return {sigma_lo * std::min(d_minus, d_plus), sigma_hi * std::max(d_minus, d_plus)};
}

BertanhaInterval bertanha_interval(double f0, double f1, double k0, double k1, double M, double B,
                                   double log_ratio) {
  if (!(M > 0.0)) throw DomainError("Bertanha interval: M must be positive");
  if (!(log_ratio > 0.0)) throw DomainError("Bertanha interval: log ratio must be positive");
  if (f0 < 0.0 || f1 < 0.0) throw DomainError("Bertanha interval: densities must be nonnegative");
  BertanhaInterval out;
  const double lower_thr = std::abs(f0 * f0 - f1 * f1) / (2.0 * M);
  const double upper_thr = (f0 * f0 + f1 * f1) / (2.0 * M);
  const double to_theta = 1.0 / log_ratio;
  if (B < lower_thr) {
    out.kind = BertanhaInterval::Kind::Empty;
    return out;
  }
  const double v_lo = (-(f0 + f1) / 2.0 + std::sqrt((f0 * f0 + f1 * f1) / 2.0 + M * B)) / (M / 2.0);
  out.lower = (v_lo - (k1 - k0)) * to_theta;
  if (B < upper_thr) {
    out.kind = BertanhaInterval::Kind::Interval;
    const double v_hi = ((f0 + f1) / 2.0 - std::sqrt((f0 * f0 + f1 * f1) / 2.0 - M * B)) / (M / 2.0);
    out.upper = (v_hi - (k1 - k0)) * to_theta;
  } else {
    out.kind = BertanhaInterval::Kind::HalfLine;
    out.upper = std::numeric_limits<double>::infinity();
  }
  return out;
}

namespace {

Eigen::Matrix2d pinv2(const Eigen::Matrix2d& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
  const Eigen::Vector2d ev = es.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  Eigen::Vector2d inv;
  for (int i = 0; i < 2; ++i) inv(i) = ev(i) > tol ? 1.0 / ev(i) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

int row_rank(const Eigen::Matrix2d& W, const std::vector<int>& rows) {
  if (rows.empty()) return 0;
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = W.row(rows[r]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
  const auto& sv = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, W.cwiseAbs().maxCoeff());
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

}  // namespace

QlrResult qlr_test(const QlrInput& in) {
  if (!(in.alpha > 0.0 && in.alpha < 1.0)) throw DomainError("QLR: alpha must lie in (0,1)");
  if (!(in.n > 0.0)) throw DomainError("QLR: n must be positive");
  const Eigen::Matrix2d V = 0.5 * (in.V + in.V.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(V);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, V.cwiseAbs().maxCoeff()))
    throw DomainError("QLR: V must be positive semidefinite");

  // The tested vector is u = A mu with A = diag(1, -1); its covariance is A V A.
  const Eigen::Matrix2d A = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  const Eigen::Matrix2d W = pinv2(A * V * A);
  const Eigen::Vector2d uhat(in.mu1_hat, -in.mu2_hat);
  const Eigen::Vector2d& b = in.bias;
  const double ftol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff() + uhat.cwiseAbs().maxCoeff());
  auto value = [&](const Eigen::Vector2d& u) { return in.n * (uhat - u).dot(W * (uhat - u)); };

  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best_u = b;
  std::vector<int> best_J;
  auto consider = [&](const Eigen::Vector2d& u, std::vector<int> J) {
    if (u(0) > b(0) + ftol || u(1) > b(1) + ftol) return;
    const double v = value(u);
    if (!std::isfinite(best) || v < best - 1e-12 * std::max(1.0, best)) {
      best = v;
      best_u = u;
      best_J = std::move(J);
    }
  };
  consider(uhat, {});
  for (int fixed = 0; fixed < 2; ++fixed) {
    const int free = 1 - fixed;
    Eigen::Vector2d u;
    u(fixed) = b(fixed);
    const double d_fixed = uhat(fixed) - b(fixed);
    const double d_free = W(free, free) > 1e-14 ? -W(free, fixed) * d_fixed / W(free, free) : 0.0;
    u(free) = uhat(free) - d_free;
    consider(u, {fixed});
  }
  consider(b, {0, 1});

  QlrResult out;
  out.stat = std::max(0.0, best);
  out.mu_star = Eigen::Vector2d(best_u(0), -best_u(1));
  out.binding = best_J;
  out.df = row_rank(W, best_J);
  out.cv = out.df > 0 ? chi2_quantile(1.0 - in.alpha, out.df) : 0.0;
  out.reject = out.df > 0 && out.stat > out.cv;
  return out;
}

PartialIdMoments partial_id_moments(const Dataset& data, const StructuralModel& model, const Eigen::VectorXd& theta,
                                    const EnvelopePair& env, int kappa, int ell) {
  env.validate();
  if (ell < 1 || kappa < 1) throw DomainError("partial id: need ell >= 1 and kappa >= 1");
  const EstimationSample sample = construct_estimation_sample(data, model, theta);
  const double n = static_cast<double>(sample.n_total);
  const double ET = data.t.sum() / n;
  if (!(ET > 0.0)) throw DataError("partial id: weights have zero mean");
  if (std::abs(env.lower.knots.front() - sample.k0) > 1e-12 || std::abs(env.upper.knots.front() - sample.k0) > 1e-12)
    throw DataError("partial id: the first envelope knot must equal k0");

  PartialIdMoments out;
  out.n = sample.n_total;
  out.kbar1 = sample.kbar1;
  out.B_hat = sample.B_hat / ET;

  // Influence of B_hat / E_hat[T] on every unit.
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(sample.n_total, 2);
  Eigen::VectorXd in_window = Eigen::VectorXd::Zero(sample.n_total);
  for (std::size_t b = 0; b < sample.bunch_index.size(); ++b) in_window(sample.bunch_index[b]) = 1.0;
  const Eigen::VectorXd psi_B = (data.t.array() * in_window.array() - out.B_hat * data.t.array()) / ET;
  psi.col(0) -= psi_B;
  psi.col(1) -= psi_B;

  const PiecewisePoly* envs[2] = {&env.lower, &env.upper};
  double series[2] = {0.0, 0.0};
  for (int e = 0; e < 2; ++e) {
    const PiecewisePoly& f = *envs[e];
    for (std::size_t s = 0; s < f.pieces.size(); ++s) {
      const double ts = f.knots[s];
      if (ts >= sample.kbar1) continue;  // (R - t_s)_+ vanishes for every unit
      Poly delta = f.pieces[s].recentered(ts);
      if (s > 0) delta = delta - f.pieces[s - 1].recentered(ts);
      const double shift = ts - sample.k0;
      for (int j = 1; j <= ell; ++j) {
        const Eigen::VectorXd v = (sample.w.array() - shift).max(0.0).pow(j).matrix();
        const ConditionalMomentFit cm = fit_conditional_moment(sample, v, kappa);
        // Linear functional of the orthonormal coefficients.
        Eigen::VectorXd L(kappa);
        for (int m = 0; m < kappa; ++m) {
          const Poly basis_m = cm.basis->polynomial(Eigen::VectorXd::Unit(kappa, m)).recentered(ts) * delta;
          L(m) = j - 1 < basis_m.size() ? basis_m.coeffs(j - 1) / j : 0.0;
        }
        series[e] += L.dot(cm.coef);
        const Eigen::VectorXd infl = cm.influence(sample.y0, sample.t) * L;
        for (Eigen::Index i = 0; i < sample.size(); ++i) psi(sample.index[static_cast<std::size_t>(i)], e) += infl(i);
      }
    }
  }
  out.mu1_hat = series[0] - out.B_hat;
  out.mu2_hat = series[1] - out.B_hat;
  // Influence terms above are centered for the least-squares parts; center the share part as well.
  Eigen::MatrixXd centered = psi.rowwise() - psi.colwise().mean();
  out.V = centered.transpose() * centered / n;
  return out;
}

std::vector<PartialIdPoint> partial_id_grid(const Dataset& data, const StructuralModel& model,
                                            const std::vector<double>& grid, const EnvelopePair& env, int kappa,
                                            int ell, const Eigen::Vector2d& bias, double alpha, int workers) {
  std::vector<PartialIdPoint> out(grid.size());
  parallel_for(
      grid.size(),
      [&](std::size_t g) {
        PartialIdPoint& p = out[g];
        p.theta = grid[g];
        try {
          p.moments = partial_id_moments(data, model, theta_vec(grid[g]), env, kappa, ell);
          QlrInput in;
          in.mu1_hat = p.moments.mu1_hat;
          in.mu2_hat = p.moments.mu2_hat;
          in.V = p.moments.V;
          in.bias = bias;
          in.alpha = alpha;
          in.n = static_cast<double>(p.moments.n);
          p.qlr = qlr_test(in);
          p.ok = true;
        } catch (const std::exception& e) {
          p.ok = false;
          p.error = e.what();
        }
      },
      workers);
  return out;
}

}  // namespace bunching
