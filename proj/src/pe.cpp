#include "bunching/pe.hpp"

#include "bunching/basis.hpp"
#include "bunching/errors.hpp"
#include "bunching/stats.hpp"

#include <cmath>
#include <sstream>

namespace bunching {

namespace {

int aligned_index(double edge, double lo, double mesh, const char* what) {
  const double r = (edge - lo) / mesh;
  const double rr = std::round(r);
  if (std::abs(r - rr) > 1e-9 * std::max(1.0, std::abs(r))) {
    std::ostringstream os;
    os << what << " = " << edge << " is not on a bin edge (lo = " << lo << ", mesh = " << mesh << ")";
    throw DataError(os.str());
  }
  return static_cast<int>(rr);
}

void locate_window(Histogram& h, double k0, double k1, double k) {
  h.w_begin = aligned_index(k0, h.lo, h.mesh, "window lower edge");
  h.w_end = aligned_index(k1, h.lo, h.mesh, "window upper edge");
  h.cutoff_bin = static_cast<int>(std::floor((k - h.lo) / h.mesh + 1e-9));
  h.validate();
}

}  // namespace

Eigen::VectorXd Histogram::centers() const {
  Eigen::VectorXd c(bins());
  for (int b = 0; b < bins(); ++b) c(b) = center(b);
  return c;
}

void Histogram::validate() const {
  if (!(mesh > 0.0)) throw DataError("histogram mesh must be positive");
  if (shares.size() < 2) throw DataError("histogram needs at least two bins");
  if ((shares.array() < 0.0).any() || !shares.allFinite()) throw DataError("histogram shares must be finite and >= 0");
  if (std::abs(shares.sum() - 1.0) > 1e-8) throw DataError("histogram shares must sum to one");
  if (!(0 < w_begin && w_begin < w_end && w_end < bins()))
    throw DataError("window must lie strictly inside the histogram range");
  if (cutoff_bin < w_begin || cutoff_bin >= w_end) throw DataError("cutoff bin must lie inside the window");
}

std::pair<double, double> aligned_support(double ymin, double ymax, double k0, double k1, double mesh) {
  if (!(mesh > 0.0)) throw DomainError("mesh must be positive");
  const double below = std::max(1.0, std::ceil((k0 - ymin) / mesh - 1e-9));
  const double above = std::max(1.0, std::ceil((ymax - k1) / mesh + 1e-9));
  return {k0 - below * mesh, k1 + above * mesh};
}

Histogram bin_histogram(const Eigen::VectorXd& y, double mesh, double lo, double hi, double k0, double k1, double k) {
  if (y.size() == 0) throw DataError("cannot bin an empty sample");
  if (!(mesh > 0.0 && hi > lo)) throw DomainError("bin_histogram: need mesh > 0 and lo < hi");
  Histogram h;
  h.lo = lo;
  h.mesh = mesh;
  const int nb = aligned_index(hi, lo, mesh, "support upper edge");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(nb);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y(i) >= lo && y(i) < hi)) continue;
    const int b = std::min(nb - 1, static_cast<int>(std::floor((y(i) - lo) / mesh)));
    counts(b) += 1.0;
  }
  if (counts.sum() <= 0.0) throw DataError("no observations inside the histogram support");
  h.shares = counts / counts.sum();
  locate_window(h, k0, k1, k);
  return h;
}

Histogram histogram_from_centers(const Eigen::VectorXd& centers, const Eigen::VectorXd& shares, double k0, double k1,
                                 double k) {
  if (centers.size() != shares.size() || centers.size() < 2) throw DataError("histogram: need matching centers and shares");
  Histogram h;
  h.mesh = centers(1) - centers(0);
  if (!(h.mesh > 0.0)) throw DataError("histogram centers must be increasing");
  for (Eigen::Index b = 1; b < centers.size(); ++b) {
    const double gap = centers(b) - centers(b - 1);
    if (std::abs(gap - h.mesh) > 1e-9 * h.mesh) {
      std::ostringstream os;
      os << "histogram bins are not equispaced at bin " << b << " (gap " << gap << " vs mesh " << h.mesh << ")";
      throw DataError(os.str());
    }
  }
  h.lo = centers(0) - 0.5 * h.mesh;
  h.shares = shares;
  locate_window(h, k0, k1, k);
  return h;
}

double small_kink_theta(double B_hat, double f_hat, double k, double tau0, double tau1) {
  if (!(f_hat > 0.0)) throw DomainError("small-kink elasticity needs a positive density at the cutoff");
  if (!(k > 0.0)) throw DomainError("small-kink elasticity needs k > 0");
  if (!(tau0 < tau1)) throw DomainError("small-kink elasticity needs tau0 < tau1");
  return (B_hat / f_hat) / (k * std::log((1.0 - tau0) / (1.0 - tau1)));
}

namespace {

struct Design {
  OrthoBasis basis;
  Eigen::MatrixXd Z;     // bins x (degree+1)
  Eigen::MatrixXd D;     // window dummies
  Eigen::VectorXd mask;  // right of the window
  double P_R = 0.0;
};

Design make_design(const Histogram& h, int degree) {
  h.validate();
  if (degree < 0) throw DomainError("PE degree must be nonnegative");
  const int J = h.bins();
  const int m = h.w_end - h.w_begin;
  if (degree + 1 + m > J) throw DataError("PE design has more parameters than bins");
  Design d{OrthoBasis(degree + 1, h.lo, h.lo + J * h.mesh, 0.0), {}, {}, {}, 0.0};
  d.Z = d.basis.design(h.centers());
  d.D = Eigen::MatrixXd::Zero(J, m);
  for (int l = 0; l < m; ++l) d.D(h.w_begin + l, l) = 1.0;
  d.mask = Eigen::VectorXd::Zero(J);
  d.mask.tail(J - h.w_end).setOnes();
  d.P_R = d.mask.dot(h.shares);
  if (!(d.P_R > 0.0)) throw DataError("PE: no mass to the right of the window");
  return d;
}

// Fills f_hat, theta_hat, se_theta and the monomial gamma from the fitted
// orthonormal coefficients c and fixed effects beta.
void finalize(const Histogram& h, const Design& d, const Eigen::VectorXd& c, const PolicySpec& policy, double n,
              bool window_average, PeEstimate& e) {
  const int J = h.bins();
  const int p = static_cast<int>(c.size());
  const int m = static_cast<int>(e.beta.size());
  e.P_R = d.P_R;
  e.B_hat = e.beta.sum();
  e.gamma = d.basis.polynomial(c).coeffs;
  e.integral = (d.Z * c).sum();
  Eigen::RowVectorXd zstar;
  if (window_average)
    zstar = d.Z.middleRows(h.w_begin, m).colwise().mean() / h.mesh;
  else
    zstar = d.Z.row(h.cutoff_bin) / h.mesh;
  e.f_hat = zstar.dot(c);
  e.theta_hat = small_kink_theta(e.B_hat, e.f_hat, policy.k, policy.tau0, policy.tau1);

  // Delta method through the IV normal equations; the regressors depend on f.
  Eigen::MatrixXd X(J, p + m), W(J, p + m);
  X << d.Z, d.D;
  W << d.Z, d.D;
  for (int l = 0; l < m; ++l) X.col(p + l) -= (h.shares.array() * d.mask.array() / d.P_R).matrix();
  Eigen::MatrixXd G = d.mask.asDiagonal();
  G -= (h.shares.cwiseProduct(d.mask)) * d.mask.transpose() / d.P_R;
  G *= -e.B_hat / d.P_R;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(J, J);
  const Eigen::MatrixXd Db = (W.transpose() * X).fullPivLu().solve(W.transpose() * (I - G));
  const double scale = policy.k * policy.log_ratio();
  Eigen::VectorXd gb(p + m);
  gb.head(p) = -e.B_hat / (e.f_hat * e.f_hat * scale) * zstar.transpose();
  gb.tail(m).setConstant(1.0 / (e.f_hat * scale));
  const Eigen::VectorXd g = Db.transpose() * gb;
  const Eigen::ArrayXd var_f = h.shares.array() * (1.0 - h.shares.array()) / n;
  e.se_theta = std::sqrt((g.array().square() * var_f).sum());
}

}  // namespace

PeEstimate pe_iv_estimate(const Histogram& h, int degree, const PolicySpec& policy, double n, bool window_average) {
  if (!(n > 0.0)) throw DomainError("PE: sample size must be positive");
  const Design d = make_design(h, degree);
  const int p = degree + 1;
  const int m = static_cast<int>(d.D.cols());
  const int J = h.bins();
  Eigen::MatrixXd X(J, p + m), W(J, p + m);
  X << d.Z, d.D;
  W << d.Z, d.D;
  for (int l = 0; l < m; ++l) X.col(p + l) -= (h.shares.array() * d.mask.array() / d.P_R).matrix();
  const Eigen::MatrixXd M = W.transpose() * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (lu.rank() < p + m) throw NumericalError("PE: IV moment matrix is rank deficient; lower the degree");
  const Eigen::VectorXd b = lu.solve(W.transpose() * h.shares);

  PeEstimate e;
  e.degree = degree;
  e.beta = b.tail(m);
  e.residuals = h.shares - X * b;
  finalize(h, d, b.head(p), policy, n, window_average, e);
  return e;
}

PeEstimate pe_iterative(const Histogram& h, int degree, const PolicySpec& policy, double n, int max_iter, double tol,
                        bool window_average) {
  if (!(n > 0.0)) throw DomainError("PE: sample size must be positive");
  const Design d = make_design(h, degree);
  const int p = degree + 1;
  const int m = static_cast<int>(d.D.cols());
  const int J = h.bins();
  Eigen::MatrixXd R(J, p + m);
  R << d.Z, d.D;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(R);
  if (qr.rank() < p + m) throw NumericalError("PE: regression design is rank deficient; lower the degree");
  const Eigen::VectorXd adj = h.shares.cwiseProduct(d.mask) / d.P_R;
  auto regress_B = [&](double B) { return Eigen::VectorXd(qr.solve(h.shares + B * adj)); };

  PeEstimate e;
  e.degree = degree;
  e.phi0 = regress_B(0.0).tail(m).sum();
  e.phi1 = qr.solve(adj).tail(m).sum();
  if (std::abs(e.phi1) >= 1.0) {
    std::ostringstream os;
    os << "PE iteration does not contract: affine slope " << e.phi1;
    throw NumericalError(os.str());
  }
  double B = 0.0;
  Eigen::VectorXd b;
  int it = 0;
  for (; it < max_iter; ++it) {
    b = regress_B(B);
    const double next = b.tail(m).sum();
    const double step = std::abs(next - B);
    B = next;
    if (step < tol) break;
  }
  if (it == max_iter) throw NumericalError("PE iteration did not converge within max_iter");
  e.iterations = it + 1;
  e.beta = b.tail(m);
  e.residuals = h.shares + B * adj - R * b;
  finalize(h, d, b.head(p), policy, n, window_average, e);
  return e;
}

bool pe_rejects(const PeEstimate& e, double theta, double alpha) {
  if (!(e.se_theta > 0.0)) throw NumericalError("PE standard error is zero");
  return std::abs(e.theta_hat - theta) / e.se_theta > normal_quantile(1.0 - alpha / 2.0);
}

}  // namespace bunching
