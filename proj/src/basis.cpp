#include "bunching/basis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bunching {

void BasisSpec::validate() const {
  if (k < 1) throw DomainError("basis dimension must be at least 1");
  if (!(lo < hi)) throw DomainError("basis support must satisfy lo < hi");
  if (!(S.lo >= lo && S.lo <= S.gap_lo && S.gap_lo <= S.gap_hi && S.gap_hi <= S.hi && S.hi <= hi))
    throw DomainError("estimation region must be an ordered subset of the support");
  if (!(S.length() > 0.0)) throw DomainError("estimation region has zero length");
}

namespace {

long double binom(int n, int r) {
  if (r < 0 || r > n) return 0.0L;
  long double out = 1.0L;
  for (int i = 1; i <= r; ++i) out = out * static_cast<long double>(n - r + i) / static_cast<long double>(i);
  return out;
}

long double factorial(int n) {
  long double out = 1.0L;
  for (int i = 2; i <= n; ++i) out *= static_cast<long double>(i);
  return out;
}

}  // namespace

double hilbert_inverse_diag(int k, int j) {
  if (k < 1 || j < 0 || j > k - 1) throw DomainError("hilbert_inverse_diag: need 0 <= j <= k-1");
  const long double a = binom(k + j, k - j - 1);
  const long double b = binom(2 * j, j);
  return static_cast<double>((2.0L * j + 1.0L) * a * a * b * b);
}

double symmetric_gram_inverse_diag(int k, int j) {
  if (k < 1 || j < 0 || j > k - 1) throw DomainError("symmetric_gram_inverse_diag: need 0 <= j <= k-1");
  // Sum of squared coefficients of x^j over the Legendre polynomials of degree
  // m = j + 2r < k, normalized so that (1/2) int P_m^2 = 1.
  long double sum = 0.0L;
  for (int r = 0; 2 * r <= k - j - 1; ++r) {
    const long double ratio = factorial(2 * j + 2 * r) / (factorial(r) * factorial(j + r));
    sum += (2.0L * r + j + 0.5L) / std::pow(16.0L, r) * ratio * ratio;
  }
  const long double fj = factorial(j);
  return static_cast<double>(2.0L * sum / (std::pow(4.0L, j) * fj * fj));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_legendre: need at least one node");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double beta = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = beta;
    J(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Eigen::VectorXd x = es.eigenvalues();
  Eigen::VectorXd w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  const double half = 0.5 * (b - a);
  return {(half * (x.array() + 1.0) + a).matrix(), half * w};
}

OrthoBasis::OrthoBasis(int k, double lo, double hi, double k0) : k_(k), lo_(lo), hi_(hi), k0_(k0) {
  if (k < 1) throw DomainError("basis dimension must be at least 1");
  if (!(lo < hi)) throw DomainError("basis support must satisfy lo < hi");
  norm_.resize(k);
  for (int m = 0; m < k; ++m) norm_(m) = std::sqrt((2.0 * m + 1.0) / (hi - lo));

  // Legendre polynomials in x = alpha (y - k0) + beta, expanded around x = beta.
  const double alpha = 2.0 / (hi - lo);
  const double beta = 2.0 * (k0 - lo) / (hi - lo) - 1.0;
  std::vector<Poly> P;
  P.push_back(Poly::constant(1.0));
  if (k > 1) {
    Eigen::VectorXd c(2);
    c << 0.0, 1.0;
    P.emplace_back(0.0, c);
  }
  Poly xpoly(0.0, (Eigen::VectorXd(2) << 0.0, 1.0).finished());
  for (int m = 1; m + 1 < k; ++m) P.push_back((xpoly * P[m]) * ((2.0 * m + 1.0) / (m + 1.0)) - P[m - 1] * (m / (m + 1.0)));

  to_monomial_ = Eigen::MatrixXd::Zero(k, k);
  for (int m = 0; m < k; ++m) {
    const Poly shifted = P[m].recentered(beta);
    double scale = norm_(m);
    for (Eigen::Index p = 0; p < shifted.size(); ++p) {
      to_monomial_(p, m) = shifted.coeffs(p) * scale;
      scale *= alpha;
    }
  }
}

Eigen::MatrixXd OrthoBasis::design(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd O(y.size(), k_);
  for (Eigen::Index i = 0; i < y.size(); ++i) O.row(i) = eval(y(i)).transpose();
  return O;
}

Eigen::VectorXd OrthoBasis::integral(double a, double b) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k_);
  if (!(b > a)) return out;
  // Antiderivative of the Legendre polynomial L_m in x: (L_{m+1} - L_{m-1}) / (2m + 1).
  auto legendre_all = [&](double x) {
    Eigen::VectorXd L(k_ + 1);
    L(0) = 1.0;
    L(1) = x;
    for (int m = 1; m < k_; ++m) L(m + 1) = ((2.0 * m + 1.0) * x * L(m) - m * L(m - 1)) / (m + 1.0);
    return L;
  };
  const double xa = 2.0 * (a - lo_) / (hi_ - lo_) - 1.0;
  const double xb = 2.0 * (b - lo_) / (hi_ - lo_) - 1.0;
  const Eigen::VectorXd La = legendre_all(xa), Lb = legendre_all(xb);
  const double jac = 0.5 * (hi_ - lo_);
  out(0) = (xb - xa) * jac * norm_(0);
  for (int m = 1; m < k_; ++m) {
    const double Fb = (Lb(m + 1) - Lb(m - 1)) / (2.0 * m + 1.0);
    const double Fa = (La(m + 1) - La(m - 1)) / (2.0 * m + 1.0);
    out(m) = (Fb - Fa) * jac * norm_(m);
  }
  return out;
}

Eigen::VectorXd OrthoBasis::integral(const Region& S) const {
  return integral(S.lo, S.gap_lo) + integral(S.gap_hi, S.hi);
}

Eigen::MatrixXd OrthoBasis::gram(const Region& S) const {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k_, k_);
  auto add_piece = [&](double a, double b) {
    if (!(b > a)) return;
    const auto [x, w] = gauss_legendre(k_, a, b);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const Eigen::VectorXd o = eval(x(i));
      G.noalias() += w(i) * o * o.transpose();
    }
  };
  add_piece(S.lo, S.gap_lo);
  add_piece(S.gap_hi, S.hi);
  return G;
}

double extrapolation_norm(const BasisSpec& spec) {
  spec.validate();
  // chi is invariant to the choice of basis for the span, so it is computed in
  // the orthonormal Legendre basis where H = I.
  const OrthoBasis basis(spec.k, spec.lo, spec.hi, spec.k0);
  const Eigen::MatrixXd Q = basis.gram(spec.S);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin < -1e-10) {
    std::ostringstream os;
    os << "extrapolation norm: whitened Gram is indefinite (smallest eigenvalue " << lmin << "); lower k";
    throw NumericalError(os.str());
  }
  return std::clamp(lmin, 0.0, 1.0);
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("inverse_sqrt_spd: matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace bunching
