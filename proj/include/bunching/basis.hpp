#pragma once

#include "bunching/errors.hpp"
#include "bunching/poly.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

namespace bunching {

// Union of two closed-open pieces [lo, gap_lo] U (gap_hi, hi]. A piece with
// zero length is allowed (gap_lo == lo or gap_hi == hi), as is an empty gap.
struct Region {
  double lo = 0.0;
  double gap_lo = 0.0;
  double gap_hi = 0.0;
  double hi = 1.0;

  static Region full(double lo, double hi) { return {lo, hi, hi, hi}; }
  double length() const { return (gap_lo - lo) + (hi - gap_hi); }
  bool contains(double y) const { return (y >= lo && y <= gap_lo) || (y > gap_hi && y <= hi); }
};

struct BasisSpec {
  int k = 1;         // basis dimension
  double k0 = 0.0;   // expansion point
  double lo = 0.0;   // support
  double hi = 1.0;
  Region S = Region::full(0.0, 1.0);

  void validate() const;
};

// z_k(y) = (1, y - k0, ..., (y - k0)^{k-1})
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> monomial_basis(const Scalar& y, const BasisSpec& spec) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z(spec.k);
  const Scalar u = y - Scalar(spec.k0);
  Scalar p(1);
  for (int m = 0; m < spec.k; ++m) {
    z(m) = p;
    p *= u;
  }
  return z;
}

// Integral of (y - k0)^p over [a, b], from the antiderivative.
template <typename Scalar>
Scalar monomial_integral(int p, Scalar k0, Scalar a, Scalar b) {
  using std::pow;
  return (pow(b - k0, p + 1) - pow(a - k0, p + 1)) / Scalar(p + 1);
}

// H_k = int_support z z' dy and Q_k = int_S z z' dy, exact monomial integrals.
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>,
          Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>
gram_matrices(const BasisSpec& spec) {
  spec.validate();
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Scalar k0(spec.k0);
  Mat H(spec.k, spec.k), Q(spec.k, spec.k);
  for (int a = 0; a < spec.k; ++a) {
    for (int b = 0; b < spec.k; ++b) {
      const int p = a + b;
      H(a, b) = monomial_integral<Scalar>(p, k0, Scalar(spec.lo), Scalar(spec.hi));
      Q(a, b) = monomial_integral<Scalar>(p, k0, Scalar(spec.S.lo), Scalar(spec.S.gap_lo)) +
                monomial_integral<Scalar>(p, k0, Scalar(spec.S.gap_hi), Scalar(spec.S.hi));
      using std::isfinite;
      if (!isfinite(static_cast<double>(H(a, b))) || !isfinite(static_cast<double>(Q(a, b))))
        throw NumericalError("Gram matrix entries overflow; rescale the support or lower k");
    }
  }
  return {H, Q};
}

// [A_k^{-1}]_{j+1,j+1} for the unscaled Hilbert matrix A_k = (1/(a+b+1)) on [0,1].
double hilbert_inverse_diag(int k, int j);

// [G_k^{-1}]_{j+1,j+1} for G_k = (1/2) int_{-1}^{1} x^{a+b} dx, from the
// parity split of the Legendre expansion.
double symmetric_gram_inverse_diag(int k, int j);

// chi_k = lambda_min(H^{-1/2} Q H^{-1/2}), the generalized eigenvalue of (Q, H).
double extrapolation_norm(const BasisSpec& spec);

// Gauss-Legendre nodes and weights on [a, b] (Golub-Welsch).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n, double a, double b);

// Orthonormal Legendre basis on [lo, hi] w.r.t. dy, with the change of basis
// to monomials in (y - k0). If o(y) = P z(y) then f = o'c = z'(P'c), and
// to_monomial() returns P'.
class OrthoBasis {
 public:
  OrthoBasis(int k, double lo, double hi, double k0);

  int size() const { return k_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double k0() const { return k0_; }

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eval(const Scalar& y) const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> o(k_);
    const Scalar x = Scalar(2.0) * (y - Scalar(lo_)) / Scalar(hi_ - lo_) - Scalar(1.0);
    Scalar pm1(1), p(x);
    o(0) = Scalar(1);
    if (k_ > 1) o(1) = x;
    for (int m = 1; m + 1 < k_; ++m) {
      const Scalar next = (Scalar(2 * m + 1) * x * p - Scalar(m) * pm1) / Scalar(m + 1);
      pm1 = p;
      p = next;
      o(m + 1) = p;
    }
    for (int m = 0; m < k_; ++m) o(m) *= Scalar(norm_(m));
    return o;
  }

  // n x k matrix with rows o(y_i)'.
  Eigen::MatrixXd design(const Eigen::VectorXd& y) const;
  // int_a^b o(y) dy, exact.
  Eigen::VectorXd integral(double a, double b) const;
  Eigen::VectorXd integral(const Region& S) const;
  // int_S o o' dy, exact (Gauss-Legendre with k nodes per piece).
  Eigen::MatrixXd gram(const Region& S) const;

  const Eigen::MatrixXd& to_monomial() const { return to_monomial_; }
  Eigen::VectorXd monomial_coefficients(const Eigen::VectorXd& c) const { return to_monomial_ * c; }
  Poly polynomial(const Eigen::VectorXd& c) const { return Poly(k0_, to_monomial_ * c); }

 private:
  int k_;
  double lo_, hi_, k0_;
  Eigen::VectorXd norm_;
  Eigen::MatrixXd to_monomial_;
};

// Symmetric inverse square root via eigendecomposition (for small, well-conditioned H).
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& H);

}  // namespace bunching
