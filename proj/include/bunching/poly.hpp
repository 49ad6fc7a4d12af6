#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <complex>

namespace bunching {

// Dense polynomial p(y) = sum_m c[m] (y - center)^m.
template <typename Scalar>
struct Polynomial {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar center{0};
  Vector coeffs;

  Polynomial() : coeffs(Vector::Zero(1)) {}
  Polynomial(Scalar c, Vector a) : center(c), coeffs(std::move(a)) {
    if (coeffs.size() == 0) coeffs = Vector::Zero(1);
  }

  static Polynomial constant(Scalar value, Scalar c = Scalar(0)) {
    Vector a(1);
    a(0) = value;
    return Polynomial(c, a);
  }

  Eigen::Index size() const { return coeffs.size(); }
  Eigen::Index degree() const { return coeffs.size() - 1; }

  // Horner evaluation; T may be complex for analytic continuation.
  template <typename T>
  auto operator()(const T& y) const {
    using R = decltype(T(y) * Scalar(1));
    const R u = y - T(center);
    R acc = R(coeffs(coeffs.size() - 1));
    for (Eigen::Index m = coeffs.size() - 2; m >= 0; --m) acc = acc * u + R(coeffs(m));
    return acc;
  }

  Polynomial derivative(int order = 1) const {
    if (order <= 0) return *this;
    if (order > degree()) return constant(Scalar(0), center);
    Vector d(coeffs.size() - order);
    for (Eigen::Index m = 0; m < d.size(); ++m) {
      Scalar f(1);
      for (int r = 1; r <= order; ++r) f *= Scalar(m + r);
      d(m) = f * coeffs(m + order);
    }
    return Polynomial(center, d);
  }

  // Same polynomial expressed in powers of (y - new_center).
  Polynomial recentered(Scalar new_center) const {
    Vector a = coeffs;
    const Scalar h = new_center - center;
    const Eigen::Index n = a.size();
    for (Eigen::Index i = 0; i < n - 1; ++i)
      for (Eigen::Index j = n - 2; j >= i; --j) a(j) += h * a(j + 1);
    return Polynomial(new_center, a);
  }

  // D^order p evaluated at y.
  Scalar derivative_at(Scalar y, int order) const { return derivative(order)(y); }

  Polynomial antiderivative() const {
    Vector a = Vector::Zero(coeffs.size() + 1);
    for (Eigen::Index m = 0; m < coeffs.size(); ++m) a(m + 1) = coeffs(m) / Scalar(m + 1);
    return Polynomial(center, a);
  }

  Scalar integrate(Scalar a, Scalar b) const {
    const Polynomial P = antiderivative();
    return P(b) - P(a);
  }

  Polynomial& operator*=(Scalar s) {
    coeffs *= s;
    return *this;
  }
  friend Polynomial operator*(Polynomial p, Scalar s) { return p *= s; }
  friend Polynomial operator*(Scalar s, Polynomial p) { return p *= s; }

  friend Polynomial operator+(const Polynomial& p, const Polynomial& q) {
    const Polynomial qq = q.center == p.center ? q : q.recentered(p.center);
    Vector a = Vector::Zero(std::max(p.size(), qq.size()));
    a.head(p.size()) += p.coeffs;
    a.head(qq.size()) += qq.coeffs;
    return Polynomial(p.center, a);
  }
  friend Polynomial operator-(const Polynomial& p, const Polynomial& q) { return p + (q * Scalar(-1)); }

  // Exact product by coefficient convolution.
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    const Polynomial qq = q.center == p.center ? q : q.recentered(p.center);
    Vector a = Vector::Zero(p.size() + qq.size() - 1);
    for (Eigen::Index i = 0; i < p.size(); ++i)
      for (Eigen::Index j = 0; j < qq.size(); ++j) a(i + j) += p.coeffs(i) * qq.coeffs(j);
    return Polynomial(p.center, a);
  }
};

using Poly = Polynomial<double>;

}  // namespace bunching
