#include "bunching/sieve.hpp"

#include "bunching/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bunching {

namespace {

Eigen::VectorXd region_grid(const Region& S, int points) {
  const double l1 = S.gap_lo - S.lo, l2 = S.hi - S.gap_hi;
  const double total = l1 + l2;
  int n1 = l1 > 0.0 ? std::max(2, static_cast<int>(std::lround(points * l1 / total))) : 0;
  int n2 = l2 > 0.0 ? std::max(2, points - n1) : 0;
  Eigen::VectorXd g(n1 + n2);
  if (n1 > 0) g.head(n1) = Eigen::VectorXd::LinSpaced(n1, S.lo, S.gap_lo);
  if (n2 > 0) g.tail(n2) = Eigen::VectorXd::LinSpaced(n2, S.gap_hi, S.hi);
  return g;
}

double objective(const Eigen::VectorXd& A, const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                 const Eigen::VectorXd& c) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < A.size(); ++i)
    if (A(i) > 0.0) s += A(i) * std::log(f(i));
  return s - g.dot(c);
}

// Largest step in (0, 1] keeping f + s df >= 0.01 f.
double boundary_step(const Eigen::VectorXd& f, const Eigen::VectorXd& df) {
  double s = 1.0;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (df(i) < 0.0) s = std::min(s, -0.99 * f(i) / df(i));
  return s;
}

}  // namespace

SieveFit fit_weighted_density(const Eigen::VectorXd& y, const Eigen::VectorXd& a, Eigen::Index n_total,
                              const Region& S, double k0, double lo, double hi, int kappa, int j,
                              const SieveOptions& opt) {
  if (y.size() == 0) throw DataError("sieve fit: empty estimation sample");
  if (kappa < 1) throw DomainError("sieve fit: kappa must be at least 1");
  if (n_total < y.size()) throw DomainError("sieve fit: n_total smaller than the sample");
  BasisSpec spec{kappa, k0, lo, hi, S};
  spec.validate();

  auto basis = std::make_shared<const OrthoBasis>(kappa, lo, hi, k0);
  const Eigen::MatrixXd O = basis->design(y);
  const Eigen::MatrixXd G = basis->design(region_grid(S, opt.grid_points));
  const Eigen::VectorXd g = basis->integral(S);
  const double n = static_cast<double>(n_total);
  const Eigen::VectorXd A = a / n;
  const double mass = A.sum();
  if (!(mass > 0.0)) throw DomainError("sieve fit: sum of t w^j must be positive");

  Eigen::VectorXd c = Eigen::VectorXd::Zero(kappa);
  c(0) = mass / S.length() * std::sqrt(hi - lo);

  SieveFit fit;
  fit.j = j;
  fit.kappa = kappa;
  fit.basis = basis;
  fit.S = S;
  fit.a = a;
  fit.n_total = n_total;

  Eigen::VectorXd f = O * c, fg = G * c;
  Eigen::VectorXd grad;
  int it = 0;
  for (; it <= opt.max_iter; ++it) {
    grad = O.transpose() * (A.array() / f.array()).matrix() - g;
    if (grad.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      fit.converged = true;
      break;
    }
    if (it == opt.max_iter) break;
    const Eigen::VectorXd wts = A.array() / f.array().square();
    const Eigen::MatrixXd Hm = O.transpose() * wts.asDiagonal() * O;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hm);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Hm);
      const auto& sv = svd.singularValues();
      std::ostringstream os;
      os << "sieve fit: singular Hessian (condition number "
         << (sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY) << ", kappa " << kappa << ")";
      throw NumericalError(os.str());
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    const Eigen::VectorXd df = O * step, dg = G * step;
    const double smax = std::min(boundary_step(f, df), boundary_step(fg, dg));
    const double obj0 = objective(A, f, g, c);
    const double slope = grad.dot(step);
    double s = smax;
    if (slope > 1e-13 * (1.0 + std::abs(obj0))) {
      while (true) {
        const Eigen::VectorXd ft = f + s * df;
        if (objective(A, ft, g, c + s * step) >= obj0 + 1e-4 * s * slope) break;
        s *= 0.5;
        if (s < 1e-14) throw NumericalError("sieve fit: line search failed to find an ascent step");
      }
    }
    c += s * step;
    // Recompute rather than update so rounding does not drift into the gradient.
    f = O * c;
    fg = G * c;
  }
  fit.iterations = it;
  fit.foc_residual_ortho = grad.lpNorm<Eigen::Infinity>();
  if (!fit.converged) {
    std::ostringstream os;
    os << "sieve fit did not converge in " << opt.max_iter << " iterations (gradient " << fit.foc_residual_ortho
       << ", kappa " << kappa << ", j " << j << ")";
    throw NumericalError(os.str());
  }

  // Monomial-coordinate FOC residual, accumulated in long double with exact
  // monomial integrals; the powers reach (hi - k0)^(kappa - 1).
  using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  auto monomial_residual = [&](const LVec& cl) {
    LVec rz = LVec::Zero(kappa);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const long double yi = y(i);
      rz += (static_cast<long double>(A(i)) / basis->eval(yi).dot(cl)) * monomial_basis(yi, spec);
    }
    for (int m = 0; m < kappa; ++m)
      rz(m) -= monomial_integral<long double>(m, k0, S.lo, S.gap_lo) +
               monomial_integral<long double>(m, k0, S.gap_hi, S.hi);
    return rz;
  };
  // Iterative refinement of the converged fit: the residual above maps to the
  // orthonormal gradient through to_monomial(), and the double Hessian gives
  // the correction. Without it the monomial residual sits near 1e-8 at
  // kappa = 10 even with a gradient at machine precision.
  {
    const Eigen::VectorXd wts = A.array() / f.array().square();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(O.transpose() * wts.asDiagonal() * O);
    const Eigen::MatrixXd P = basis->to_monomial().transpose();
    LVec cl = c.cast<long double>();
    for (int r = 0; r < 3; ++r) {
      const Eigen::VectorXd go = P * monomial_residual(cl).cast<double>();
      cl += ldlt.solve(go).cast<long double>();
    }
    const Eigen::VectorXd refined = cl.cast<double>();
    const Eigen::VectorXd fr = O * refined, fgr = G * refined;
    if (fr.minCoeff() > 0.0 && fgr.minCoeff() > 0.0) {
      c = refined;
      f = fr;
      fg = fgr;
    }
  }
  if (fg.minCoeff() <= 0.0 || f.minCoeff() <= 0.0)
    throw NumericalError("sieve fit: fitted density is not positive on the estimation region");

  fit.coef = c;
  fit.gamma = basis->monomial_coefficients(c);
  fit.fitted = f;
  fit.objective = objective(A, f, g, c);
  fit.log_bound = opt.c3 * std::max(j, 1);
  const double sup_log = std::max(std::abs(std::log(fg.minCoeff())), std::abs(std::log(fg.maxCoeff())));
  fit.box_ok = sup_log <= fit.log_bound;
  if (!fit.box_ok) {
    std::ostringstream os;
    os << "sieve fit: sup|log f| = " << sup_log << " exceeds the box level " << fit.log_bound;
    warn(os.str());
  }

  fit.foc_residual = static_cast<double>(monomial_residual(c.cast<long double>()).cwiseAbs().maxCoeff());
  return fit;
}

SieveFit fit_density_moment(const EstimationSample& sample, int j, int kappa, const SieveOptions& opt) {
  if (j < 0) throw DomainError("sieve fit: moment order must be nonnegative");
  const Eigen::VectorXd a = sample.t.array() * sample.w.array().pow(j);
  return fit_weighted_density(sample.y0, a, sample.n_total, sample.region(), sample.k0, sample.lo, sample.hi,
                              kappa, j, opt);
}

InfluenceSet influence_vectors(const SieveFit& fit, const Eigen::VectorXd& y) {
  if (!fit.converged) throw NumericalError("influence vectors need a converged fit");
  const Eigen::MatrixXd O = fit.basis->design(y);
  const double n = static_cast<double>(fit.n_total);
  const Eigen::VectorXd wts = fit.a.array() / fit.fitted.array().square() / n;
  const Eigen::MatrixXd M = O.transpose() * wts.asDiagonal() * O;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
    throw NumericalError("influence vectors: singular weighting matrix");
  const Eigen::VectorXd scale = fit.a.array() / fit.fitted.array();
  InfluenceSet out;
  out.nu_ortho = ldlt.solve(O.transpose() * scale.asDiagonal()).transpose();
  out.nu = out.nu_ortho * fit.basis->to_monomial().transpose();
  return out;
}

Eigen::VectorXd influence_component(const SieveFit& fit, const Eigen::VectorXd& y, int slot) {
  if (slot < 0 || slot >= fit.kappa) throw DomainError("influence component: slot out of range");
  return influence_vectors(fit, y).nu.col(slot);
}

Eigen::MatrixXd ConditionalMomentFit::influence(const Eigen::VectorXd& y, const Eigen::VectorXd& t) const {
  const Eigen::MatrixXd O = basis->design(y);
  const Eigen::VectorXd scale = t.array() * residuals.array();
  return (gram_inv * (O.transpose() * scale.asDiagonal())).transpose();
}

ConditionalMomentFit fit_conditional_moment(const EstimationSample& sample, const Eigen::VectorXd& values,
                                            int kappa) {
  if (sample.size() == 0) throw DataError("conditional moment fit: empty estimation sample");
  if (values.size() != sample.size()) throw DomainError("conditional moment fit: value vector length mismatch");
  ConditionalMomentFit fit;
  fit.basis = std::make_shared<const OrthoBasis>(kappa, sample.lo, sample.hi, sample.k0);
  fit.n_total = sample.n_total;
  const Eigen::MatrixXd O = fit.basis->design(sample.y0);
  const Eigen::VectorXd sw = sample.t.array().sqrt();
  const Eigen::MatrixXd X = sw.asDiagonal() * O;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-12);
  if (qr.rank() < kappa) {
    std::ostringstream os;
    os << "conditional moment fit: design has rank " << qr.rank() << " < kappa = " << kappa << "; lower kappa";
    throw NumericalError(os.str());
  }
  fit.coef = qr.solve((sw.array() * values.array()).matrix());
  fit.gamma = fit.basis->monomial_coefficients(fit.coef);
  fit.residuals = values - O * fit.coef;
  const double n = static_cast<double>(sample.n_total);
  const Eigen::MatrixXd gram = X.transpose() * X / n;
  fit.gram_inv = gram.ldlt().solve(Eigen::MatrixXd::Identity(kappa, kappa));
  return fit;
}

ConditionalMomentFit fit_conditional_moment(const EstimationSample& sample, int j, int kappa) {
  return fit_conditional_moment(sample, sample.w.array().pow(j).matrix(), kappa);
}

Poly fit_conditional_quantile(const EstimationSample& sample, const Eigen::VectorXd& values, double tau,
                              int kappa) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  const OrthoBasis basis(kappa, sample.lo, sample.hi, sample.k0);
  const Eigen::MatrixXd O = basis.design(sample.y0);
  const double scale = std::max(1e-12, (values.array() - values.mean()).abs().maxCoeff());
  const double floor = 1e-8 * scale;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(kappa);
  Eigen::VectorXd wts = sample.t;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd sw = wts.array().sqrt();
    const Eigen::VectorXd cn =
        (sw.asDiagonal() * O).colPivHouseholderQr().solve((sw.array() * values.array()).matrix());
    const double change = (cn - c).lpNorm<Eigen::Infinity>();
    c = cn;
    if (it > 0 && change <= 1e-10 * (1.0 + c.lpNorm<Eigen::Infinity>())) break;
    const Eigen::VectorXd r = values - O * c;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double side = r(i) >= 0.0 ? tau : 1.0 - tau;
      wts(i) = sample.t(i) * side / std::max(std::abs(r(i)), floor);
    }
  }
  return basis.polynomial(c);
}

}  // namespace bunching
