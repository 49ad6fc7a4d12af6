#include "bunching/errors.hpp"
#include "bunching/sieve.hpp"

#include <doctest.h>

#include <random>

using namespace bunching;

namespace {

// Censored sample on [lo, k0] U (kbar1, hi] with the given y0, t, w.
EstimationSample make_sample(const Eigen::VectorXd& y0, const Eigen::VectorXd& t, const Eigen::VectorXd& w,
                             Eigen::Index n_total, double lo = 0.8, double k0 = 1.7, double kbar1 = 2.6,
                             double hi = 7.9) {
  EstimationSample s;
  s.y0 = y0;
  s.t = t;
  s.w = w;
  s.lo = lo;
  s.k0 = k0;
  s.kbar1 = kbar1;
  s.hi = hi;
  s.n_total = n_total;
  for (Eigen::Index i = 0; i < y0.size(); ++i) s.index.push_back(i);
  return s;
}

// Draws from a smooth decreasing density on S by rejection.
EstimationSample random_sample(std::mt19937_64& rng, int n, int dropped, bool random_w = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd y(n), t(n), w(n);
  int m = 0;
  while (m < n) {
    const double c = 0.8 + 7.1 * u(rng);
    if (c > 1.7 && c <= 2.6) continue;
    if (u(rng) > std::exp(-0.3 * (c - 0.8))) continue;
    y(m) = c;
    t(m) = 0.5 + u(rng);
    w(m) = random_w ? 0.6 + 0.5 * u(rng) : 0.9;
    ++m;
  }
  return make_sample(y, t, w, n + dropped);
}

double integral_S(int m, const Region& S, double k0) {
  return monomial_integral<double>(m, k0, S.lo, S.gap_lo) + monomial_integral<double>(m, k0, S.gap_hi, S.hi);
}

Eigen::VectorXd z_of(double y, double k0, int k) {
  Eigen::VectorXd z(k);
  double p = 1.0;
  for (int m = 0; m < k; ++m) {
    z(m) = p;
    p *= y - k0;
  }
  return z;
}

}  // namespace

TEST_CASE("kappa = 1 closed form") {
  std::mt19937_64 rng(1);
  auto s = random_sample(rng, 500, 80);
  for (int j : {0, 1, 3}) {
    const SieveFit f = fit_density_moment(s, j, 1);
    const double mass = (s.t.array() * s.w.array().pow(j)).sum() / static_cast<double>(s.n_total);
    const double level = mass / s.region().length();
    CHECK(std::abs(f.gamma(0) - level) <= 1e-12 * level);
    // Influence: nu_i = a_i / |S|.
    const InfluenceSet inf = influence_vectors(f, s.y0);
    const Eigen::VectorXd a = s.t.array() * s.w.array().pow(j);
    CHECK((inf.nu.col(0) - a / s.region().length()).cwiseAbs().maxCoeff() <= 1e-12 * a.maxCoeff());
  }
}

TEST_CASE("uniform data gives a flat fit") {
  // Gauss-Legendre points weighted so the sample moments are those of a flat
  // density of level c on S.
  const double c = 0.12;
  const Region S{0.8, 1.7, 2.6, 7.9};
  const auto [x1, w1] = gauss_legendre(6, S.lo, S.gap_lo);
  const auto [x2, w2] = gauss_legendre(6, S.gap_hi, S.hi);
  const Eigen::Index n = 1000;
  Eigen::VectorXd y(12), t(12);
  y << x1, x2;
  t << w1, w2;
  t *= static_cast<double>(n) * c;
  const auto s = make_sample(y, t, Eigen::VectorXd::Ones(12), n);
  const SieveFit f = fit_density_moment(s, 1, 3);
  CHECK(f.gamma(0) == doctest::Approx(c).epsilon(1e-10));
  CHECK(std::abs(f.gamma(1)) <= 1e-10);
  CHECK(std::abs(f.gamma(2)) <= 1e-10);
}

TEST_CASE("constant w scales the fit") {
  std::mt19937_64 rng(2);
  const auto s = random_sample(rng, 800, 100, false);
  const SieveFit f1 = fit_density_moment(s, 1, 5);
  const SieveFit f2 = fit_density_moment(s, 2, 5);
  CHECK((f2.gamma - 0.9 * f1.gamma).cwiseAbs().maxCoeff() <= 1e-9 * f1.gamma.cwiseAbs().maxCoeff());
}

TEST_CASE("first-order condition, integral identity and positivity") {
  std::mt19937_64 rng(3);
  for (int r = 0; r < 10; ++r) {
    const auto s = random_sample(rng, 2000, 300);
    for (int j = 1; j <= 3; ++j) {
      const SieveFit f = fit_density_moment(s, j, 6);
      CHECK(f.converged);
      CHECK(f.foc_residual <= 1e-8);
      const double mass = f.a.sum() / static_cast<double>(s.n_total);
      double lhs = 0.0;
      for (int m = 0; m < 6; ++m) lhs += integral_S(m, s.region(), s.k0) * f.gamma(m);
      CHECK(std::abs(lhs - mass) <= 1e-10);
      CHECK(f.fitted.minCoeff() > 0.0);
    }
  }
}

TEST_CASE("the fit is a maximum of the concave objective") {
  std::mt19937_64 rng(4);
  const auto s = random_sample(rng, 1000, 100);
  const SieveFit f = fit_density_moment(s, 1, 4);
  const double n = static_cast<double>(s.n_total);
  auto obj = [&](const Eigen::VectorXd& g) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) v += f.a(i) / n * std::log(z_of(s.y0(i), s.k0, 4).dot(g));
    for (int m = 0; m < 4; ++m) v -= integral_S(m, s.region(), s.k0) * g(m);
    return v;
  };
  const double best = obj(f.gamma);
  std::normal_distribution<double> nd;
  for (int r = 0; r < 50; ++r) {
    Eigen::VectorXd d(4);
    for (int m = 0; m < 4; ++m) d(m) = nd(rng) * 1e-3 / std::pow(3.0, m);
    CHECK(obj(f.gamma + d) <= best + 1e-15);
  }
}

TEST_CASE("orthonormal and raw monomial fits agree") {
  // Raw-monomial damped Newton on a well-conditioned instance.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 600, k = 3;
  Eigen::VectorXd y(n), t = Eigen::VectorXd::Ones(n), w = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    double c;
    do c = std::sqrt(u(rng)); while (c > 0.4 && c <= 0.6);
    y(i) = c;
  }
  const auto s = make_sample(y, t, w, n + 50, 0.0, 0.4, 0.6, 1.0);
  const SieveFit f = fit_density_moment(s, 1, k);

  Eigen::VectorXd q(k);
  for (int m = 0; m < k; ++m) q(m) = integral_S(m, s.region(), s.k0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
  g(0) = static_cast<double>(n) / (n + 50) / 0.8;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd grad = -q;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd z = z_of(y(i), 0.4, k);
      const double fi = z.dot(g);
      grad += z / fi / (n + 50);
      H += z * z.transpose() / (fi * fi) / (n + 50);
    }
    if (grad.lpNorm<Eigen::Infinity>() < 1e-13) break;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    double a = 1.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd z = z_of(y(i), 0.4, k);
      while (z.dot(g + a * step) <= 0.0) a *= 0.5;
    }
    g += a * step;
  }
  CHECK((f.gamma - g).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("influence vectors match the monomial-coordinate formula") {
  std::mt19937_64 rng(6);
  const auto s = random_sample(rng, 300, 40);
  const int k = 3;
  const SieveFit f = fit_density_moment(s, 2, k);
  const InfluenceSet inf = influence_vectors(f, s.y0);
  const double n = static_cast<double>(s.n_total);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd mbar = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Eigen::VectorXd z = z_of(s.y0(i), s.k0, k);
    const double fi = z.dot(f.gamma);
    M += f.a(i) * z * z.transpose() / (fi * fi) / n;
    mbar += f.a(i) * z / fi / n;
  }
  const Eigen::MatrixXd Minv = M.fullPivLu().inverse();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Eigen::VectorXd z = z_of(s.y0(i), s.k0, k);
    const Eigen::VectorXd nu = Minv * z * f.a(i) / z.dot(f.gamma);
    CHECK((inf.nu.row(i).transpose() - nu).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + nu.cwiseAbs().maxCoeff()));
  }
  const Eigen::VectorXd mean = inf.nu.colwise().sum().transpose() / n;
  CHECK((mean - Minv * mbar).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + mean.cwiseAbs().maxCoeff()));
  // With the FOC, M^{-1} mbar is gamma itself.
  CHECK((mean - f.gamma).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + f.gamma.cwiseAbs().maxCoeff()));
}

TEST_CASE("equal inputs give equal influence vectors") {
  Eigen::VectorXd y(8);
  y << 1.0, 1.0, 1.4, 3.0, 3.0, 5.0, 6.5, 7.5;
  const auto s = make_sample(y, Eigen::VectorXd::Ones(8), Eigen::VectorXd::Constant(8, 0.7), 10);
  const SieveFit f = fit_density_moment(s, 1, 2);
  const InfluenceSet inf = influence_vectors(f, s.y0);
  CHECK((inf.nu.row(0) - inf.nu.row(1)).norm() == 0.0);
  CHECK((inf.nu.row(3) - inf.nu.row(4)).norm() == 0.0);
}

TEST_CASE("sieve errors") {
  Eigen::VectorXd y(3);
  y << 1.0, 3.0, 5.0;
  const auto s = make_sample(y, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3), 4);
  CHECK_THROWS_AS(fit_density_moment(s, 1, 2), DomainError);
  const auto e = make_sample(Eigen::VectorXd(0), Eigen::VectorXd(0), Eigen::VectorXd(0), 4);
  CHECK_THROWS_AS(fit_density_moment(e, 1, 2), DataError);
}

TEST_CASE("conditional moment fits") {
  std::mt19937_64 rng(7);
  auto s = random_sample(rng, 400, 50, false);
  for (int kappa : {1, 3, 6}) {
    const auto fit = fit_conditional_moment(s, 2, kappa);
    CHECK(fit.gamma(0) == doctest::Approx(0.81).epsilon(1e-10));
    if (kappa > 1) CHECK(fit.gamma.tail(kappa - 1).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(fit.polynomial()(4.0) == doctest::Approx(0.81).epsilon(1e-10));
  }
  const auto line = fit_conditional_moment(s, s.y0, 3);
  CHECK(line.gamma(0) == doctest::Approx(s.k0).epsilon(1e-10));
  CHECK(line.gamma(1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(line.gamma(2)) <= 1e-10);
  CHECK(line.derivative_at_k0(1) == doctest::Approx(1.0).epsilon(1e-10));

  // Weighted least squares by an independent QR on the monomial design.
  s = random_sample(rng, 400, 50, true);
  const int k = 3;
  const auto fit = fit_conditional_moment(s, 1, k);
  Eigen::MatrixXd Z(s.size(), k);
  for (Eigen::Index i = 0; i < s.size(); ++i) Z.row(i) = std::sqrt(s.t(i)) * z_of(s.y0(i), s.k0, k).transpose();
  const Eigen::VectorXd rhs = s.t.array().sqrt() * s.w.array();
  const Eigen::VectorXd g = Z.householderQr().solve(rhs);
  CHECK((fit.gamma - g).cwiseAbs().maxCoeff() <= 1e-10);

  Eigen::VectorXd y2(3);
  y2 << 1.0, 1.0, 3.0;
  const auto tiny = make_sample(y2, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3), 3);
  CHECK_THROWS_AS(fit_conditional_moment(tiny, 1, 3), NumericalError);
}
