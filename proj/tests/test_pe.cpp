#include "bunching/dgp.hpp"
#include "bunching/errors.hpp"
#include "bunching/pe.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace bunching;

namespace {

PolicySpec policy() { return PolicySpec{}; }

// Window [1.7, 2.3) in 0.05 bins on [0.8, 7.9): 18 bins left, 12 in the window.
Histogram random_histogram(std::mt19937_64& rng, double bump = 0.01) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lo = 0.8, mesh = 0.05;
  const int J = 142;
  Eigen::VectorXd c(J), s(J);
  for (int b = 0; b < J; ++b) c(b) = lo + (b + 0.5) * mesh;
  const double a1 = 0.5 + u(rng), a2 = 0.2 + 0.3 * u(rng);
  for (int b = 0; b < J; ++b) {
    s(b) = (a1 * c(b) + 0.3) * std::exp(-a2 * c(b)) * (1.0 + 0.05 * (u(rng) - 0.5));
    if (c(b) > 1.7 && c(b) < 2.3) s(b) += bump * (1.0 - std::abs(c(b) - 2.0) / 0.3) * (1.0 + u(rng));
  }
  s /= s.sum();
  return histogram_from_centers(c, s, 1.7, 2.3, 2.0);
}

// Design with scaled monomial columns and window dummies.
struct Oracle {
  Eigen::MatrixXd Z, D;
  Eigen::VectorXd mask;
};

Oracle oracle_design(const Histogram& h, int degree) {
  const int J = h.bins();
  const double mid = h.lo + 0.5 * J * h.mesh, half = 0.5 * J * h.mesh;
  Oracle o;
  o.Z.resize(J, degree + 1);
  for (int b = 0; b < J; ++b) {
    const double x = (h.center(b) - mid) / half;
    for (int m = 0; m <= degree; ++m) o.Z(b, m) = std::pow(x, m);
  }
  const int m = h.w_end - h.w_begin;
  o.D = Eigen::MatrixXd::Zero(J, m);
  for (int l = 0; l < m; ++l) o.D(h.w_begin + l, l) = 1.0;
  o.mask = Eigen::VectorXd::Zero(J);
  o.mask.tail(J - h.w_end).setOnes();
  return o;
}

}  // namespace

TEST_CASE("binning") {
  Eigen::VectorXd y(4);
  y << 0.5, 1.5, 2.5, 3.5;
  const Histogram h = bin_histogram(y, 1.0, 0.0, 4.0, 1.0, 3.0, 2.0);
  CHECK(h.shares == Eigen::Vector4d::Constant(0.25));
  CHECK(h.w_begin == 1);
  CHECK(h.w_end == 3);
  CHECK(h.cutoff_bin == 2);  // k on an edge belongs to the bin on its right
  y << 0.2, 0.3, 0.9, 0.99;
  const Histogram one = bin_histogram(y, 1.0, 0.0, 4.0, 1.0, 3.0, 2.0);
  CHECK(one.shares == Eigen::Vector4d(1, 0, 0, 0));
  CHECK_THROWS_AS(bin_histogram(y, 1.0, 0.0, 4.0, 1.5, 3.0, 2.0), DataError);
  CHECK_THROWS_AS(bin_histogram(y, 0.05, 0.8, 7.9, 1.73, 2.3, 2.0), DataError);
}

TEST_CASE("binning a simulated sample matches direct counting") {
  DgpConfig cfg;
  cfg.n = 20000;
  const EtaDistribution eta(cfg);
  const Simulated s = simulate(cfg, eta, 0);
  const auto [lo, hi] = aligned_support(s.data.y.minCoeff(), s.data.y.maxCoeff(), 1.7, 2.3, 0.05);
  CHECK(lo <= s.data.y.minCoeff());
  CHECK(hi > s.data.y.maxCoeff());
  const Histogram h = bin_histogram(s.data.y, 0.05, lo, hi, 1.7, 2.3, 2.0);
  CHECK(h.shares.sum() == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> y(s.data.y.data(), s.data.y.data() + s.data.y.size());
  std::sort(y.begin(), y.end());
  for (int b = 0; b < h.bins(); ++b) {
    const double a = lo + b * 0.05, c = lo + (b + 1) * 0.05;
    const auto count = std::lower_bound(y.begin(), y.end(), c) - std::lower_bound(y.begin(), y.end(), a);
    CHECK(h.shares(b) * 20000.0 == doctest::Approx(static_cast<double>(count)).epsilon(1e-9));
  }
}

TEST_CASE("small-kink elasticity") {
  CHECK(small_kink_theta(0.0, 1.0, 2.0, 0.0, 0.2) == 0.0);
  CHECK(small_kink_theta(0.11157, 1.0, 2.0, 0.0, 0.2) == doctest::Approx(0.25003).epsilon(1e-4));
  CHECK(small_kink_theta(0.44629, 1.0, 2.0, 0.0, 0.2) == doctest::Approx(1.00006).epsilon(1e-4));
  CHECK(small_kink_theta(0.11157, 1.0, 2.0, 0.0, 0.2) == doctest::Approx(0.11157 / (2.0 * std::log(1.25))).epsilon(1e-14));
  CHECK_THROWS_AS(small_kink_theta(0.1, 0.0, 2.0, 0.0, 0.2), DomainError);
  CHECK_THROWS_AS(small_kink_theta(0.1, 1.0, 2.0, 0.2, 0.2), DomainError);
}

TEST_CASE("no excess mass: exact polynomial fit") {
  const double lo = 0.8, mesh = 0.05;
  const int J = 142;
  Eigen::VectorXd c(J), s(J);
  Eigen::Vector4d coef(1.0, 0.4, -0.08, 0.004);
  for (int b = 0; b < J; ++b) {
    c(b) = lo + (b + 0.5) * mesh;
    s(b) = coef(0) + c(b) * (coef(1) + c(b) * (coef(2) + c(b) * coef(3)));
  }
  const double total = s.sum();
  s /= total;
  coef /= total;
  const Histogram h = histogram_from_centers(c, s, 1.7, 2.3, 2.0);
  const PeEstimate e = pe_iv_estimate(h, 3, policy(), 20000.0);
  CHECK(e.beta.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(e.B_hat) <= 1e-12);
  CHECK((e.gamma - coef).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(e.residuals.cwiseAbs().maxCoeff() <= 1e-12);
  const PeEstimate it = pe_iterative(h, 3, policy(), 20000.0);
  CHECK(it.iterations == 1);
  CHECK(std::abs(it.B_hat) <= 1e-12);
}

TEST_CASE("IV estimate matches a dense two-stage solve") {
  std::mt19937_64 rng(1);
  for (int r = 0; r < 20; ++r) {
    const Histogram h = random_histogram(rng);
    const PeEstimate e = pe_iv_estimate(h, 7, policy(), 20000.0);
    const Oracle o = oracle_design(h, 7);
    const int p = 8, m = static_cast<int>(o.D.cols()), J = h.bins();
    const double PR = o.mask.dot(h.shares);
    Eigen::MatrixXd X(J, p + m), W(J, p + m);
    X << o.Z, o.D;
    W << o.Z, o.D;
    for (int l = 0; l < m; ++l) X.col(p + l) -= h.shares.cwiseProduct(o.mask) / PR;
    const Eigen::VectorXd b = (W.transpose() * X).fullPivLu().solve(W.transpose() * h.shares);
    CHECK((e.beta - b.tail(m)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(e.B_hat == doctest::Approx(b.tail(m).sum()).epsilon(1e-9));
    CHECK(e.integral == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(e.P_R == doctest::Approx(PR).epsilon(1e-14));
    // Moment conditions.
    CHECK((W.transpose() * e.residuals).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("IV and iteration agree") {
  std::mt19937_64 rng(2);
  for (int r = 0; r < 50; ++r) {
    const Histogram h = random_histogram(rng, 0.002 + 0.02 * r / 50.0);
    for (int degree : {3, 5, 7}) {
      const PeEstimate a = pe_iv_estimate(h, degree, policy(), 20000.0);
      const PeEstimate b = pe_iterative(h, degree, policy(), 20000.0);
      CHECK(std::abs(a.B_hat - b.B_hat) <= 1e-8);
      CHECK(std::abs(a.theta_hat - b.theta_hat) <= 1e-6);
      CHECK(std::abs(b.integral - 1.0) <= 1e-8);
    }
  }
}

TEST_CASE("affine slope of the iteration") {
  std::mt19937_64 rng(3);
  const Histogram h = random_histogram(rng);
  const PeEstimate e = pe_iterative(h, 7, policy(), 20000.0);
  // Three steps of the proportional adjustment with an independent solver.
  const Oracle o = oracle_design(h, 7);
  Eigen::MatrixXd R(h.bins(), o.Z.cols() + o.D.cols());
  R << o.Z, o.D;
  const double PR = o.mask.dot(h.shares);
  auto step = [&](double B) {
    const Eigen::VectorXd target = h.shares.array() * (1.0 + B / PR * o.mask.array());
    return Eigen::VectorXd(R.householderQr().solve(target)).tail(o.D.cols()).sum();
  };
  const double B0 = 0.0, B1 = step(B0), B2 = step(B1);
  CHECK(e.phi0 == doctest::Approx(B1).epsilon(1e-10));
  CHECK(e.phi1 == doctest::Approx((B2 - B1) / (B1 - B0)).epsilon(1e-8));
  CHECK(e.B_hat == doctest::Approx(e.phi0 / (1.0 - e.phi1)).epsilon(1e-9));
}

TEST_CASE("delta-method standard error matches a finite-difference gradient") {
  std::mt19937_64 rng(4);
  const Histogram h = random_histogram(rng);
  const double n = 20000.0;
  const PolicySpec pol = policy();
  const PeEstimate e = pe_iv_estimate(h, 5, pol, n);
  const Oracle o = oracle_design(h, 5);
  const int p = 6, m = static_cast<int>(o.D.cols()), J = h.bins();
  // theta_hat as a function of unconstrained shares, solved densely.
  auto theta_of = [&](const Eigen::VectorXd& f) {
    const double PR = o.mask.dot(f);
    Eigen::MatrixXd X(J, p + m), W(J, p + m);
    X << o.Z, o.D;
    W << o.Z, o.D;
    for (int l = 0; l < m; ++l) X.col(p + l) -= f.cwiseProduct(o.mask) / PR;
    const Eigen::VectorXd b = (W.transpose() * X).fullPivLu().solve(W.transpose() * f);
    const double fk = o.Z.row(h.cutoff_bin).dot(b.head(p)) / h.mesh;
    return b.tail(m).sum() / fk / (pol.k * std::log((1.0 - pol.tau0) / (1.0 - pol.tau1)));
  };
  CHECK(theta_of(h.shares) == doctest::Approx(e.theta_hat).epsilon(1e-9));
  double var = 0.0;
  const double eps = 1e-6;
  for (int j = 0; j < J; ++j) {
    Eigen::VectorXd fp = h.shares, fm = h.shares;
    fp(j) += eps;
    fm(j) -= eps;
    const double g = (theta_of(fp) - theta_of(fm)) / (2.0 * eps);
    var += g * g * h.shares(j) * (1.0 - h.shares(j)) / n;
  }
  CHECK(e.se_theta == doctest::Approx(std::sqrt(var)).epsilon(1e-5));
}

TEST_CASE("PE errors and window-average flag") {
  std::mt19937_64 rng(5);
  const Histogram h = random_histogram(rng);
  CHECK_THROWS_AS(pe_iv_estimate(h, 200, policy(), 100.0), DataError);
  CHECK_THROWS_AS(pe_iv_estimate(h, 3, policy(), 0.0), DomainError);
  const PeEstimate a = pe_iv_estimate(h, 7, policy(), 20000.0, false);
  const PeEstimate b = pe_iv_estimate(h, 7, policy(), 20000.0, true);
  CHECK(a.B_hat == b.B_hat);
  CHECK(a.f_hat != b.f_hat);
  CHECK(pe_rejects(a, a.theta_hat, 0.05) == false);
  CHECK(pe_rejects(a, a.theta_hat + 3.0 * a.se_theta, 0.05) == true);
}
