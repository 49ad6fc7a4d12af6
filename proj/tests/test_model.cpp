#include "bunching/errors.hpp"
#include "bunching/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bunching;

namespace {

PolicySpec default_policy() { return PolicySpec{}; }

Eigen::VectorXd xval(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("counterfactual choice") {
  const auto iso = StructuralModel::isoelastic(default_policy());
  const auto aug = StructuralModel::augmented(default_policy());
  const Eigen::VectorXd none(0);
  CHECK(counterfactual_choice(iso, 0, none, 1.7, theta_vec(0.5)) == doctest::Approx(1.7).epsilon(1e-14));
  CHECK(counterfactual_choice(iso, 1, none, 2.0, theta_vec(0.5)) == doctest::Approx(2.0 * std::sqrt(0.8)).epsilon(1e-14));
  CHECK(counterfactual_choice(iso, 1, none, 2.0, theta_vec(0.5)) == doctest::Approx(1.78885).epsilon(1e-5));
  CHECK(counterfactual_choice(aug, 1, xval(1.0), 2.0, theta_vec(0.5, 0.25)) == doctest::Approx(2.0 * std::pow(0.8, 0.75)).epsilon(1e-14));
  CHECK(counterfactual_choice(aug, 1, xval(1.0), 2.0, theta_vec(0.5, 0.25)) == doctest::Approx(1.69179).epsilon(1e-5));
  CHECK_THROWS_AS(counterfactual_choice(iso, 0, none, 0.0, theta_vec(0.5)), DomainError);
  CHECK_THROWS_AS(counterfactual_choice(iso, 0, none, -1.0, theta_vec(0.5)), DomainError);
}

TEST_CASE("augmented model enforces |omega| < theta") {
  const auto aug = StructuralModel::augmented(default_policy());
  CHECK_THROWS_AS(reversion(aug, 2.0, xval(0.0), theta_vec(0.5, 0.5)), DomainError);
  CHECK_THROWS_AS(reversion(aug, 2.0, xval(0.0), theta_vec(0.5, -0.6)), DomainError);
  CHECK_NOTHROW(reversion(aug, 2.0, xval(0.0), theta_vec(0.5, 0.49)));
}

TEST_CASE("actual choice") {
  const auto iso = StructuralModel::isoelastic(default_policy());
  const Eigen::VectorXd none(0);
  const auto th = theta_vec(0.5);
  CHECK(actual_choice(iso, none, 1.0, th) == doctest::Approx(1.0));
  CHECK(actual_choice(iso, none, 2.1, th) == 2.0);
  CHECK(actual_choice(iso, none, 3.0, th) == doctest::Approx(std::sqrt(0.8) * 3.0).epsilon(1e-14));
  CHECK(actual_choice(iso, none, 3.0, th) == doctest::Approx(2.68328).epsilon(1e-5));
}

TEST_CASE("reversion") {
  const auto iso = StructuralModel::isoelastic(default_policy());
  const auto aug = StructuralModel::augmented(default_policy());
  const Eigen::VectorXd none(0);
  CHECK(reversion(iso, 1.0, none, theta_vec(0.0)) == 1.0);
  CHECK(reversion(iso, 1.0, none, theta_vec(0.5)) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-14));
  CHECK(reversion(iso, 1.0, none, theta_vec(0.5)) == doctest::Approx(1.11803).epsilon(1e-5));
  CHECK(reversion(aug, 2.0, xval(-1.0), theta_vec(0.5, 0.25)) == doctest::Approx(2.0 * std::pow(1.25, 0.25)).epsilon(1e-14));
  CHECK(reversion(aug, 2.0, xval(-1.0), theta_vec(0.5, 0.25)) == doctest::Approx(2.11474).epsilon(1e-5));
  // Matches m(0, x, m^{-1}(1, y), theta).
  const double y = 2.7, e = 0.4;
  const double eta = y / std::pow(0.8, e);
  CHECK(reversion(iso, y, none, theta_vec(e)) == doctest::Approx(counterfactual_choice(iso, 0, none, eta, theta_vec(e))));
}

TEST_CASE("reversion and inverse are consistent") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> th(0.0, 2.0), fr(-0.99, 0.99), xs(-1.0, 1.0);
  const auto iso = StructuralModel::isoelastic(default_policy());
  const auto aug = StructuralModel::augmented(default_policy());
  const auto notch = StructuralModel::notch(default_policy(), 0.05, 0.0);
  for (int r = 0; r < 20; ++r) {
    const double t = th(rng) + 1e-3;
    const Eigen::VectorXd t1 = theta_vec(t), t2 = theta_vec(t, fr(rng) * t);
    const Eigen::VectorXd x = xval(xs(rng));
    for (int g = 0; g <= 100; ++g) {
      const double y = 0.1 + 7.9 * g / 100.0;
      CHECK(std::abs(inverse_reversion(iso, reversion(iso, y, x, t1), x, t1) - y) <= 1e-12 * y);
      CHECK(std::abs(inverse_reversion(aug, reversion(aug, y, x, t2), x, t2) - y) <= 1e-12 * y);
      CHECK(std::abs(inverse_reversion(notch, reversion(notch, y, x, t1), x, t1) - y) <= 1e-12 * y);
    }
  }
}

TEST_CASE("choice partition and monotonicity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> eta_d(0.5, 5.0), th(0.0, 1.5), xs(-1.0, 1.0), fr(-0.99, 0.99);
  const auto aug = StructuralModel::augmented(default_policy());
  const double k = aug.policy.k;
  for (int r = 0; r < 2000; ++r) {
    const double t = th(rng) + 1e-3;
    const Eigen::VectorXd theta = theta_vec(t, fr(rng) * t);
    const Eigen::VectorXd x = xval(xs(rng));
    const double eta = eta_d(rng);
    const double y = actual_choice(aug, x, eta, theta);
    const double y0 = counterfactual_choice(aug, 0, x, eta, theta);
    const double y1 = counterfactual_choice(aug, 1, x, eta, theta);
    const int cases = (y < k) + (y > k) + (y == k);
    CHECK(cases == 1);
    CHECK((y == k) == (y1 <= k && k <= y0));
    // Revealed-preference restriction.
    if (y0 <= k) CHECK(y1 <= k);
  }
  const auto iso = StructuralModel::isoelastic(default_policy());
  const Eigen::VectorXd none(0);
  double prev0 = 0.0, prev1 = 0.0;
  for (int g = 1; g <= 1000; ++g) {
    const double eta = 0.01 * g;
    const double a = counterfactual_choice(iso, 0, none, eta, theta_vec(0.7));
    const double b = counterfactual_choice(iso, 1, none, eta, theta_vec(0.7));
    CHECK(a > prev0);
    CHECK(b > prev1);
    prev0 = a;
    prev1 = b;
  }
}

TEST_CASE("notch window edge") {
  const Eigen::VectorXd none(0);
  const auto kink = StructuralModel::isoelastic(default_policy());
  CHECK(notch_window_upper(kink, none, theta_vec(0.5)) == kink.policy.k1);
  CHECK(notch_window_upper(kink, none, theta_vec(1.3)) == kink.policy.k1);

  const auto zero = StructuralModel::notch(default_policy(), 0.0, 0.05);
  CHECK(notch_window_upper(zero, none, theta_vec(0.5)) == doctest::Approx(2.05).epsilon(1e-9));

  // Dense eta grid on the closed-form payoffs, independent of the library.
  const double liability = 0.1, theta = 0.5, k = 2.0, tau1 = 0.2;
  const auto notch = StructuralModel::notch(default_policy(), liability, 0.0);
  auto U = [&](double tau, double L, double y, double eta) {
    return (1.0 - tau) * (y - k) - L - eta / (1.0 + 1.0 / theta) * std::pow(y / eta, 1.0 + 1.0 / theta);
  };
  const double step = 1e-6;
  double eta_star = 0.0;
  for (double eta = k / std::pow(1.0 - tau1, theta); eta < 10.0; eta += step) {
    const double y0 = std::min(eta, k);
    const double y1 = std::max(std::pow(1.0 - tau1, theta) * eta, k);
    if (U(tau1, liability, y1, eta) > U(0.0, 0.0, y0, eta)) {
      eta_star = eta;
      break;
    }
  }
  REQUIRE(eta_star > 0.0);
  const double K = std::pow(1.0 - tau1, theta) * eta_star;
  CHECK(K > k);
  CHECK(notch_window_upper(notch, none, theta_vec(theta)) == doctest::Approx(K).epsilon(2e-6));
  // Indifference at the marginal buncher.
  const double H = marginal_buncher(notch, none, theta_vec(theta));
  CHECK(std::abs(counterfactual_value(notch, 1, none, H, theta_vec(theta)) -
                 counterfactual_value(notch, 0, none, H, theta_vec(theta))) < 1e-9);
  // Units above H leave the cutoff; units just below stay at k.
  CHECK(actual_choice(notch, none, H * 1.001, theta_vec(theta)) > K);
  CHECK(actual_choice(notch, none, H * 0.999, theta_vec(theta)) == k);
}

TEST_CASE("policy validation") {
  PolicySpec p;
  p.tau1 = 0.0;
  CHECK_THROWS_AS(StructuralModel::isoelastic(p), DomainError);
  p = PolicySpec{};
  p.k0 = 2.1;
  CHECK_THROWS_AS(StructuralModel::isoelastic(p), DomainError);
  p = PolicySpec{};
  p.support_hi = 2.2;
  CHECK_THROWS_AS(StructuralModel::isoelastic(p), DomainError);
  CHECK(PolicySpec{}.log_ratio() == doctest::Approx(std::log(1.25)));
}
