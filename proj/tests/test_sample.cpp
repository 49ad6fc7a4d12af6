#include "bunching/errors.hpp"
#include "bunching/sample.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace bunching;

namespace {

PolicySpec policy() {
  PolicySpec p;
  p.support_lo = 0.5;
  p.support_hi = 8.0;
  return p;
}

std::vector<double> sorted(const Eigen::VectorXd& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return s;
}

Dataset simulate_no_frictions(const StructuralModel& m, double theta, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> eta(0.9, 7.0);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = actual_choice(m, Eigen::VectorXd(0), eta(rng), theta_vec(theta));
  return Dataset::from_y(y);
}

}  // namespace

TEST_CASE("bunching share") {
  Eigen::VectorXd y(4);
  y << 1.8, 1.9, 2.0, 2.3;
  CHECK(bunching_share(Dataset::from_y(y), 1.7, 2.3) == 1.0);
  y << 0.5, 1.0, 2.4, 3.0;
  CHECK(bunching_share(Dataset::from_y(y), 1.7, 2.3) == 0.0);
  y << 0.5, 1.7, 2.4, 3.0;
  CHECK(bunching_share(Dataset::from_y(y), 1.7, 2.3) == 0.25);
  Dataset d = Dataset::from_y(y);
  d.t << 1.0, 3.0, 1.0, 1.0;
  CHECK(bunching_share(d, 1.7, 2.3) == 0.75);
  CHECK_THROWS_AS(bunching_share(Dataset::from_y(Eigen::VectorXd(0)), 1.7, 2.3), DataError);
}

TEST_CASE("estimation sample at theta = 0") {
  const auto m = StructuralModel::isoelastic(policy());
  Eigen::VectorXd y(6);
  y << 1.0, 1.7, 2.0, 2.3, 2.31, 5.0;
  const auto s = construct_estimation_sample(Dataset::from_y(y), m, theta_vec(0.0));
  CHECK(s.kbar1 == 2.3);
  CHECK(sorted(s.y0) == std::vector<double>{1.0, 2.31, 5.0});
  CHECK(s.B_hat == doctest::Approx(0.5));
  CHECK((s.w.array() - (2.3 - 1.7)).abs().maxCoeff() == 0.0);
}

TEST_CASE("kbar1 and the retention rule") {
  const auto m = StructuralModel::isoelastic(policy());
  Eigen::VectorXd y(4);
  // 2.6 reverts to 2.6 * sqrt(1.25) = 2.9069 > kbar1; a unit reverting to
  // 2.55 < kbar1 needs y = 2.55 / sqrt(1.25).
  const double y_low = 2.55 / std::sqrt(1.25);
  y << 1.0, 2.0, y_low, 2.6;
  const auto s = construct_estimation_sample(Dataset::from_y(y), m, theta_vec(0.5));
  CHECK(s.kbar1 == doctest::Approx(std::sqrt(1.25) * 2.3).epsilon(1e-14));
  CHECK(s.kbar1 == doctest::Approx(2.57147).epsilon(1e-5));
  CHECK(s.size() == 2);
  CHECK(std::find(s.index.begin(), s.index.end(), 2) == s.index.end());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    CHECK(s.region().contains(s.y0(i)));
    CHECK(s.w(i) >= 0.0);
  }
  CHECK(s.kbar1 >= m.policy.k);
}

TEST_CASE("estimation sample errors and overrides") {
  const auto m = StructuralModel::isoelastic(policy());
  Eigen::VectorXd y(3);
  y << 1.0, 3.0, 4.0;
  CHECK_THROWS_AS(construct_estimation_sample(Dataset::from_y(y), m, theta_vec(0.5)), DataError);
  const auto s = construct_estimation_sample(Dataset::from_y(y), m, theta_vec(0.5), 2.5);
  CHECK(s.kbar1 == 2.5);
  CHECK(s.size() == 3);

  y << 1.0, 2.0, 4.0;
  // theta = 15 pushes R(k1) past the support.
  CHECK_THROWS_AS(construct_estimation_sample(Dataset::from_y(y), m, theta_vec(15.0)), DataError);
}

TEST_CASE("zero-weight bunchers fall back with a warning") {
  const auto m = StructuralModel::isoelastic(policy());
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 4.0;
  Dataset d = Dataset::from_y(y);
  d.t << 1.0, 0.0, 1.0;
  std::vector<std::string> seen;
  const auto prev = set_warning_handler([&](const std::string& w) { seen.push_back(w); });
  const auto s = construct_estimation_sample(d, m, theta_vec(0.5));
  set_warning_handler(prev);
  CHECK(seen.size() == 1);
  CHECK(s.kbar1 == doctest::Approx(std::sqrt(1.25) * 2.3));
  CHECK(s.B_hat == 0.0);
}

TEST_CASE("without frictions the sample recovers Y*(0) on S") {
  const auto m = StructuralModel::isoelastic(policy());
  for (double theta : {0.2, 0.5, 0.9}) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> eta_d(0.9, 7.0);
    const int n = 5000;
    Eigen::VectorXd eta(n), y(n);
    for (int i = 0; i < n; ++i) {
      eta(i) = eta_d(rng);
      y(i) = actual_choice(m, Eigen::VectorXd(0), eta(i), theta_vec(theta));
    }
    const auto s = construct_estimation_sample(Dataset::from_y(y), m, theta_vec(theta));
    std::vector<double> expect;
    for (int i = 0; i < n; ++i) {
      const double y0 = eta(i);  // tau0 = 0
      if ((y0 >= s.lo && y0 <= s.k0) || (y0 > s.kbar1 && y0 <= s.hi)) expect.push_back(y0);
    }
    std::sort(expect.begin(), expect.end());
    const auto got = sorted(s.y0);
    REQUIRE(got.size() == expect.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - expect[i]));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("sample construction ignores input order") {
  const auto m = StructuralModel::isoelastic(policy());
  const Dataset d = simulate_no_frictions(m, 0.5, 3000, 9);
  std::vector<Eigen::Index> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  Dataset p = d;
  for (Eigen::Index i = 0; i < d.size(); ++i) p.y(i) = d.y(perm[i]);
  const auto a = construct_estimation_sample(d, m, theta_vec(0.4));
  const auto b = construct_estimation_sample(p, m, theta_vec(0.4));
  CHECK(a.kbar1 == b.kbar1);
  CHECK(a.B_hat == doctest::Approx(b.B_hat).epsilon(1e-15));
  CHECK(sorted(a.y0) == sorted(b.y0));
  CHECK(sorted(a.w) == sorted(b.w));
}

TEST_CASE("a wider window never grows the sample") {
  const Dataset d = simulate_no_frictions(StructuralModel::isoelastic(policy()), 0.5, 3000, 5);
  Eigen::Index prev = d.size() + 1;
  for (int w = 0; w < 8; ++w) {
    PolicySpec p = policy();
    p.k0 = 1.9 - 0.05 * w;
    p.k1 = 2.1 + 0.05 * w;
    const auto s = construct_estimation_sample(d, StructuralModel::isoelastic(p), theta_vec(0.5));
    CHECK(s.size() <= prev);
    prev = s.size();
  }
}

TEST_CASE("observed upper truncation") {
  PolicySpec p = policy();
  p.observed_upper = true;
  p.support_hi = 6.0;
  const auto m = StructuralModel::isoelastic(p);
  const Dataset d = simulate_no_frictions(StructuralModel::isoelastic(policy()), 0.5, 2000, 1);
  const auto s = construct_estimation_sample(d, m, theta_vec(0.5));
  CHECK(s.hi == doctest::Approx(6.0 * std::sqrt(1.25)));
  CHECK(s.y0.maxCoeff() <= s.hi);
}
