#include "bunching/sample.hpp"

#include "bunching/errors.hpp"

#include <cmath>
#include <sstream>

namespace bunching {

Dataset Dataset::from_y(const Eigen::VectorXd& y) {
  Dataset d;
  d.y = y;
  d.x = CovariateMatrix(y.size(), 0);
  d.t = Eigen::VectorXd::Ones(y.size());
  return d;
}

void Dataset::validate() const {
  if (y.size() == 0) throw DataError("dataset is empty");
  if (x.rows() != y.size()) throw DataError("covariate rows do not match the number of observations");
  if (t.size() != y.size()) throw DataError("weight column length does not match the number of observations");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y(i))) throw DataError("non-finite y at observation " + std::to_string(i + 1));
    if (!(t(i) >= 0.0) || !std::isfinite(t(i)))
      throw DataError("weight must be finite and nonnegative at observation " + std::to_string(i + 1));
  }
}

Dataset with_weights(const Dataset& data, const WeightFn& weight) {
  Dataset out = data;
  for (Eigen::Index i = 0; i < data.size(); ++i) out.t(i) = weight(data.covariates(i));
  return out;
}

double bunching_share(const Dataset& data, double k0, double k1) {
  if (data.size() == 0) throw DataError("bunching_share: empty data");
  double s = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if (data.y(i) >= k0 && data.y(i) <= k1) s += data.t(i);
  return s / static_cast<double>(data.size());
}

EstimationSample construct_estimation_sample(const Dataset& data, const StructuralModel& model,
                                             const Eigen::VectorXd& theta,
                                             std::optional<double> kbar1_override) {
  data.validate();
  check_admissible(model, theta);
  const PolicySpec& p = model.policy;
  const Eigen::Index n = data.size();

  // Window upper edge and w per unit.
  Eigen::VectorXd upper(n), R_upper(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CovRef x = data.covariates(i);
    upper(i) = model.is_notch() ? notch_window_upper(model, x, theta) : p.k1;
    R_upper(i) = reversion(model, upper(i), x, theta);
  }

  EstimationSample s;
  s.k0 = p.k0;
  s.lo = p.support_lo;
  s.hi = p.support_hi;
  s.n_total = n;
  if (p.observed_upper) {
    s.hi = INFINITY;
    for (Eigen::Index i = 0; i < n; ++i) s.hi = std::min(s.hi, reversion(model, p.support_hi, data.covariates(i), theta));
  }

  double kbar_pos = -INFINITY, kbar_any = -INFINITY;
  double bsum = 0.0;
  std::vector<double> bt;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.y(i) >= p.k0 && data.y(i) <= upper(i)) {
      s.bunch_index.push_back(i);
      bt.push_back(data.t(i));
      bsum += data.t(i);
      kbar_any = std::max(kbar_any, R_upper(i));
      if (data.t(i) > 0.0) kbar_pos = std::max(kbar_pos, R_upper(i));
    }
  }
  s.bunch_t = Eigen::Map<const Eigen::VectorXd>(bt.data(), static_cast<Eigen::Index>(bt.size()));
  s.B_hat = bsum / static_cast<double>(n);

  if (kbar1_override) {
    s.kbar1 = *kbar1_override;
  } else if (std::isfinite(kbar_pos)) {
    s.kbar1 = kbar_pos;
  } else if (std::isfinite(kbar_any)) {
    warn("all bunchers have zero weight; kbar1 taken over all bunchers");
    s.kbar1 = kbar_any;
  } else {
    throw DataError("no observations in the bunching window; kbar1 is undefined (supply an override)");
  }
  if (s.kbar1 >= s.hi) {
    std::ostringstream os;
    os << "kbar1 = " << s.kbar1 << " reaches the support upper bound " << s.hi
       << "; the right estimation segment is empty";
    throw DataError(os.str());
  }

  std::vector<double> y0, t, w;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = data.y(i);
    double v;
    if (y < p.k0) {
      if (y < p.support_lo) continue;
      v = y;
    } else if (y > upper(i)) {
      v = reversion(model, y, data.covariates(i), theta);
      if (!(v > s.kbar1) || v > s.hi) continue;
    } else {
      continue;
    }
    y0.push_back(v);
    t.push_back(data.t(i));
    w.push_back(R_upper(i) - p.k0);
    s.index.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(y0.size());
  s.y0 = Eigen::Map<const Eigen::VectorXd>(y0.data(), m);
  s.t = Eigen::Map<const Eigen::VectorXd>(t.data(), m);
  s.w = Eigen::Map<const Eigen::VectorXd>(w.data(), m);
  return s;
}

}  // namespace bunching
