#include "comet/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "comet/errors.hpp"
#include "comet/stats.hpp"

namespace comet {

MarginalModel fit_marginal(std::span<const double> column, double a, double b) {
  if (column.size() < 100)
    throw DataError("fit_marginal: need at least 100 points, got " +
                    std::to_string(column.size()));
  if (!(a > 0.0 && a < b && b < 1.0))
    throw DomainError("fit_marginal: quantiles must satisfy 0 < a < b < 1");

  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() - sorted.front() <= 0.0)
    throw DataError("fit_marginal: constant column (degenerate data)");

  MarginalModel m;
  m.quantile_low = a;
  m.quantile_high = b;
  m.alpha = quantile_sorted(sorted, a);
  m.beta = quantile_sorted(sorted, b);

  std::vector<double> left_excess, right_excess, center;
  for (double x : sorted) {
    if (x < m.alpha)
      left_excess.push_back(m.alpha - x);
    else if (x > m.beta)
      right_excess.push_back(x - m.beta);
    else
      center.push_back(x);
  }
  if (left_excess.size() < 20)
    throw DataError("fit_marginal: left tail has only " +
                    std::to_string(left_excess.size()) +
                    " points below alpha, need at least 20 (widen quantile a)");
  if (right_excess.size() < 20)
    throw DataError("fit_marginal: right tail has only " +
                    std::to_string(right_excess.size()) +
                    " points above beta, need at least 20 (widen quantile b)");

  m.left_tail = gp_fit_mle(left_excess, TailSide::kLeft);
  m.right_tail = gp_fit_mle(right_excess, TailSide::kRight);
  m.center = kde_fit(center);
  m.center_cdf_alpha = kde_cdf(m.center, m.alpha);
  m.center_cdf_beta = kde_cdf(m.center, m.beta);
  return m;
}

double marginal_transform(const MarginalModel& m, double x) {
  const double a = m.quantile_low, b = m.quantile_high;
  double u;
  if (x < m.alpha) {
    u = a * (1.0 - gp_cdf(m.left_tail, m.alpha - x));
  } else if (x > m.beta) {
    u = b + (1.0 - b) * gp_cdf(m.right_tail, x - m.beta);
  } else {
    const double span = m.center_cdf_beta - m.center_cdf_alpha;
    u = a + (b - a) * (kde_cdf(m.center, x) - m.center_cdf_alpha) / span;
  }
  return std::clamp(u, kMarginalClamp, 1.0 - kMarginalClamp);
}

double marginal_inverse(const MarginalModel& m, double u) {
  if (!(u > 0.0 && u < 1.0))
    throw DomainError("marginal_inverse: u must lie in (0,1), got " +
                      std::to_string(u));
  u = std::clamp(u, kMarginalClamp, 1.0 - kMarginalClamp);
  const double a = m.quantile_low, b = m.quantile_high;
  if (u == a) return m.alpha;
  if (u == b) return m.beta;
  if (u < a) return m.alpha - gp_ppf(m.left_tail, 1.0 - u / a);
  if (u > b) return m.beta + gp_ppf(m.right_tail, (u - b) / (1.0 - b));
  const double target = m.center_cdf_alpha +
                        (u - a) / (b - a) *
                            (m.center_cdf_beta - m.center_cdf_alpha);
  return kde_ppf(m.center, target);
}

double marginal_log_density(const MarginalModel& m, double x) {
  const double a = m.quantile_low, b = m.quantile_high;
  double lp;
  if (x < m.alpha) {
    lp = std::log(a) + gp_log_pdf(m.left_tail, m.alpha - x);
  } else if (x > m.beta) {
    lp = std::log(1.0 - b) + gp_log_pdf(m.right_tail, x - m.beta);
  } else {
    const double span = m.center_cdf_beta - m.center_cdf_alpha;
    const double pdf = kde_pdf(m.center, x);
    lp = pdf > 0.0 ? std::log(b - a) + std::log(pdf) - std::log(span)
                   : -std::numeric_limits<double>::infinity();
  }
  return std::isfinite(lp) ? std::max(lp, kLogDensityFloor) : kLogDensityFloor;
}

}  // namespace comet
