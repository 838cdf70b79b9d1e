#pragma once

#include <span>

#include "comet/gpd.hpp"
#include "comet/kde.hpp"

namespace comet {

// Transformed values are clamped to [kMarginalClamp, 1 - kMarginalClamp] so
// the downstream logit never overflows; the inverse treats clamped inputs
// as the clamp boundary.
inline constexpr double kMarginalClamp = 1e-7;

// Sentinel for log-densities of points outside a fitted tail's support.
inline constexpr double kLogDensityFloor = -1e10;

// Per-dimension semi-parametric CDF transform to (0,1): generalized Pareto
// tails beyond the (a, b) empirical quantiles, a kernel density estimate in
// between. Points exactly at alpha or beta belong to the center branch.
// The transform is continuous (f(alpha) = a, f(beta) = b) and strictly
// increasing on the data range; the density may jump at the joins.
struct MarginalModel {
  double quantile_low = 0.0;   // a, in (0, 0.5)
  double quantile_high = 0.0;  // b, in (0.5, 1)
  double alpha = 0.0;          // data value at quantile a
  double beta = 0.0;           // data value at quantile b
  GPDist left_tail;            // fit on excesses alpha - x, x < alpha
  GPDist right_tail;           // fit on excesses x - beta, x > beta
  Kde1D center;                // fit on x in [alpha, beta]
  double center_cdf_alpha = 0.0;
  double center_cdf_beta = 0.0;
};

MarginalModel fit_marginal(std::span<const double> column, double a, double b);

double marginal_transform(const MarginalModel& m, double x);
double marginal_inverse(const MarginalModel& m, double u);  // 0 < u < 1
double marginal_log_density(const MarginalModel& m, double x);

}  // namespace comet
