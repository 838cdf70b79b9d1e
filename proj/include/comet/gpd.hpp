#pragma once

#include <span>

namespace comet {

// Generalized Pareto distribution. Support is [mu, inf) for xi >= 0 and
// [mu, mu - sigma/xi] for xi < 0.
struct GPDist {
  double mu = 0.0;     // location / threshold
  double sigma = 1.0;  // scale, > 0
  double xi = 0.0;     // tail heaviness
};

// |xi| below this switches to the exponential branch (the density has a
// removable singularity at xi = 0).
inline constexpr double kGpXiZeroTol = 1e-9;

// Bounds on the fitted shape: below -0.5 the MLE is irregular, and the
// synthetic benchmarks never need xi beyond 5.
inline constexpr double kGpXiMin = -0.49;
inline constexpr double kGpXiMax = 5.0;

double gp_pdf(const GPDist& d, double x);      // 0 off support
double gp_log_pdf(const GPDist& d, double x);  // -inf off support
double gp_cdf(const GPDist& d, double x);      // clamped to {0,1} off support
double gp_ppf(const GPDist& d, double q);      // 0 < q < 1

// Negative log-likelihood of nonnegative excesses under GP(0, sigma, xi);
// +inf when a point falls outside the support.
double gp_nll(std::span<const double> excesses, double sigma, double xi);

enum class TailSide { kRight, kLeft };

// Maximum-likelihood fit over (log sigma, xi) with mu fixed at 0. Excesses
// must be >= 0; left-tail callers negate their data before calling (the
// side only flavors error messages). Needs at least 20 excesses.
GPDist gp_fit_mle(std::span<const double> excesses,
                  TailSide side = TailSide::kRight);

}  // namespace comet
