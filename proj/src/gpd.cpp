#include "comet/gpd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "comet/errors.hpp"
#include "comet/stats.hpp"

namespace comet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_params(const GPDist& d) {
  if (!(d.sigma > 0.0) || !std::isfinite(d.sigma))
    throw ParamError("generalized Pareto scale must be finite and > 0, got " +
                     std::to_string(d.sigma));
  if (!std::isfinite(d.mu) || !std::isfinite(d.xi))
    throw ParamError("generalized Pareto parameters must be finite");
}

bool in_support(const GPDist& d, double z) {
  // z = (x - mu) / sigma
  if (z < 0.0) return false;
  if (d.xi < -kGpXiZeroTol && z > -1.0 / d.xi) return false;
  return true;
}

}  // namespace

double gp_pdf(const GPDist& d, double x) {
  const double lp = gp_log_pdf(d, x);
  return lp == -kInf ? 0.0 : std::exp(lp);
}

double gp_log_pdf(const GPDist& d, double x) {
  check_params(d);
  const double z = (x - d.mu) / d.sigma;
  if (!in_support(d, z)) return -kInf;
  if (std::abs(d.xi) < kGpXiZeroTol) return -std::log(d.sigma) - z;
  const double base = 1.0 + d.xi * z;
  if (base <= 0.0) return -kInf;
  return -std::log(d.sigma) - (1.0 + 1.0 / d.xi) * std::log(base);
}

double gp_cdf(const GPDist& d, double x) {
  check_params(d);
  const double z = (x - d.mu) / d.sigma;
  if (z <= 0.0) return 0.0;
  if (std::abs(d.xi) < kGpXiZeroTol) return -std::expm1(-z);
  const double base = 1.0 + d.xi * z;
  if (base <= 0.0) return d.xi < 0.0 ? 1.0 : 0.0;
  return 1.0 - std::pow(base, -1.0 / d.xi);
}

double gp_ppf(const GPDist& d, double q) {
  check_params(d);
  if (!(q > 0.0 && q < 1.0))
    throw DomainError("gp_ppf: quantile level must lie in (0,1), got " +
                      std::to_string(q));
  if (std::abs(d.xi) < kGpXiZeroTol)
    return d.mu - d.sigma * std::log1p(-q);
  return d.mu + d.sigma * (std::pow(1.0 - q, -d.xi) - 1.0) / d.xi;
}

double gp_nll(std::span<const double> excesses, double sigma, double xi) {
  if (!(sigma > 0.0)) return kInf;
  const double n = static_cast<double>(excesses.size());
  if (std::abs(xi) < kGpXiZeroTol) {
    double acc = 0.0;
    for (double x : excesses) acc += x;
    return n * std::log(sigma) + acc / sigma;
  }
  double acc = 0.0;
  for (double x : excesses) {
    const double base = 1.0 + xi * x / sigma;
    if (base <= 0.0) return kInf;
    acc += std::log(base);
  }
  return n * std::log(sigma) + (1.0 + 1.0 / xi) * acc;
}

namespace {

// Nelder-Mead in 2 dimensions, used only for the GP fit below.
struct NmResult {
  std::array<double, 2> x;
  double value = kInf;
};

NmResult nelder_mead_2d(const std::function<double(double, double)>& f,
                        std::array<double, 2> start, double step,
                        std::size_t max_iter) {
  constexpr std::size_t kN = 2;
  std::array<std::array<double, 2>, kN + 1> pts;
  std::array<double, kN + 1> vals;
  pts[0] = start;
  pts[1] = {start[0] + step, start[1]};
  pts[2] = {start[0], start[1] + step};
  for (std::size_t i = 0; i <= kN; ++i) vals[i] = f(pts[i][0], pts[i][1]);

  auto order = [&] {
    for (std::size_t i = 0; i <= kN; ++i)
      for (std::size_t j = i + 1; j <= kN; ++j)
        if (vals[j] < vals[i]) {
          std::swap(vals[i], vals[j]);
          std::swap(pts[i], pts[j]);
        }
  };

  for (std::size_t it = 0; it < max_iter; ++it) {
    order();
    if (std::abs(vals[kN] - vals[0]) < 1e-12 * (1.0 + std::abs(vals[0])))
      break;
    std::array<double, 2> centroid = {(pts[0][0] + pts[1][0]) / 2.0,
                                      (pts[0][1] + pts[1][1]) / 2.0};
    auto at = [&](double t) {
      return std::array<double, 2>{centroid[0] + t * (pts[kN][0] - centroid[0]),
                                   centroid[1] + t * (pts[kN][1] - centroid[1])};
    };
    const auto refl = at(-1.0);
    const double frefl = f(refl[0], refl[1]);
    if (frefl < vals[0]) {
      const auto expd = at(-2.0);
      const double fexpd = f(expd[0], expd[1]);
      if (fexpd < frefl) {
        pts[kN] = expd;
        vals[kN] = fexpd;
      } else {
        pts[kN] = refl;
        vals[kN] = frefl;
      }
    } else if (frefl < vals[kN - 1]) {
      pts[kN] = refl;
      vals[kN] = frefl;
    } else {
      const auto contr = at(frefl < vals[kN] ? -0.5 : 0.5);
      const double fcontr = f(contr[0], contr[1]);
      if (fcontr < std::min(frefl, vals[kN])) {
        pts[kN] = contr;
        vals[kN] = fcontr;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 1; i <= kN; ++i) {
          pts[i] = {pts[0][0] + 0.5 * (pts[i][0] - pts[0][0]),
                    pts[0][1] + 0.5 * (pts[i][1] - pts[0][1])};
          vals[i] = f(pts[i][0], pts[i][1]);
        }
      }
    }
  }
  order();
  return {pts[0], vals[0]};
}

}  // namespace

GPDist gp_fit_mle(std::span<const double> excesses, TailSide side) {
  const char* tail = side == TailSide::kRight ? "right" : "left";
  if (excesses.size() < 20)
    throw DataError(std::string("gp_fit_mle: ") + tail + " tail has only " +
                    std::to_string(excesses.size()) +
                    " excesses, need at least 20");
  double lo = kInf, hi = -kInf;
  for (double x : excesses) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw DataError(std::string("gp_fit_mle: ") + tail +
                      " tail excesses must be finite and >= 0");
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi - lo <= 0.0)
    throw DataError(std::string("gp_fit_mle: ") + tail +
                    " tail excesses are all equal (degenerate data)");

  const double mean = vec_mean(excesses);
  const double sd = vec_stddev(excesses);
  const double med = quantile(excesses, 0.5);

  // Objective over (log sigma, xi) with xi softly boxed into [min, max].
  auto objective = [&](double log_sigma, double xi) {
    if (xi < kGpXiMin || xi > kGpXiMax) return kInf;
    if (log_sigma < -40.0 || log_sigma > 40.0) return kInf;
    return gp_nll(excesses, std::exp(log_sigma), xi);
  };

  // Restarts: moment-based, exponential, and a heavy-tail guess.
  std::vector<std::array<double, 2>> starts;
  if (sd > 0.0) {
    double xi0 = 0.5 * (1.0 - mean * mean / (sd * sd));
    xi0 = std::clamp(xi0, kGpXiMin + 0.02, 0.9 * kGpXiMax);
    const double sigma0 = std::max(mean * (1.0 - std::min(xi0, 0.9)), 1e-8);
    starts.push_back({std::log(sigma0), xi0});
  }
  starts.push_back({std::log(std::max(mean, 1e-8)), 0.0});
  const double sigma_heavy = std::max(med, 1e-8) / (2.0 * (std::sqrt(2.0) - 1.0));
  starts.push_back({std::log(sigma_heavy), 0.5});

  NmResult best;
  for (const auto& s : starts) {
    // Nudge infeasible starts (e.g. xi0 < 0 with a large max excess).
    std::array<double, 2> st = s;
    for (int tries = 0; tries < 8 && objective(st[0], st[1]) == kInf; ++tries) {
      st[0] += 0.5;
      st[1] = std::min(st[1] + 0.25, kGpXiMax - 0.1);
    }
    const auto r = nelder_mead_2d(
        [&](double ls, double xi) { return objective(ls, xi); }, st, 0.2, 500);
    if (r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value))
    throw NumericError(std::string("gp_fit_mle: ") + tail +
                       " tail likelihood optimization failed");

  GPDist d;
  d.mu = 0.0;
  d.sigma = std::exp(best.x[0]);
  d.xi = std::clamp(best.x[1], kGpXiMin, kGpXiMax);
  return d;
}

}  // namespace comet
