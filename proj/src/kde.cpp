#include "comet/kde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "comet/errors.hpp"
#include "comet/stats.hpp"

namespace comet {

namespace {

// Nearest-rank (ceiling) quantile; for two points {0,1} this yields
// IQR = 1 so the bandwidth falls back to the standard deviation, matching
// the documented two-point case.
double rank_quantile(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  std::size_t r = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(n)));
  r = std::clamp<std::size_t>(r, 1, n);
  return sorted[r - 1];
}

struct ExactEval {
  double cdf = 0.0;
  double pdf = 0.0;
};

ExactEval exact_sums(const Kde1D& k, double x) {
  const double h = k.bandwidth;
  double cdf = 0.0, pdf = 0.0;
  for (double xj : k.points) {
    const double z = (x - xj) / h;
    cdf += normal_cdf(z);
    pdf += normal_pdf(z);
  }
  const double n = static_cast<double>(k.points.size());
  return {cdf / n, pdf / (n * h)};
}

// Locate the grid cell for x; returns false when x is off the table.
bool find_cell(const Kde1D& k, double x, std::size_t& cell, double& t) {
  if (x < k.grid_x.front() || x > k.grid_x.back()) return false;
  const auto it = std::upper_bound(k.grid_x.begin(), k.grid_x.end(), x);
  cell = static_cast<std::size_t>(it - k.grid_x.begin());
  cell = cell == 0 ? 0 : cell - 1;
  if (cell + 1 >= k.grid_x.size()) cell = k.grid_x.size() - 2;
  const double dx = k.grid_x[cell + 1] - k.grid_x[cell];
  t = (x - k.grid_x[cell]) / dx;
  return true;
}

}  // namespace

Kde1D kde_fit(std::span<const double> points) {
  if (points.size() < 2)
    throw DataError("kde_fit: need at least 2 points, got " +
                    std::to_string(points.size()));
  Kde1D k;
  k.points.assign(points.begin(), points.end());
  std::sort(k.points.begin(), k.points.end());

  const double sd = vec_stddev(k.points);
  if (sd <= 0.0)
    throw DataError("kde_fit: all points equal (degenerate input)");
  const double iqr =
      rank_quantile(k.points, 0.75) - rank_quantile(k.points, 0.25);
  const double n = static_cast<double>(k.points.size());
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  k.bandwidth = 0.9 * spread * std::pow(n, -0.2);
  kde_build_table(k);
  return k;
}

void kde_build_table(Kde1D& k) {
  k.grid_x.clear();
  k.grid_cdf.clear();
  k.grid_pdf.clear();
  if (k.points.size() <= kKdeExactEvalLimit) return;

  const double h = k.bandwidth;
  const double lo = k.points.front() - 10.0 * h;
  const double hi = k.points.back() + 10.0 * h;
  const std::size_t n_nodes = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil((hi - lo) / (h / 16.0))) + 1, 1025,
      32769);
  k.grid_x.resize(n_nodes);
  k.grid_cdf.resize(n_nodes);
  k.grid_pdf.resize(n_nodes);
  const double dx = (hi - lo) / static_cast<double>(n_nodes - 1);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const double x = lo + dx * static_cast<double>(i);
    const auto e = exact_sums(k, x);
    k.grid_x[i] = x;
    k.grid_cdf[i] = e.cdf;
    k.grid_pdf[i] = e.pdf;
  }
}

double kde_pdf(const Kde1D& k, double x) {
  if (k.grid_x.empty()) return exact_sums(k, x).pdf;
  std::size_t cell;
  double t;
  if (!find_cell(k, x, cell, t)) return 0.0;
  const double dx = k.grid_x[cell + 1] - k.grid_x[cell];
  const double c0 = k.grid_cdf[cell], c1 = k.grid_cdf[cell + 1];
  const double d0 = k.grid_pdf[cell], d1 = k.grid_pdf[cell + 1];
  // derivative of the cubic Hermite CDF interpolant
  const double dh00 = 6.0 * t * t - 6.0 * t;
  const double dh10 = 3.0 * t * t - 4.0 * t + 1.0;
  const double dh01 = -dh00;
  const double dh11 = 3.0 * t * t - 2.0 * t;
  const double deriv =
      (dh00 * c0 + dh01 * c1) / dx + dh10 * d0 + dh11 * d1;
  return std::max(deriv, 0.0);
}

double kde_cdf(const Kde1D& k, double x) {
  if (k.grid_x.empty()) return exact_sums(k, x).cdf;
  std::size_t cell;
  double t;
  if (!find_cell(k, x, cell, t)) return x < k.grid_x.front() ? 0.0 : 1.0;
  const double dx = k.grid_x[cell + 1] - k.grid_x[cell];
  const double c0 = k.grid_cdf[cell], c1 = k.grid_cdf[cell + 1];
  const double d0 = k.grid_pdf[cell], d1 = k.grid_pdf[cell + 1];
  const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
  const double h10 = t * (1.0 - t) * (1.0 - t);
  const double h01 = t * t * (3.0 - 2.0 * t);
  const double h11 = t * t * (t - 1.0);
  const double v = h00 * c0 + h01 * c1 + dx * (h10 * d0 + h11 * d1);
  return std::clamp(v, 0.0, 1.0);
}

double kde_ppf(const Kde1D& k, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw DomainError("kde_ppf: quantile level must lie in (0,1)");
  double lo = k.points.front() - 10.0 * k.bandwidth;
  double hi = k.points.back() + 10.0 * k.bandwidth;
  double flo = kde_cdf(k, lo) - q;
  double fhi = kde_cdf(k, hi) - q;
  if (flo > 0.0 || fhi < 0.0)
    throw NumericError("kde_ppf: bracket does not contain quantile " +
                       std::to_string(q));
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = kde_cdf(k, mid) - q;
    if (std::abs(f) <= 1e-10) break;
    if (hi - lo < 1e-14 * std::max({1.0, std::abs(lo), std::abs(hi)})) break;
    if (f < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

}  // namespace comet
