#include "comet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "comet/errors.hpp"

namespace comet {

double vec_mean(std::span<const double> v) {
  if (v.empty()) throw DomainError("mean of empty vector");
  return kahan_sum(v) / static_cast<double>(v.size());
}

double vec_stddev(std::span<const double> v) {
  const double m = vec_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double kahan_sum(std::span<const double> v) {
  double sum = 0.0, carry = 0.0;
  for (double x : v) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw ShapeError("pearson: vectors must have equal length >= 2");
  const double ma = vec_mean(a), mb = vec_mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw DataError("pearson: zero-variance input");
  return sab / std::sqrt(saa * sbb);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of empty vector");
  if (p < 0.0 || p > 1.0) throw DomainError("quantile level outside [0,1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

double normal_pdf(double x) {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double normal_log_pdf(double x) {
  static const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return -kLogSqrt2Pi - 0.5 * x * x;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace comet
