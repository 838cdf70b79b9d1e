#pragma once

#include <span>
#include <vector>

namespace comet {

double vec_mean(std::span<const double> v);

// Population standard deviation (divides by n).
double vec_stddev(std::span<const double> v);

// Compensated (Kahan) sum.
double kahan_sum(std::span<const double> v);

double pearson(std::span<const double> a, std::span<const double> b);

// Quantile by linear interpolation between order statistics of an
// ascending-sorted vector: position h = (n-1)p.
double quantile_sorted(std::span<const double> sorted, double p);

// Copies, sorts, interpolates.
double quantile(std::span<const double> values, double p);

double normal_cdf(double x);
double normal_pdf(double x);
double normal_log_pdf(double x);
double sigmoid(double x);

}  // namespace comet
