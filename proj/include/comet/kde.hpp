#pragma once

#include <span>
#include <vector>

namespace comet {

// 1-D Gaussian kernel density estimate with an invertible CDF.
//
// pdf(x)  = mean_j phi((x - x_j)/h) / h
// cdf(x)  = mean_j Phi((x - x_j)/h)
// ppf(q)  = bisection inverse of cdf on [min - 10h, max + 10h]
//
// Up to kKdeExactEvalLimit support points the kernel sums are evaluated
// directly. Beyond that a dense cubic-Hermite table is precomputed at fit
// time (node values and derivatives are the exact sums; node spacing is
// h/16, keeping the CDF error below ~1e-9); the pdf is served as the
// analytic derivative of the tabulated CDF so density and transform stay
// mutually consistent.
struct Kde1D {
  std::vector<double> points;  // sorted ascending, n >= 2
  double bandwidth = 0.0;      // Silverman's rule

  std::vector<double> grid_x;    // empty when exact sums are used
  std::vector<double> grid_cdf;
  std::vector<double> grid_pdf;
};

inline constexpr std::size_t kKdeExactEvalLimit = 512;

Kde1D kde_fit(std::span<const double> points);
double kde_pdf(const Kde1D& k, double x);
double kde_cdf(const Kde1D& k, double x);
double kde_ppf(const Kde1D& k, double q);  // 0 < q < 1, |cdf - q| <= 1e-10

// (Re)build the evaluation table from points + bandwidth; used by kde_fit
// and when deserializing a fitted estimate.
void kde_build_table(Kde1D& k);

}  // namespace comet
