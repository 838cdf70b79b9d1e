// Test-only numerical oracles: adaptive quadrature, finite-difference
// gradients and Jacobians, and a dense log-determinant. Kept independent of
// the library's analytic code paths on purpose.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double adaptive_simpson_impl(const std::function<double(double)>& f,
                                    double a, double b, double fa, double fb,
                                    double fm, double whole, double tol,
                                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_impl(f, a, m, fa, fm, flm, left, tol / 2.0,
                               depth - 1) +
         adaptive_simpson_impl(f, m, b, fm, fb, frm, right, tol / 2.0,
                               depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-9) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_impl(f, a, b, fa, fb, fm, whole, tol, 40);
}

using VecFn = std::function<std::vector<double>(const std::vector<double>&)>;

// Central-difference Jacobian, row-major [out x in].
inline std::vector<double> jacobian(const VecFn& f, std::vector<double> x,
                                    double step = 1e-6) {
  const std::vector<double> base = f(x);
  const std::size_t n_out = base.size(), n_in = x.size();
  std::vector<double> jac(n_out * n_in);
  for (std::size_t c = 0; c < n_in; ++c) {
    const double orig = x[c];
    const double h = step * std::max(1.0, std::abs(orig));
    x[c] = orig + h;
    const std::vector<double> fp = f(x);
    x[c] = orig - h;
    const std::vector<double> fm = f(x);
    x[c] = orig;
    for (std::size_t r = 0; r < n_out; ++r)
      jac[r * n_in + c] = (fp[r] - fm[r]) / (2.0 * h);
  }
  return jac;
}

// log |det A| for a dense row-major n x n matrix via partial-pivot LU.
inline double log_abs_det(std::vector<double> a, std::size_t n) {
  double log_det = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (a[pivot * n + col] == 0.0)
      throw std::runtime_error("log_abs_det: singular matrix");
    if (pivot != col)
      for (std::size_t c = 0; c < n; ++c)
        std::swap(a[pivot * n + c], a[col * n + c]);
    log_det += std::log(std::abs(a[col * n + col]));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c)
        a[r * n + c] -= factor * a[col * n + c];
    }
  }
  return log_det;
}

using ScalarFn = std::function<double(const std::vector<double>&)>;

// Central-difference gradient of a scalar function.
inline std::vector<double> gradient(const ScalarFn& f, std::vector<double> x,
                                    double step = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline double rel_err(double a, double b, double floor = 1e-8) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

}  // namespace oracle
