#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "comet/errors.hpp"
#include "comet/kde.hpp"
#include "comet/rng.hpp"
#include "support/oracles.hpp"

using namespace comet;

TEST_SUITE("kde") {
  TEST_CASE("two-point bandwidth comes from the std of 0.5") {
    const Kde1D k = kde_fit(std::vector<double>{0.0, 1.0});
    const double expected = 0.9 * 0.5 * std::pow(2.0, -0.2);
    CHECK(k.bandwidth == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("points are sorted regardless of input order") {
    const Kde1D k = kde_fit(std::vector<double>{3.0, -1.0, 2.0, 0.5});
    for (std::size_t i = 1; i < k.points.size(); ++i)
      CHECK(k.points[i - 1] <= k.points[i]);
  }

  TEST_CASE("degenerate input is rejected") {
    CHECK_THROWS_AS(kde_fit(std::vector<double>{1.0}), DataError);
    CHECK_THROWS_AS(kde_fit(std::vector<double>(10, 3.0)), DataError);
  }

  TEST_CASE("symmetric two-point estimate has cdf(0) = 0.5") {
    const Kde1D k = kde_fit(std::vector<double>{-1.0, 1.0});
    CHECK(kde_cdf(k, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("pdf at 0 for 10k standard normals (Monte-Carlo oracle)") {
    Rng rng(11);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = rng.normal();
    const Kde1D k = kde_fit(xs);
    const double truth = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    CHECK(std::abs(kde_pdf(k, 0.0) - truth) < 0.05);
  }

  TEST_CASE("cdf is nondecreasing on a 1000-point sweep") {
    Rng rng(5);
    std::vector<double> xs(800);  // exact-summation path
    for (auto& x : xs) x = rng.uniform(-2.0, 2.0) + rng.normal() * 0.3;
    const Kde1D k = kde_fit(std::vector<double>(xs.begin(), xs.begin() + 400));
    double prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = -4.0 + 8.0 * i / 999.0;
      const double c = kde_cdf(k, x);
      CHECK(c >= prev);
      CHECK(kde_pdf(k, x) >= 0.0);
      prev = c;
    }
  }

  TEST_CASE("ppf/cdf round trip within 1e-8 (100 random levels)") {
    Rng rng(13);
    std::vector<double> xs(2000);  // table-backed path
    for (auto& x : xs) x = rng.normal() * 1.7 + 0.3;
    const Kde1D k = kde_fit(xs);
    REQUIRE(!k.grid_x.empty());
    for (int i = 0; i < 100; ++i) {
      const double q = rng.uniform(0.001, 0.999);
      CHECK(kde_cdf(k, kde_ppf(k, q)) == doctest::Approx(q).epsilon(1e-8));
    }
  }

  TEST_CASE("ppf/cdf round trip on the exact-summation path") {
    Rng rng(29);
    std::vector<double> xs(200);
    for (auto& x : xs) x = rng.normal();
    const Kde1D k = kde_fit(xs);
    REQUIRE(k.grid_x.empty());
    for (int i = 0; i < 50; ++i) {
      const double q = rng.uniform(0.001, 0.999);
      CHECK(kde_cdf(k, kde_ppf(k, q)) == doctest::Approx(q).epsilon(1e-8));
    }
  }

  TEST_CASE("table path agrees with exact sums") {
    Rng rng(41);
    std::vector<double> xs(4000);
    for (auto& x : xs) x = rng.uniform(0.0, 1.0);
    const Kde1D k = kde_fit(xs);
    REQUIRE(!k.grid_x.empty());

    Kde1D exact = k;  // same points/bandwidth, force exact evaluation
    exact.grid_x.clear();
    exact.grid_cdf.clear();
    exact.grid_pdf.clear();

    for (double x : {0.05, 0.31, 0.5, 0.77, 0.99}) {
      CHECK(kde_cdf(k, x) == doctest::Approx(kde_cdf(exact, x)).epsilon(1e-8));
      CHECK(kde_pdf(k, x) ==
            doctest::Approx(kde_pdf(exact, x)).epsilon(1e-2).scale(1.0));
    }
  }

  TEST_CASE("ppf rejects out-of-range levels") {
    const Kde1D k = kde_fit(std::vector<double>{0.0, 1.0, 2.0});
    CHECK_THROWS_AS(kde_ppf(k, 0.0), DomainError);
    CHECK_THROWS_AS(kde_ppf(k, 1.0), DomainError);
  }
}
