#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "comet/errors.hpp"
#include "comet/eval.hpp"
#include "comet/rng.hpp"
#include "support/tempdir.hpp"

using namespace comet;

namespace {

// untrained baseline model: an exact standard Gaussian in d dimensions
CometModel gaussian_model(std::size_t d) {
  CometModel m;
  m.mode = ModelMode::kRealnvpBaseline;
  m.dim = d;
  Rng rng(1);
  m.flow = make_flow(d, 2, std::vector<std::size_t>{4}, 0.0, false, rng);
  m.standardization.mean.assign(d, 0.0);
  m.standardization.stddev.assign(d, 1.0);
  return m;
}

Dataset matrix(std::size_t rows, std::size_t cols,
               std::vector<double> values) {
  return make_dataset(rows, cols, std::move(values));
}

const FitResult& eval_fit() {
  static const SyntheticSplits s = standard_splits(505, 0.01);
  static const FitResult r = [] {
    TrainConfig cfg;
    cfg.coupling_layers = 4;
    cfg.hidden = {16};
    cfg.max_epochs = 4;
    cfg.seed = 99;
    return fit(s.train, s.val, cfg, ModelMode::kComet);
  }();
  return r;
}

const Dataset& eval_test() {
  static const Dataset t = standard_splits(505, 0.01).test;
  return t;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("standard Gaussian NLL at the origin is d/2 * log(2*pi)") {
    const CometModel m = gaussian_model(2);
    const Dataset single = matrix(1, 2, {0.0, 0.0});
    const double expected = std::log(2.0 * std::numbers::pi);  // 2 * 0.91894
    CHECK(avg_nll(m, single) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(0.5 * expected == doctest::Approx(0.91894).epsilon(1e-4));
  }

  TEST_CASE("constant shift in log_prob moves avg_nll by -c") {
    const CometModel m = gaussian_model(2);
    Rng rng(3);
    std::vector<double> vals(20);
    for (auto& v : vals) v = rng.normal();
    const Dataset ds = matrix(10, 2, std::move(vals));
    const double base = avg_nll(m, ds);
    const double c = 1.75;
    double shifted_mean = 0.0;
    for (std::size_t r = 0; r < ds.rows; ++r)
      shifted_mean += log_prob(m, ds.row(r)) + c;
    shifted_mean /= static_cast<double>(ds.rows);
    CHECK(-shifted_mean == doctest::Approx(base - c).epsilon(1e-12));
  }

  TEST_CASE("avg_nll agrees with streaming and two-pass means to 1e-12") {
    const CometModel m = gaussian_model(2);
    Rng rng(5);
    std::vector<double> vals(5000);
    for (auto& v : vals) v = rng.normal() * 2.0;
    const Dataset ds = matrix(2500, 2, std::move(vals));
    const double reported = avg_nll(m, ds);

    // two-pass: plain sum, then divide
    double plain = 0.0;
    for (std::size_t r = 0; r < ds.rows; ++r) plain += log_prob(m, ds.row(r));
    const double two_pass = -plain / static_cast<double>(ds.rows);

    // streaming (Welford-style running mean)
    double running = 0.0;
    for (std::size_t r = 0; r < ds.rows; ++r)
      running += (-log_prob(m, ds.row(r)) - running) /
                 static_cast<double>(r + 1);

    CHECK(std::abs(reported - two_pass) <= 1e-12 * std::abs(reported));
    CHECK(std::abs(reported - running) <= 1e-12 * std::abs(reported));
  }

  TEST_CASE("avg_nll is additive over dataset unions") {
    const CometModel m = gaussian_model(2);
    Rng rng(7);
    std::vector<double> va(300), vb(500);
    for (auto& v : va) v = rng.normal();
    for (auto& v : vb) v = rng.normal() + 0.5;
    const Dataset d1 = matrix(150, 2, va);
    const Dataset d2 = matrix(250, 2, vb);
    std::vector<double> both = va;
    both.insert(both.end(), vb.begin(), vb.end());
    const Dataset d12 = matrix(400, 2, both);
    const double lhs = avg_nll(m, d12) * 400.0;
    const double rhs = avg_nll(m, d1) * 150.0 + avg_nll(m, d2) * 250.0;
    CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(lhs)));
  }

  TEST_CASE("tail dependence of perfectly collinear columns is 1") {
    Rng rng(9);
    std::vector<double> vals;
    for (int i = 0; i < 10000; ++i) {
      const double x = rng.normal();
      vals.push_back(x);
      vals.push_back(x);
    }
    const Dataset ds = matrix(10000, 2, std::move(vals));
    for (double u : {0.9, 0.95, 0.99})
      CHECK(tail_dep_coeff(ds, 0, 1, u, TailDepSide::kUpper) == 1.0);
    CHECK(tail_dep_coeff(ds, 0, 1, 0.05, TailDepSide::kLower) == 1.0);
  }

  TEST_CASE("independent uniforms give lambda ~ 1 - u") {
    Rng rng(11);
    std::vector<double> vals(200000);
    for (auto& v : vals) v = rng.uniform01();
    const Dataset ds = matrix(100000, 2, std::move(vals));
    const double lam = tail_dep_coeff(ds, 0, 1, 0.95, TailDepSide::kUpper);
    CHECK(std::abs(lam - 0.05) < 0.01);
    const double lam_lo = tail_dep_coeff(ds, 0, 1, 0.05, TailDepSide::kLower);
    CHECK(std::abs(lam_lo - 0.05) < 0.01);
  }

  TEST_CASE("tail dependence is invariant under increasing transforms") {
    const Dataset ds = gen_synthetic(20000, 13);
    Dataset warped = ds;
    for (std::size_t r = 0; r < ds.rows; ++r) {
      warped.at(r, 0) = std::exp(0.3 * ds.at(r, 0));
      warped.at(r, 1) = std::atan(ds.at(r, 1)) * 2.0;
    }
    for (double u : {0.9, 0.95, 0.99}) {
      CHECK(tail_dep_coeff(ds, 0, 1, u, TailDepSide::kUpper) ==
            tail_dep_coeff(warped, 0, 1, u, TailDepSide::kUpper));
    }
    CHECK(tail_dep_coeff(ds, 0, 1, 0.05, TailDepSide::kLower) ==
          tail_dep_coeff(warped, 0, 1, 0.05, TailDepSide::kLower));
  }

  TEST_CASE("tail dependence rejects empty conditioning sets") {
    // constant conditioning column: nothing exceeds its own quantile
    std::vector<double> vals;
    for (int i = 0; i < 50; ++i) {
      vals.push_back(i);
      vals.push_back(1.0);
    }
    const Dataset ds = matrix(50, 2, std::move(vals));
    CHECK_THROWS_AS(tail_dep_coeff(ds, 0, 1, 0.9, TailDepSide::kUpper),
                    DataError);
    CHECK_THROWS_AS(tail_dep_coeff(ds, 0, 5, 0.9, TailDepSide::kUpper),
                    ShapeError);
    CHECK_THROWS_AS(tail_dep_coeff(ds, 0, 1, 1.5, TailDepSide::kUpper),
                    DomainError);
  }

  TEST_CASE("ks statistic of equally spaced values is 1/n") {
    const std::size_t n = 50;
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k)
      v[k] = static_cast<double>(k + 1) / static_cast<double>(n);
    CHECK(ks_uniformity(v) == doctest::Approx(1.0 / n).epsilon(1e-12));
  }

  TEST_CASE("ks statistic of a point mass at 0.5 is 0.5") {
    const std::vector<double> v(100, 0.5);
    CHECK(ks_uniformity(v) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("ks statistic of genuine uniforms stays below 0.02") {
    Rng rng(15);
    std::vector<double> v(10000);
    for (auto& x : v) x = rng.uniform01();
    CHECK(ks_uniformity(v) < 0.02);
  }

  TEST_CASE("ks rejects values outside the unit interval") {
    std::vector<double> v(20, 0.5);
    v[3] = 1.5;
    CHECK_THROWS_AS(ks_uniformity(v), DomainError);
  }

  TEST_CASE("evaluate populates every field with finite values") {
    const EvalReport rep = evaluate(eval_fit().model, eval_test(), 2000, 42);
    CHECK(std::isfinite(rep.average_nll));
    REQUIRE(rep.tail_dependence.size() == 16);  // 4 pairs x 4 level/side combos
    for (const auto& e : rep.tail_dependence) {
      CHECK(e.data_value >= 0.0);
      CHECK(e.data_value <= 1.0);
      CHECK(e.sample_value >= 0.0);
      CHECK(e.sample_value <= 1.0);
    }
    REQUIRE(rep.pit_ks.size() == 8);
    for (double v : rep.pit_ks) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(!rep.quantiles.empty());
    CHECK(!rep.config.empty());
  }

  TEST_CASE("evaluate matches a direct tail_dep_coeff call") {
    const EvalReport rep = evaluate(eval_fit().model, eval_test(), 2000, 42);
    for (const auto& e : rep.tail_dependence) {
      if (e.side == TailDepSide::kUpper && e.col_i == 0 && e.level == 0.95) {
        const double direct =
            tail_dep_coeff(eval_test(), 0, 1, 0.95, TailDepSide::kUpper);
        CHECK(e.data_value == direct);
      }
    }
  }

  TEST_CASE("report round-trips losslessly through text") {
    const EvalReport rep = evaluate(eval_fit().model, eval_test(), 2000, 42);
    const std::string text = report_to_text(rep);
    const EvalReport back = report_from_text(text);
    CHECK(back.average_nll == rep.average_nll);
    REQUIRE(back.tail_dependence.size() == rep.tail_dependence.size());
    for (std::size_t i = 0; i < rep.tail_dependence.size(); ++i) {
      CHECK(back.tail_dependence[i].data_value ==
            rep.tail_dependence[i].data_value);
      CHECK(back.tail_dependence[i].sample_value ==
            rep.tail_dependence[i].sample_value);
      CHECK(back.tail_dependence[i].level == rep.tail_dependence[i].level);
    }
    CHECK(back.pit_ks == rep.pit_ks);
    REQUIRE(back.quantiles.size() == rep.quantiles.size());
    for (std::size_t i = 0; i < rep.quantiles.size(); ++i)
      CHECK(back.quantiles[i].data_value == rep.quantiles[i].data_value);
    CHECK(back.config == rep.config);
    CHECK(report_to_text(back) == text);
  }

  TEST_CASE("report files are written") {
    testutil::TempDir tmp;
    const EvalReport rep = evaluate(eval_fit().model, eval_test(), 500, 42);
    report_write_text(rep, tmp.file("report.txt"));
    report_write_plot_csv(rep, tmp.file("plot.csv"));
    const Dataset plot = [&] {
      // csv has string columns; just confirm line count via text read
      std::ifstream in(tmp.file("plot.csv"));
      std::string line;
      std::size_t lines = 0;
      while (std::getline(in, line)) ++lines;
      Dataset d;
      d.rows = lines;
      d.cols = 1;
      d.values.assign(lines, 0.0);
      return d;
    }();
    CHECK(plot.rows == 17);  // header + 16 entries
    std::ifstream in(tmp.file("report.txt"));
    std::string first;
    std::getline(in, first);
    CHECK(first.find("avg_nll") == 0);
  }
}
