#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "comet/dataset.hpp"
#include "comet/model.hpp"

namespace comet {

enum class TailDepSide { kUpper, kLower };

// Mean negative log-density over the rows, at sigma = 0.
double avg_nll(const CometModel& model, const Dataset& test);

// Empirical tail-dependence coefficient between columns i and j at quantile
// level u: upper counts #{x_i > q_i and x_j > q_j} / #{x_j > q_j}; lower
// uses < with the same level (callers pass small levels, e.g. 0.05, for the
// lower side). Quantiles use interpolated order statistics.
double tail_dep_coeff(const Dataset& samples, std::size_t i, std::size_t j,
                      double u, TailDepSide side);

// Kolmogorov-Smirnov sup-distance between the empirical CDF of values in
// [0,1] and the uniform CDF.
double ks_uniformity(std::span<const double> values);

struct TailDepEntry {
  std::size_t col_i = 0;
  std::size_t col_j = 0;
  TailDepSide side = TailDepSide::kUpper;
  double level = 0.0;
  double data_value = 0.0;
  double sample_value = 0.0;
};

struct QuantileEntry {
  std::size_t col = 0;
  double level = 0.0;
  double data_value = 0.0;
  double sample_value = 0.0;
};

struct EvalReport {
  double average_nll = 0.0;
  std::vector<TailDepEntry> tail_dependence;
  std::vector<double> pit_ks;  // one KS statistic per dimension
  std::vector<QuantileEntry> quantiles;
  std::vector<std::pair<std::string, std::string>> config;  // stable order
};

// Full evaluation: test NLL, tail-dependence at upper levels {0.95, 0.99}
// and lower levels {0.05, 0.01} for consecutive column pairs on both the
// test data and `sample_count` fresh model samples (drawn at sigma = 0 from
// the given seed), per-dimension KS of the probability-integral transform,
// and a data-vs-sample quantile table.
EvalReport evaluate(const CometModel& model, const Dataset& test,
                    std::size_t sample_count, std::uint64_t seed);

// Key-value text document with stable key order; parses back losslessly.
std::string report_to_text(const EvalReport& report);
EvalReport report_from_text(const std::string& text);
void report_write_text(const EvalReport& report, const std::string& path);

// Plot-ready CSV of (pair, side, level, data value, sample value).
void report_write_plot_csv(const EvalReport& report, const std::string& path);

}  // namespace comet
