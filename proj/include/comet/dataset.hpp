#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace comet {

// Row-major real matrix with optional column names.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;        // rows * cols, row-major
  std::vector<std::string> columns;  // empty or exactly cols names
  std::string provenance;            // seed or source path

  double at(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
  std::vector<double> column(std::size_t c) const;

  // Throws on inconsistent sizes or non-finite entries.
  void validate() const;
};

Dataset make_dataset(std::size_t rows, std::size_t cols,
                     std::vector<double> values,
                     std::vector<std::string> columns = {},
                     std::string provenance = {});

// 8-dimensional heavy-tailed benchmark. Each row starts uniform on [0,1]^8;
// independently per pair, with probability 0.05 the pair jumps to an extreme
// regime driven by one shared GP(0,1,1) excess g (the shared value is what
// produces tail dependence):
//   (x1,x2) -> 1+g (upper tail), (x3,x4) -> -g (lower tail),
//   (x5,x6) -> 1+g or -g with equal probability.
// x8 always copies x7; with probability 0.05, x7 itself jumps to 1+g or -g.
Dataset gen_synthetic(std::size_t n, std::uint64_t seed);

struct SyntheticSplits {
  Dataset train, val, test;
};

// Three independent draws with derived sub-seeds. scale = 1 gives the
// 200,000 / 25,000 / 25,000 reference sizes; smaller scales are for
// desk-size runs (e.g. 0.1 -> 20,000 / 2,500 / 2,500).
SyntheticSplits standard_splits(std::uint64_t seed, double scale = 1.0);

// Comma-separated numeric matrix, optional single header row, "\n" line
// endings. Values are written with 17 significant digits so doubles
// round-trip exactly.
Dataset load_csv(const std::string& path, bool has_header);
void save_csv(const Dataset& ds, const std::string& path);

struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Per-column mean/std (population convention); throws DataError naming any
// zero-variance column.
ColumnStats column_stats(const Dataset& ds);
Dataset apply_standardize(const Dataset& ds, const ColumnStats& stats);
std::pair<Dataset, ColumnStats> standardize(const Dataset& ds);

// Seeded permutation partition; fraction boundaries are rounded cumulative
// row counts.
std::vector<Dataset> split(const Dataset& ds, std::span<const double> fractions,
                           std::uint64_t seed);

// 17-significant-digit text for a double, parsed back bit-exactly.
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace comet
