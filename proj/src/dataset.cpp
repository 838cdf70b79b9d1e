#include "comet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "comet/errors.hpp"
#include "comet/gpd.hpp"
#include "comet/rng.hpp"
#include "comet/stats.hpp"

namespace comet {

std::vector<double> Dataset::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
  return out;
}

void Dataset::validate() const {
  if (rows == 0 || cols == 0)
    throw ShapeError("dataset: empty matrix");
  if (values.size() != rows * cols)
    throw ShapeError("dataset: value buffer does not match rows * cols");
  if (!columns.empty() && columns.size() != cols)
    throw ShapeError("dataset: column name count mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("dataset: non-finite entry");
}

Dataset make_dataset(std::size_t rows, std::size_t cols,
                     std::vector<double> values,
                     std::vector<std::string> columns,
                     std::string provenance) {
  Dataset ds;
  ds.rows = rows;
  ds.cols = cols;
  ds.values = std::move(values);
  ds.columns = std::move(columns);
  ds.provenance = std::move(provenance);
  ds.validate();
  return ds;
}

Dataset gen_synthetic(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("gen_synthetic: need n >= 1");
  constexpr std::size_t kDim = 8;
  constexpr double kExtremeProb = 0.05;
  const GPDist tail{0.0, 1.0, 1.0};

  Rng rng(seed);
  Dataset ds;
  ds.rows = n;
  ds.cols = kDim;
  ds.values.resize(n * kDim);
  ds.columns = {"x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"};
  ds.provenance = "synthetic(seed=" + std::to_string(seed) + ")";

  for (std::size_t r = 0; r < n; ++r) {
    double* row = ds.values.data() + r * kDim;
    for (std::size_t c = 0; c < kDim; ++c) row[c] = rng.uniform01();

    auto draw_excess = [&] {
      double u = rng.uniform01();
      if (u <= 0.0) u = 0x1.0p-53;
      return gp_ppf(tail, u);
    };

    if (rng.uniform01() < kExtremeProb) {  // upper-tail pair
      const double g = draw_excess();
      row[0] = row[1] = 1.0 + g;
    }
    if (rng.uniform01() < kExtremeProb) {  // lower-tail pair
      const double g = draw_excess();
      row[2] = row[3] = -g;
    }
    if (rng.uniform01() < kExtremeProb) {  // both-tails pair
      const double g = draw_excess();
      const bool upper = rng.uniform01() < 0.5;
      row[4] = row[5] = upper ? 1.0 + g : -g;
    }
    if (rng.uniform01() < kExtremeProb) {  // collinear pair, both tails
      const double g = draw_excess();
      const bool upper = rng.uniform01() < 0.5;
      row[6] = upper ? 1.0 + g : -g;
    }
    row[7] = row[6];
  }
  return ds;
}

SyntheticSplits standard_splits(std::uint64_t seed, double scale) {
  if (!(scale > 0.0 && scale <= 1.0))
    throw DomainError("standard_splits: scale must lie in (0, 1]");
  auto scaled = [&](std::size_t full) {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(full * scale)));
  };
  SyntheticSplits s;
  s.train = gen_synthetic(scaled(200000), derive_seed(seed, 0));
  s.val = gen_synthetic(scaled(25000), derive_seed(seed, 1));
  s.test = gen_synthetic(scaled(25000), derive_seed(seed, 2));
  return s;
}

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError("not a number: \"" + text + "\"");
  return v;
}

Dataset load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open CSV file: " + path);

  Dataset ds;
  ds.provenance = path;
  std::string line;
  std::size_t data_row = 0;

  if (has_header && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) ds.columns.push_back(cell);
  }

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++data_row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      double v;
      try {
        v = parse_double(cell);
      } catch (const ParseError&) {
        throw ParseError("CSV cell at row " + std::to_string(data_row) +
                         ", col " + std::to_string(col) + " is not numeric: \"" +
                         cell + "\"");
      }
      ds.values.push_back(v);
    }
    if (ds.cols == 0) {
      ds.cols = col;
      if (!ds.columns.empty() && ds.columns.size() != ds.cols)
        throw ParseError("CSV header has " + std::to_string(ds.columns.size()) +
                         " names but rows have " + std::to_string(ds.cols) +
                         " columns");
    } else if (col != ds.cols) {
      throw ParseError("CSV row " + std::to_string(data_row) + " has " +
                       std::to_string(col) + " cells, expected " +
                       std::to_string(ds.cols));
    }
  }
  ds.rows = data_row;
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // "\n" endings everywhere
  if (!out) throw FileError("cannot write CSV file: " + path);
  if (!ds.columns.empty()) {
    for (std::size_t c = 0; c < ds.cols; ++c)
      out << ds.columns[c] << (c + 1 < ds.cols ? "," : "\n");
  }
  for (std::size_t r = 0; r < ds.rows; ++r) {
    for (std::size_t c = 0; c < ds.cols; ++c)
      out << format_double(ds.at(r, c)) << (c + 1 < ds.cols ? "," : "\n");
  }
  if (!out) throw FileError("short write to CSV file: " + path);
}

ColumnStats column_stats(const Dataset& ds) {
  ds.validate();
  ColumnStats st;
  st.mean.resize(ds.cols);
  st.stddev.resize(ds.cols);
  for (std::size_t c = 0; c < ds.cols; ++c) {
    const std::vector<double> col = ds.column(c);
    st.mean[c] = vec_mean(col);
    st.stddev[c] = vec_stddev(col);
    if (st.stddev[c] <= 0.0) {
      const std::string name =
          ds.columns.empty() ? std::to_string(c + 1) : ds.columns[c];
      throw DataError("column " + name + " has zero variance");
    }
  }
  return st;
}

Dataset apply_standardize(const Dataset& ds, const ColumnStats& stats) {
  if (stats.mean.size() != ds.cols || stats.stddev.size() != ds.cols)
    throw ShapeError("apply_standardize: stats width mismatch");
  Dataset out = ds;
  for (std::size_t r = 0; r < ds.rows; ++r)
    for (std::size_t c = 0; c < ds.cols; ++c)
      out.at(r, c) = (ds.at(r, c) - stats.mean[c]) / stats.stddev[c];
  return out;
}

std::pair<Dataset, ColumnStats> standardize(const Dataset& ds) {
  ColumnStats st = column_stats(ds);
  return {apply_standardize(ds, st), std::move(st)};
}

std::vector<Dataset> split(const Dataset& ds, std::span<const double> fractions,
                           std::uint64_t seed) {
  ds.validate();
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw DomainError("split: fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("split: fractions must sum to 1");

  Rng rng(seed);
  const std::vector<std::size_t> perm = rng.permutation(ds.rows);

  std::vector<Dataset> parts;
  double cum = 0.0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    cum += fractions[i];
    const std::size_t stop =
        i + 1 == fractions.size()
            ? ds.rows
            : static_cast<std::size_t>(std::llround(cum * ds.rows));
    Dataset part;
    part.cols = ds.cols;
    part.columns = ds.columns;
    part.provenance = ds.provenance + "#split" + std::to_string(i);
    part.rows = stop - start;
    part.values.reserve(part.rows * ds.cols);
    for (std::size_t r = start; r < stop; ++r) {
      const auto row = ds.row(perm[r]);
      part.values.insert(part.values.end(), row.begin(), row.end());
    }
    parts.push_back(std::move(part));
    start = stop;
  }
  return parts;
}

}  // namespace comet
