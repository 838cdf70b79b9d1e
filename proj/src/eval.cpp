#include "comet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "comet/errors.hpp"
#include "comet/stats.hpp"

namespace comet {

double avg_nll(const CometModel& model, const Dataset& test) {
  const std::vector<double> lp = log_probs(model, test);
  return -kahan_sum(lp) / static_cast<double>(lp.size());
}

double tail_dep_coeff(const Dataset& samples, std::size_t i, std::size_t j,
                      double u, TailDepSide side) {
  samples.validate();
  if (i >= samples.cols || j >= samples.cols)
    throw ShapeError("tail_dep_coeff: column index out of range");
  if (!(u > 0.0 && u < 1.0))
    throw DomainError("tail_dep_coeff: level must lie in (0,1)");

  const std::vector<double> ci = samples.column(i);
  const std::vector<double> cj = samples.column(j);
  const double qi = quantile(ci, u);
  const double qj = quantile(cj, u);

  std::size_t both = 0, cond = 0;
  for (std::size_t r = 0; r < samples.rows; ++r) {
    const bool ev_j =
        side == TailDepSide::kUpper ? cj[r] > qj : cj[r] < qj;
    if (!ev_j) continue;
    ++cond;
    const bool ev_i =
        side == TailDepSide::kUpper ? ci[r] > qi : ci[r] < qi;
    if (ev_i) ++both;
  }
  if (cond == 0)
    throw DataError("tail_dep_coeff: conditioning event is empty at level " +
                    std::to_string(u));
  return static_cast<double>(both) / static_cast<double>(cond);
}

double ks_uniformity(std::span<const double> values) {
  if (values.size() < 10)
    throw DataError("ks_uniformity: need at least 10 values");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v)
    if (!(x >= 0.0 && x <= 1.0))
      throw DomainError("ks_uniformity: values must lie in [0,1]");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double hi = (static_cast<double>(k) + 1.0) / n - v[k];
    const double lo = v[k] - static_cast<double>(k) / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

namespace {

Dataset rows_to_dataset(const std::vector<std::vector<double>>& rows,
                        std::size_t cols) {
  Dataset ds;
  ds.rows = rows.size();
  ds.cols = cols;
  ds.values.reserve(ds.rows * cols);
  for (const auto& r : rows)
    ds.values.insert(ds.values.end(), r.begin(), r.end());
  return ds;
}

}  // namespace

EvalReport evaluate(const CometModel& model, const Dataset& test,
                    std::size_t sample_count, std::uint64_t seed) {
  test.validate();
  if (test.cols != model.dim)
    throw ShapeError("evaluate: dataset width " + std::to_string(test.cols) +
                     " != model dimension " + std::to_string(model.dim));
  if (sample_count < 10)
    throw DomainError("evaluate: need at least 10 samples");

  EvalReport rep;
  rep.average_nll = avg_nll(model, test);

  Rng rng(seed);
  const Dataset drawn =
      rows_to_dataset(sample(model, sample_count, 0.0, rng), model.dim);

  // tail dependence for consecutive pairs, both sides, data vs samples
  const double upper_levels[] = {0.95, 0.99};
  const double lower_levels[] = {0.05, 0.01};
  for (std::size_t p = 0; p + 1 < model.dim; p += 2) {
    for (double lvl : upper_levels) {
      TailDepEntry e;
      e.col_i = p;
      e.col_j = p + 1;
      e.side = TailDepSide::kUpper;
      e.level = lvl;
      e.data_value = tail_dep_coeff(test, p, p + 1, lvl, TailDepSide::kUpper);
      e.sample_value =
          tail_dep_coeff(drawn, p, p + 1, lvl, TailDepSide::kUpper);
      rep.tail_dependence.push_back(e);
    }
    for (double lvl : lower_levels) {
      TailDepEntry e;
      e.col_i = p;
      e.col_j = p + 1;
      e.side = TailDepSide::kLower;
      e.level = lvl;
      e.data_value = tail_dep_coeff(test, p, p + 1, lvl, TailDepSide::kLower);
      e.sample_value =
          tail_dep_coeff(drawn, p, p + 1, lvl, TailDepSide::kLower);
      rep.tail_dependence.push_back(e);
    }
  }

  // per-dimension KS of the probability-integral transform
  for (std::size_t c = 0; c < model.dim; ++c) {
    std::vector<double> pit(test.rows);
    if (model.mode == ModelMode::kComet) {
      for (std::size_t r = 0; r < test.rows; ++r)
        pit[r] = marginal_transform(model.marginals[c], test.at(r, c));
    } else {
      for (std::size_t r = 0; r < test.rows; ++r)
        pit[r] = normal_cdf((test.at(r, c) - model.standardization.mean[c]) /
                            model.standardization.stddev[c]);
    }
    rep.pit_ks.push_back(ks_uniformity(pit));
  }

  // data-vs-sample quantile table
  const double q_levels[] = {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};
  for (std::size_t c = 0; c < model.dim; ++c) {
    std::vector<double> dc = test.column(c);
    std::vector<double> sc = drawn.column(c);
    std::sort(dc.begin(), dc.end());
    std::sort(sc.begin(), sc.end());
    for (double lvl : q_levels) {
      QuantileEntry e;
      e.col = c;
      e.level = lvl;
      e.data_value = quantile_sorted(dc, lvl);
      e.sample_value = quantile_sorted(sc, lvl);
      rep.quantiles.push_back(e);
    }
  }

  rep.config = {
      {"mode", to_string(model.mode)},
      {"dim", std::to_string(model.dim)},
      {"test_rows", std::to_string(test.rows)},
      {"sample_count", std::to_string(sample_count)},
      {"sample_seed", std::to_string(seed)},
      {"model_seed", std::to_string(model.seed)},
      {"config_hash", std::to_string(model.config_hash)},
  };
  return rep;
}

namespace {

const char* side_name(TailDepSide s) {
  return s == TailDepSide::kUpper ? "upper" : "lower";
}

TailDepSide side_from_name(const std::string& s) {
  if (s == "upper") return TailDepSide::kUpper;
  if (s == "lower") return TailDepSide::kLower;
  throw ParseError("unknown tail side: " + s);
}

}  // namespace

std::string report_to_text(const EvalReport& rep) {
  std::ostringstream os;
  os << "avg_nll " << format_double(rep.average_nll) << '\n';
  os << "tail_dependence " << rep.tail_dependence.size() << '\n';
  for (const auto& e : rep.tail_dependence)
    os << "pair " << e.col_i + 1 << ' ' << e.col_j + 1 << ' '
       << side_name(e.side) << ' ' << format_double(e.level) << " data "
       << format_double(e.data_value) << " sample "
       << format_double(e.sample_value) << '\n';
  os << "pit_ks " << rep.pit_ks.size();
  for (double v : rep.pit_ks) os << ' ' << format_double(v);
  os << '\n';
  os << "quantiles " << rep.quantiles.size() << '\n';
  for (const auto& e : rep.quantiles)
    os << "quantile " << e.col + 1 << ' ' << format_double(e.level) << " data "
       << format_double(e.data_value) << " sample "
       << format_double(e.sample_value) << '\n';
  os << "config " << rep.config.size() << '\n';
  for (const auto& [k, v] : rep.config) os << k << ' ' << v << '\n';
  return os.str();
}

EvalReport report_from_text(const std::string& text) {
  std::istringstream in(text);
  EvalReport rep;
  std::string key;

  auto need = [&](const char* expected) {
    if (!(in >> key) || key != expected)
      throw ParseError(std::string("report: expected key \"") + expected +
                       "\"");
  };

  need("avg_nll");
  std::string w;
  in >> w;
  rep.average_nll = parse_double(w);

  need("tail_dependence");
  std::size_t n;
  in >> n;
  for (std::size_t i = 0; i < n; ++i) {
    need("pair");
    TailDepEntry e;
    std::size_t ci, cj;
    std::string side, lvl, dv, sv;
    in >> ci >> cj >> side >> lvl;
    need("data");
    in >> dv;
    need("sample");
    in >> sv;
    e.col_i = ci - 1;
    e.col_j = cj - 1;
    e.side = side_from_name(side);
    e.level = parse_double(lvl);
    e.data_value = parse_double(dv);
    e.sample_value = parse_double(sv);
    rep.tail_dependence.push_back(e);
  }

  need("pit_ks");
  in >> n;
  rep.pit_ks.resize(n);
  for (auto& v : rep.pit_ks) {
    in >> w;
    v = parse_double(w);
  }

  need("quantiles");
  in >> n;
  for (std::size_t i = 0; i < n; ++i) {
    need("quantile");
    QuantileEntry e;
    std::size_t c;
    std::string lvl, dv, sv;
    in >> c >> lvl;
    need("data");
    in >> dv;
    need("sample");
    in >> sv;
    e.col = c - 1;
    e.level = parse_double(lvl);
    e.data_value = parse_double(dv);
    e.sample_value = parse_double(sv);
    rep.quantiles.push_back(e);
  }

  need("config");
  in >> n;
  for (std::size_t i = 0; i < n; ++i) {
    std::string k, v;
    if (!(in >> k >> v)) throw ParseError("report: truncated config section");
    rep.config.emplace_back(k, v);
  }
  return rep;
}

void report_write_text(const EvalReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write report file: " + path);
  out << report_to_text(rep);
  if (!out) throw FileError("short write to report file: " + path);
}

void report_write_plot_csv(const EvalReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write plot CSV: " + path);
  out << "pair,side,level,data_lambda,sample_lambda\n";
  for (const auto& e : rep.tail_dependence)
    out << "x" << e.col_i + 1 << "-x" << e.col_j + 1 << ',' << side_name(e.side)
        << ',' << format_double(e.level) << ',' << format_double(e.data_value)
        << ',' << format_double(e.sample_value) << '\n';
  if (!out) throw FileError("short write to plot CSV: " + path);
}

}  // namespace comet
