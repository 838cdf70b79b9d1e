// Python bindings for the core operations: synthetic data generation, CSV
// IO, model fitting, density evaluation, sampling, and the evaluation
// metrics.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <utility>

#include "comet/dataset.hpp"
#include "comet/errors.hpp"
#include "comet/eval.hpp"
#include "comet/gpd.hpp"
#include "comet/marginal.hpp"
#include "comet/model.hpp"

namespace py = pybind11;

namespace {

using Rows = std::vector<std::vector<double>>;

comet::Dataset rows_to_dataset(const Rows& rows,
                               std::vector<std::string> columns = {}) {
  if (rows.empty()) throw comet::ShapeError("empty row list");
  const std::size_t cols = rows.front().size();
  comet::Dataset ds;
  ds.rows = rows.size();
  ds.cols = cols;
  ds.values.reserve(ds.rows * cols);
  for (const auto& r : rows) {
    if (r.size() != cols)
      throw comet::ShapeError("ragged row list");
    ds.values.insert(ds.values.end(), r.begin(), r.end());
  }
  ds.columns = std::move(columns);
  ds.validate();
  return ds;
}

Rows dataset_to_rows(const comet::Dataset& ds) {
  Rows rows(ds.rows);
  for (std::size_t r = 0; r < ds.rows; ++r) {
    const auto row = ds.row(r);
    rows[r].assign(row.begin(), row.end());
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(cometflows, m) {
  m.doc() = "Semi-parametric heavy-tailed marginal transforms composed with "
            "a noise-conditioned coupling flow copula: density estimation "
            "and sampling for multivariate extremes.";

  py::register_exception<comet::Error>(m, "CometError");

  py::class_<comet::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("quantile_low", &comet::TrainConfig::quantile_low)
      .def_readwrite("quantile_high", &comet::TrainConfig::quantile_high)
      .def_readwrite("coupling_layers", &comet::TrainConfig::coupling_layers)
      .def_readwrite("hidden", &comet::TrainConfig::hidden)
      .def_readwrite("learning_rate", &comet::TrainConfig::learning_rate)
      .def_readwrite("batch_size", &comet::TrainConfig::batch_size)
      .def_readwrite("sigma_max", &comet::TrainConfig::sigma_max)
      .def_readwrite("max_epochs", &comet::TrainConfig::max_epochs)
      .def_readwrite("patience", &comet::TrainConfig::patience)
      .def_readwrite("seed", &comet::TrainConfig::seed);

  py::class_<comet::CometModel>(m, "CometModel")
      .def_property_readonly(
          "dim", [](const comet::CometModel& m_) { return m_.dim; })
      .def_property_readonly("mode",
                             [](const comet::CometModel& m_) {
                               return comet::to_string(m_.mode);
                             })
      .def("log_prob",
           [](const comet::CometModel& m_, const std::vector<double>& x) {
             return comet::log_prob(m_, x);
           })
      .def("log_probs",
           [](const comet::CometModel& m_, const Rows& rows) {
             return comet::log_probs(m_, rows_to_dataset(rows));
           })
      .def(
          "sample",
          [](const comet::CometModel& m_, std::size_t n, double sigma,
             std::uint64_t seed) {
            comet::Rng rng(seed);
            return comet::sample(m_, n, sigma, rng);
          },
          py::arg("n"), py::arg("sigma") = 0.0, py::arg("seed") = 42)
      .def("save", [](const comet::CometModel& m_, const std::string& path) {
        comet::save_model(m_, path);
      });

  m.def("load_model", &comet::load_model, py::arg("path"));

  m.def(
      "fit",
      [](const Rows& train, const Rows& val, const comet::TrainConfig& cfg,
         const std::string& mode) {
        auto result = comet::fit(rows_to_dataset(train), rows_to_dataset(val),
                                 cfg, comet::mode_from_string(mode));
        std::vector<std::tuple<std::size_t, double, double, bool>> log;
        for (const auto& e : result.log.epochs)
          log.emplace_back(e.epoch, e.train_loss, e.val_loss, e.is_best);
        return std::make_pair(std::move(result.model), std::move(log));
      },
      py::arg("train"), py::arg("val"),
      py::arg("config") = comet::TrainConfig{}, py::arg("mode") = "comet",
      "Fit a model; returns (model, [(epoch, train_loss, val_loss, "
      "is_best), ...]).");

  m.def(
      "gen_synthetic",
      [](std::size_t n, std::uint64_t seed) {
        return dataset_to_rows(comet::gen_synthetic(n, seed));
      },
      py::arg("n"), py::arg("seed") = 42,
      "8-dimensional heavy-tailed benchmark rows.");

  m.def(
      "load_csv",
      [](const std::string& path, bool has_header) {
        const comet::Dataset ds = comet::load_csv(path, has_header);
        return std::make_pair(dataset_to_rows(ds), ds.columns);
      },
      py::arg("path"), py::arg("has_header") = true,
      "Load a numeric CSV; returns (rows, column_names).");

  m.def(
      "save_csv",
      [](const std::string& path, const Rows& rows,
         const std::vector<std::string>& columns) {
        comet::save_csv(rows_to_dataset(rows, columns), path);
      },
      py::arg("path"), py::arg("rows"),
      py::arg("columns") = std::vector<std::string>{});

  // univariate pieces
  m.def(
      "gp_pdf",
      [](double x, double mu, double sigma, double xi) {
        return comet::gp_pdf({mu, sigma, xi}, x);
      },
      py::arg("x"), py::arg("mu") = 0.0, py::arg("sigma") = 1.0,
      py::arg("xi") = 0.0);
  m.def(
      "gp_cdf",
      [](double x, double mu, double sigma, double xi) {
        return comet::gp_cdf({mu, sigma, xi}, x);
      },
      py::arg("x"), py::arg("mu") = 0.0, py::arg("sigma") = 1.0,
      py::arg("xi") = 0.0);
  m.def(
      "gp_ppf",
      [](double q, double mu, double sigma, double xi) {
        return comet::gp_ppf({mu, sigma, xi}, q);
      },
      py::arg("q"), py::arg("mu") = 0.0, py::arg("sigma") = 1.0,
      py::arg("xi") = 0.0);
  m.def(
      "gp_fit",
      [](const std::vector<double>& excesses) {
        const comet::GPDist d = comet::gp_fit_mle(excesses);
        return std::make_pair(d.sigma, d.xi);
      },
      py::arg("excesses"),
      "Maximum-likelihood (sigma, xi) for nonnegative excesses.");

  py::class_<comet::MarginalModel>(m, "MarginalModel")
      .def_property_readonly(
          "alpha", [](const comet::MarginalModel& mm) { return mm.alpha; })
      .def_property_readonly(
          "beta", [](const comet::MarginalModel& mm) { return mm.beta; })
      .def("transform",
           [](const comet::MarginalModel& mm, double x) {
             return comet::marginal_transform(mm, x);
           })
      .def("inverse",
           [](const comet::MarginalModel& mm, double u) {
             return comet::marginal_inverse(mm, u);
           })
      .def("log_density", [](const comet::MarginalModel& mm, double x) {
        return comet::marginal_log_density(mm, x);
      });

  m.def(
      "fit_marginal",
      [](const std::vector<double>& column, double a, double b) {
        return comet::fit_marginal(column, a, b);
      },
      py::arg("column"), py::arg("a") = 0.05, py::arg("b") = 0.95);

  // evaluation metrics
  m.def(
      "avg_nll",
      [](const comet::CometModel& model, const Rows& rows) {
        return comet::avg_nll(model, rows_to_dataset(rows));
      },
      py::arg("model"), py::arg("rows"));
  m.def(
      "tail_dep_coeff",
      [](const Rows& rows, std::size_t i, std::size_t j, double u,
         const std::string& side) {
        return comet::tail_dep_coeff(rows_to_dataset(rows), i, j, u,
                                     side == "lower"
                                         ? comet::TailDepSide::kLower
                                         : comet::TailDepSide::kUpper);
      },
      py::arg("rows"), py::arg("i"), py::arg("j"), py::arg("u"),
      py::arg("side") = "upper");
  m.def("ks_uniformity", [](const std::vector<double>& values) {
    return comet::ks_uniformity(values);
  });

  py::class_<comet::EvalReport>(m, "EvalReport")
      .def_property_readonly(
          "average_nll",
          [](const comet::EvalReport& r) { return r.average_nll; })
      .def_property_readonly(
          "pit_ks", [](const comet::EvalReport& r) { return r.pit_ks; })
      .def("to_text", [](const comet::EvalReport& r) {
        return comet::report_to_text(r);
      });

  m.def(
      "evaluate",
      [](const comet::CometModel& model, const Rows& test,
         std::size_t sample_count, std::uint64_t seed) {
        return comet::evaluate(model, rows_to_dataset(test), sample_count,
                               seed);
      },
      py::arg("model"), py::arg("test"), py::arg("sample_count") = 10000,
      py::arg("seed") = 42);

  m.attr("__version__") = "1.0.0";
}
