#include "comet/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "comet/dataset.hpp"
#include "comet/errors.hpp"
#include "comet/eval.hpp"
#include "comet/model.hpp"

namespace comet {

namespace {

void require_readable(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path))
    throw FileError(std::string(what) + " not found: " + path);
}

// Optional key=value file for TrainConfig defaults; flags take precedence.
void apply_config_file(const std::string& path, TrainConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw FileError("config file not found: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "quantile_low")
        cfg.quantile_low = parse_double(value);
      else if (key == "quantile_high")
        cfg.quantile_high = parse_double(value);
      else if (key == "layers")
        cfg.coupling_layers = std::stoul(value);
      else if (key == "hidden") {
        cfg.hidden.clear();
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ','))
          cfg.hidden.push_back(std::stoul(tok));
      } else if (key == "lr")
        cfg.learning_rate = parse_double(value);
      else if (key == "batch")
        cfg.batch_size = std::stoul(value);
      else if (key == "sigma_max")
        cfg.sigma_max = parse_double(value);
      else if (key == "max_epochs")
        cfg.max_epochs = std::stoul(value);
      else if (key == "patience")
        cfg.patience = std::stoul(value);
      else if (key == "seed")
        cfg.seed = std::stoull(value);
      else
        throw ParseError("config line " + std::to_string(line_no) +
                         ": unknown key \"" + key + "\"");
    } catch (const ParseError&) {
      throw;
    } catch (...) {
      throw ParseError("config line " + std::to_string(line_no) +
                       ": bad value \"" + value + "\" for key \"" + key + "\"");
    }
  }
}

struct TrainArgs {
  std::string train_csv, val_csv, model_out, log_out, config_file;
  std::string mode = "comet";
  std::vector<double> quantiles;
  TrainConfig cfg;
};

int run_train(const TrainArgs& args, const CLI::App& sub) {
  require_readable(args.train_csv, "training CSV");
  require_readable(args.val_csv, "validation CSV");

  TrainConfig cfg = args.cfg;
  if (!args.config_file.empty()) {
    // file sets defaults; explicitly passed flags win
    TrainConfig from_file = args.cfg;
    apply_config_file(args.config_file, from_file);
    auto keep_flag = [&](const char* flag) {
      return sub.count(flag) > 0;
    };
    if (!keep_flag("--layers")) cfg.coupling_layers = from_file.coupling_layers;
    if (!keep_flag("--hidden")) cfg.hidden = from_file.hidden;
    if (!keep_flag("--lr")) cfg.learning_rate = from_file.learning_rate;
    if (!keep_flag("--batch")) cfg.batch_size = from_file.batch_size;
    if (!keep_flag("--sigma-max")) cfg.sigma_max = from_file.sigma_max;
    if (!keep_flag("--max-epochs")) cfg.max_epochs = from_file.max_epochs;
    if (!keep_flag("--patience")) cfg.patience = from_file.patience;
    if (!keep_flag("--seed")) cfg.seed = from_file.seed;
    if (!sub.count("--quantiles")) {
      cfg.quantile_low = from_file.quantile_low;
      cfg.quantile_high = from_file.quantile_high;
    }
  }
  if (!args.quantiles.empty()) {
    cfg.quantile_low = args.quantiles[0];
    cfg.quantile_high = args.quantiles[1];
  }

  const Dataset train = load_csv(args.train_csv, /*has_header=*/true);
  const Dataset val = load_csv(args.val_csv, /*has_header=*/true);
  const ModelMode mode = mode_from_string(args.mode);

  const FitResult result =
      fit(train, val, cfg, mode, [](const EpochRecord& e) {
        std::printf("epoch %zu train %.4f val %.4f%s\n", e.epoch, e.train_loss,
                    e.val_loss, e.is_best ? " *" : "");
        std::fflush(stdout);
      });

  const std::string log_path =
      args.log_out.empty() ? args.model_out + ".log" : args.log_out;
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw FileError("cannot write training log: " + log_path);
  log << "epoch,train_loss,val_loss,best\n";
  for (const auto& e : result.log.epochs)
    log << e.epoch << ',' << format_double(e.train_loss) << ','
        << format_double(e.val_loss) << ',' << (e.is_best ? 1 : 0) << '\n';
  save_model(result.model, args.model_out);
  std::printf("best epoch %zu val %.4f; model written to %s\n",
              result.log.best_epoch, result.log.best_val_loss,
              args.model_out.c_str());
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"density estimation and sampling for heavy-tailed, "
               "tail-dependent multivariate data"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand(
      "synth", "generate the 8-dimensional synthetic benchmark as CSV");
  std::size_t synth_n = 1000;
  std::uint64_t synth_seed = 42;
  std::string synth_out;
  synth->add_option("--n", synth_n, "number of rows")->required();
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "output CSV path")->required();

  // train
  auto* train = app.add_subcommand("train", "fit a model on CSV data");
  TrainArgs targs;
  train->add_option("--train", targs.train_csv, "training CSV (with header)")
      ->required();
  train->add_option("--val", targs.val_csv, "validation CSV (with header)")
      ->required();
  train->add_option("--out", targs.model_out, "model file to write")
      ->required();
  train->add_option("--log", targs.log_out,
                    "training log path (default: <out>.log)");
  train->add_option("--config", targs.config_file,
                    "key=value file with TrainConfig defaults");
  train->add_option("--mode", targs.mode, "comet | realnvp")
      ->check(CLI::IsMember({"comet", "realnvp"}));
  train
      ->add_option("--quantiles", targs.quantiles,
                   "tail quantiles a b (e.g. 0.05 0.95)")
      ->expected(2)
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--layers", targs.cfg.coupling_layers,
                    "number of coupling layers");
  train->add_option("--hidden", targs.cfg.hidden,
                    "conditioner hidden sizes, comma separated")
      ->delimiter(',');
  train->add_option("--lr", targs.cfg.learning_rate, "Adam learning rate");
  train->add_option("--batch", targs.cfg.batch_size, "minibatch size");
  train->add_option("--sigma-max", targs.cfg.sigma_max,
                    "training noise level upper bound");
  train->add_option("--max-epochs", targs.cfg.max_epochs, "epoch cap");
  train->add_option("--patience", targs.cfg.patience,
                    "non-improving epochs before stopping");
  train->add_option("--seed", targs.cfg.seed, "random seed");

  // sample
  auto* smp = app.add_subcommand("sample", "draw samples from a saved model");
  std::string smp_model, smp_out;
  std::size_t smp_n = 1000;
  std::uint64_t smp_seed = 42;
  double smp_sigma = 0.0;
  smp->add_option("--model", smp_model, "model file")->required();
  smp->add_option("--n", smp_n, "number of samples")->required();
  smp->add_option("--seed", smp_seed, "random seed");
  smp->add_option("--sigma", smp_sigma, "noise level (default 0)")
      ->check(CLI::NonNegativeNumber);
  smp->add_option("--out", smp_out, "output CSV path")->required();

  // eval
  auto* evl = app.add_subcommand("eval", "evaluate a saved model on test CSV");
  std::string evl_model, evl_test, evl_report, evl_plot;
  std::size_t evl_samples = 10000;
  std::uint64_t evl_seed = 42;
  evl->add_option("--model", evl_model, "model file")->required();
  evl->add_option("--test", evl_test, "test CSV (with header)")->required();
  evl->add_option("--report", evl_report, "report file to write")->required();
  evl->add_option("--plot-csv", evl_plot,
                  "tail-dependence CSV (default: <report>.csv)");
  evl->add_option("--samples", evl_samples,
                  "model samples used for the comparison");
  evl->add_option("--seed", evl_seed, "sampling seed");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) {
      const Dataset ds = gen_synthetic(synth_n, synth_seed);
      save_csv(ds, synth_out);
      std::printf("wrote %zu rows x %zu cols to %s\n", ds.rows, ds.cols,
                  synth_out.c_str());
      return 0;
    }
    if (train->parsed()) return run_train(targs, *train);
    if (smp->parsed()) {
      require_readable(smp_model, "model file");
      const CometModel model = load_model(smp_model);
      Rng rng(smp_seed);
      const auto rows = sample(model, smp_n, smp_sigma, rng);
      Dataset ds;
      ds.rows = rows.size();
      ds.cols = model.dim;
      ds.values.reserve(ds.rows * ds.cols);
      for (const auto& r : rows)
        ds.values.insert(ds.values.end(), r.begin(), r.end());
      for (std::size_t c = 0; c < ds.cols; ++c)
        ds.columns.push_back("x" + std::to_string(c + 1));
      save_csv(ds, smp_out);
      std::printf("wrote %zu samples of dimension %zu to %s\n", ds.rows,
                  ds.cols, smp_out.c_str());
      return 0;
    }
    if (evl->parsed()) {
      require_readable(evl_model, "model file");
      require_readable(evl_test, "test CSV");
      const CometModel model = load_model(evl_model);
      const Dataset test = load_csv(evl_test, /*has_header=*/true);
      const EvalReport rep = evaluate(model, test, evl_samples, evl_seed);
      report_write_text(rep, evl_report);
      report_write_plot_csv(
          rep, evl_plot.empty() ? evl_report + ".csv" : evl_plot);
      std::printf("avg_nll %.4f\n", rep.average_nll);
      return 0;
    }
  } catch (const FileError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const CorruptModelError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace comet
