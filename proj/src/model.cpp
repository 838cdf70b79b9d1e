#include "comet/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "comet/errors.hpp"
#include "comet/stats.hpp"

namespace comet {

std::string to_string(ModelMode mode) {
  return mode == ModelMode::kComet ? "comet" : "realnvp_baseline";
}

ModelMode mode_from_string(const std::string& name) {
  if (name == "comet") return ModelMode::kComet;
  if (name == "realnvp" || name == "realnvp_baseline")
    return ModelMode::kRealnvpBaseline;
  throw ParseError("unknown model mode: " + name);
}

void TrainConfig::validate() const {
  if (!(quantile_low > 0.0 && quantile_low < quantile_high &&
        quantile_high < 1.0))
    throw DomainError("train config: quantiles must satisfy 0 < a < b < 1");
  if (coupling_layers < 2)
    throw DomainError("train config: need at least 2 coupling layers");
  if (!(learning_rate > 0.0))
    throw DomainError("train config: learning rate must be > 0");
  if (batch_size < 1) throw DomainError("train config: batch size must be >= 1");
  if (sigma_max < 0.0) throw DomainError("train config: sigma_max must be >= 0");
  if (max_epochs < 1) throw DomainError("train config: max_epochs must be >= 1");
  if (patience < 1) throw DomainError("train config: patience must be >= 1");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t TrainConfig::hash(ModelMode mode) const {
  std::ostringstream os;
  os << to_string(mode) << '|' << format_double(quantile_low) << '|'
     << format_double(quantile_high) << '|' << coupling_layers << '|';
  for (auto h : hidden) os << h << ',';
  os << '|' << format_double(learning_rate) << '|' << batch_size << '|'
     << format_double(sigma_max) << '|' << max_epochs << '|' << patience << '|'
     << seed;
  return fnv1a64(os.str());
}

namespace {

// Per-epoch exponential learning-rate decay. Late-stage parameter jitter
// otherwise dominates the validation loss and trips the patience rule long
// before the conditional at sigma = 0 has sharpened.
constexpr double kLrDecayPerEpoch = 0.96;

// Per-batch Polyak (exponential moving average) weight factor for the
// noise-perturbed training path. The injected noise makes each gradient a
// randomized estimate and leaves substantial jitter in the raw iterates, so
// the sigma = 0 conditional is validated and checkpointed on the averaged
// weights (Polyak-Ruppert); gradient steps still run on the raw ones. The
// baseline optimizes its exact objective directly and is validated on raw
// snapshots, as usual.
constexpr double kEmaDecayPerBatch = 0.999;

// Rows of `data` pushed through the stage-1 transform: marginal CDFs in
// comet mode, column standardization in baseline mode.
std::vector<std::vector<double>> transform_rows(const CometModel& model,
                                                const Dataset& data) {
  std::vector<std::vector<double>> out(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) {
    const auto row = data.row(r);
    std::vector<double> v(data.cols);
    if (model.mode == ModelMode::kComet) {
      for (std::size_t c = 0; c < data.cols; ++c)
        v[c] = marginal_transform(model.marginals[c], row[c]);
    } else {
      for (std::size_t c = 0; c < data.cols; ++c)
        v[c] = (row[c] - model.standardization.mean[c]) /
               model.standardization.stddev[c];
    }
    out[r] = std::move(v);
  }
  return out;
}

double validation_loss(const CouplingFlow& flow,
                       const std::vector<std::vector<double>>& rows) {
  double acc = 0.0;
  for (const auto& r : rows) acc -= flow_log_prob(flow, r, 0.0);
  return acc / static_cast<double>(rows.size());
}

}  // namespace

FitResult fit(const Dataset& train, const Dataset& val, const TrainConfig& cfg,
              ModelMode mode, const EpochCallback& on_epoch) {
  cfg.validate();
  train.validate();
  val.validate();
  if (train.cols != val.cols)
    throw ShapeError("fit: train and validation widths differ");
  if (train.rows < 1000)
    throw DataError("fit: need at least 1000 training rows, got " +
                    std::to_string(train.rows));
  if (train.cols < 2)
    throw ShapeError("fit: coupling flows need at least 2 columns");

  FitResult res;
  CometModel& model = res.model;
  model.mode = mode;
  model.dim = train.cols;
  model.seed = cfg.seed;
  model.config_hash = cfg.hash(mode);

  // Stage 1: per-dimension transforms, fixed before the flow is trained.
  if (mode == ModelMode::kComet) {
    model.standardization.mean.assign(train.cols, 0.0);
    model.standardization.stddev.assign(train.cols, 1.0);
    for (std::size_t c = 0; c < train.cols; ++c) {
      try {
        model.marginals.push_back(
            fit_marginal(train.column(c), cfg.quantile_low, cfg.quantile_high));
      } catch (const Error& e) {
        const std::string name =
            train.columns.empty() ? std::to_string(c + 1) : train.columns[c];
        throw DataError("marginal fit failed for column " + name + ": " +
                        e.what());
      }
    }
  } else {
    model.standardization = column_stats(train);
  }

  const bool use_noise = mode == ModelMode::kComet;
  Rng init_rng(derive_seed(cfg.seed, 10));
  Rng shuffle_rng(derive_seed(cfg.seed, 11));
  Rng noise_rng(derive_seed(cfg.seed, 12));

  model.flow = make_flow(model.dim, cfg.coupling_layers, cfg.hidden,
                         use_noise ? cfg.sigma_max : 0.0,
                         /*logit_input=*/mode == ModelMode::kComet, init_rng);

  const std::vector<std::vector<double>> train_rows =
      transform_rows(model, train);
  const std::vector<std::vector<double>> val_rows = transform_rows(model, val);

  std::vector<double> params = flow_get_params(model.flow);
  std::vector<double> ema = params;
  AdamState adam = make_adam(params.size(), cfg.learning_rate);

  TrainingLog& log = res.log;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = params;
  std::size_t bad_streak = 0;

  const std::size_t n = train_rows.size();
  std::vector<std::vector<double>> batch_u;
  std::vector<double> batch_sigma;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    adam.learning_rate = cfg.learning_rate *
                         std::pow(kLrDecayPerEpoch,
                                  static_cast<double>(epoch - 1));
    const std::vector<std::size_t> order = shuffle_rng.permutation(n);
    double train_loss_sum = 0.0;
    std::size_t n_batches = 0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      batch_u.clear();
      batch_sigma.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const auto& u = train_rows[order[i]];
        double sigma = 0.0;
        if (use_noise) {
          // perturb in logit space, then map back through the sigmoid so
          // the flow still sees unit-cube inputs
          sigma = noise_rng.uniform(0.0, cfg.sigma_max);
          std::vector<double> noisy(u.size());
          for (std::size_t c = 0; c < u.size(); ++c) {
            const double y = std::log(u[c]) - std::log(1.0 - u[c]);
            noisy[c] = sigmoid(y + sigma * noise_rng.normal());
          }
          batch_u.push_back(std::move(noisy));
        } else {
          batch_u.push_back(u);
        }
        batch_sigma.push_back(sigma);
      }

      FlowGradResult g;
      try {
        g = flow_grad(model.flow, batch_u, batch_sigma);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(n_batches) + ": " + e.what());
      }
      if (!std::isfinite(g.mean_nll))
        throw NumericError("training loss is not finite at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(n_batches));
      train_loss_sum += g.mean_nll;
      ++n_batches;
      adam_step(params, g.grad, adam);
      flow_set_params(model.flow, params);
      if (use_noise)
        for (std::size_t i = 0; i < params.size(); ++i)
          ema[i] += (1.0 - kEmaDecayPerBatch) * (params[i] - ema[i]);
    }

    const std::vector<double>& checkpoint = use_noise ? ema : params;
    flow_set_params(model.flow, checkpoint);
    const double val_loss = validation_loss(model.flow, val_rows);
    flow_set_params(model.flow, params);
    if (!std::isfinite(val_loss))
      throw NumericError("validation loss is not finite at epoch " +
                         std::to_string(epoch));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss_sum / static_cast<double>(n_batches);
    rec.val_loss = val_loss;
    rec.is_best = val_loss < best_val;
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.is_best) {
      best_val = val_loss;
      best_params = checkpoint;
      log.best_epoch = epoch;
      log.best_val_loss = val_loss;
      bad_streak = 0;
    } else if (++bad_streak >= cfg.patience) {
      break;
    }
  }

  flow_set_params(model.flow, best_params);
  return res;
}

double log_prob(const CometModel& model, std::span<const double> x) {
  if (x.size() != model.dim)
    throw ShapeError("log_prob: point has length " + std::to_string(x.size()) +
                     ", model dimension is " + std::to_string(model.dim));
  double total = 0.0;
  if (model.mode == ModelMode::kComet) {
    std::vector<double> u(model.dim);
    for (std::size_t c = 0; c < model.dim; ++c) {
      total += marginal_log_density(model.marginals[c], x[c]);
      u[c] = marginal_transform(model.marginals[c], x[c]);
    }
    total += flow_log_prob(model.flow, u, 0.0);
  } else {
    std::vector<double> std_x(model.dim);
    for (std::size_t c = 0; c < model.dim; ++c) {
      std_x[c] = (x[c] - model.standardization.mean[c]) /
                 model.standardization.stddev[c];
      total -= std::log(model.standardization.stddev[c]);
    }
    total += flow_log_prob(model.flow, std_x, 0.0);
  }
  if (!std::isfinite(total)) return kLogDensityFloor;
  return std::max(total, kLogDensityFloor);
}

std::vector<double> log_probs(const CometModel& model, const Dataset& data) {
  if (data.cols != model.dim)
    throw ShapeError("log_probs: dataset width " + std::to_string(data.cols) +
                     " != model dimension " + std::to_string(model.dim));
  std::vector<double> out(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) out[r] = log_prob(model, data.row(r));
  return out;
}

std::vector<std::vector<double>> sample(const CometModel& model, std::size_t n,
                                        double sigma, Rng& rng) {
  if (n < 1) throw DomainError("sample: need n >= 1");
  if (sigma < 0.0) throw DomainError("sample: sigma must be >= 0");
  std::vector<std::vector<double>> out = flow_sample(model.flow, n, sigma, rng);
  for (auto& row : out) {
    if (model.mode == ModelMode::kComet) {
      for (std::size_t c = 0; c < model.dim; ++c)
        row[c] = marginal_inverse(model.marginals[c], row[c]);
    } else {
      for (std::size_t c = 0; c < model.dim; ++c)
        row[c] = row[c] * model.standardization.stddev[c] +
                 model.standardization.mean[c];
    }
  }
  return out;
}

namespace {

void write_vector(std::ostream& os, const char* key,
                  std::span<const double> v) {
  os << key << ' ' << v.size();
  for (double x : v) os << ' ' << format_double(x);
  os << '\n';
}

class TokenReader {
 public:
  explicit TokenReader(const std::string& body) : in_(body) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw CorruptModelError("model file truncated");
    return w;
  }

  void expect(const std::string& key) {
    const std::string w = word();
    if (w != key)
      throw CorruptModelError("model file: expected \"" + key + "\", found \"" +
                              w + "\"");
  }

  double number() { return parse_double(word()); }

  std::uint64_t integer() {
    const std::string w = word();
    try {
      return std::stoull(w);
    } catch (...) {
      throw CorruptModelError("model file: expected integer, found \"" + w +
                              "\"");
    }
  }

  std::vector<double> vector(const char* key) {
    expect(key);
    const std::size_t n = integer();
    std::vector<double> v(n);
    for (auto& x : v) x = number();
    return v;
  }

 private:
  std::istringstream in_;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void save_model(const CometModel& model, const std::string& path) {
  std::ostringstream body;
  body << "mode " << to_string(model.mode) << '\n';
  body << "dim " << model.dim << '\n';
  body << "seed " << model.seed << '\n';
  body << "config_hash " << model.config_hash << '\n';
  write_vector(body, "standardize_mean", model.standardization.mean);
  write_vector(body, "standardize_std", model.standardization.stddev);

  body << "marginals " << model.marginals.size() << '\n';
  for (std::size_t i = 0; i < model.marginals.size(); ++i) {
    const MarginalModel& m = model.marginals[i];
    body << "marginal " << i << '\n';
    body << "quantiles " << format_double(m.quantile_low) << ' '
         << format_double(m.quantile_high) << '\n';
    body << "thresholds " << format_double(m.alpha) << ' '
         << format_double(m.beta) << '\n';
    body << "left_tail " << format_double(m.left_tail.mu) << ' '
         << format_double(m.left_tail.sigma) << ' '
         << format_double(m.left_tail.xi) << '\n';
    body << "right_tail " << format_double(m.right_tail.mu) << ' '
         << format_double(m.right_tail.sigma) << ' '
         << format_double(m.right_tail.xi) << '\n';
    body << "center_cdf " << format_double(m.center_cdf_alpha) << ' '
         << format_double(m.center_cdf_beta) << '\n';
    body << "bandwidth " << format_double(m.center.bandwidth) << '\n';
    write_vector(body, "points", m.center.points);
  }

  body << "flow_layers " << model.flow.layers.size() << '\n';
  body << "flow_hidden " << model.flow.hidden.size();
  for (auto h : model.flow.hidden) body << ' ' << h;
  body << '\n';
  body << "flow_eps_u " << format_double(model.flow.eps_u) << '\n';
  body << "flow_sigma_max " << format_double(model.flow.sigma_max) << '\n';
  body << "flow_logit " << (model.flow.logit_input ? 1 : 0) << '\n';
  write_vector(body, "flow_params", flow_get_params(model.flow));
  body << "end\n";

  const std::string text = body.str();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write model file: " + path);
  out << kModelFormatTag << '\n';
  out << "checksum " << hex64(fnv1a64(text)) << '\n';
  out << text;
  if (!out) throw FileError("short write to model file: " + path);
}

CometModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open model file: " + path);
  std::string tag;
  if (!std::getline(in, tag)) throw CorruptModelError("empty model file");
  if (tag != kModelFormatTag)
    throw CorruptModelError("unsupported model file version \"" + tag +
                            "\", expected \"" + kModelFormatTag + "\"");
  std::string checksum_line;
  if (!std::getline(in, checksum_line))
    throw CorruptModelError("model file missing checksum");
  std::istringstream cs(checksum_line);
  std::string key, stored;
  cs >> key >> stored;
  if (key != "checksum" || stored.size() != 16)
    throw CorruptModelError("model file has malformed checksum line");

  std::ostringstream rest;
  rest << in.rdbuf();
  const std::string body = rest.str();
  if (hex64(fnv1a64(body)) != stored)
    throw CorruptModelError("model file checksum mismatch (corrupt file)");

  TokenReader tr(body);
  CometModel model;
  tr.expect("mode");
  model.mode = mode_from_string(tr.word());
  tr.expect("dim");
  model.dim = tr.integer();
  tr.expect("seed");
  model.seed = tr.integer();
  tr.expect("config_hash");
  model.config_hash = tr.integer();
  model.standardization.mean = tr.vector("standardize_mean");
  model.standardization.stddev = tr.vector("standardize_std");

  tr.expect("marginals");
  const std::size_t n_marginals = tr.integer();
  if (model.mode == ModelMode::kComet && n_marginals != model.dim)
    throw CorruptModelError("model file: comet mode needs one marginal per "
                            "dimension");
  if (model.mode == ModelMode::kRealnvpBaseline && n_marginals != 0)
    throw CorruptModelError("model file: baseline mode must have no marginals");
  for (std::size_t i = 0; i < n_marginals; ++i) {
    tr.expect("marginal");
    if (tr.integer() != i)
      throw CorruptModelError("model file: marginal blocks out of order");
    MarginalModel m;
    tr.expect("quantiles");
    m.quantile_low = tr.number();
    m.quantile_high = tr.number();
    tr.expect("thresholds");
    m.alpha = tr.number();
    m.beta = tr.number();
    tr.expect("left_tail");
    m.left_tail.mu = tr.number();
    m.left_tail.sigma = tr.number();
    m.left_tail.xi = tr.number();
    tr.expect("right_tail");
    m.right_tail.mu = tr.number();
    m.right_tail.sigma = tr.number();
    m.right_tail.xi = tr.number();
    tr.expect("center_cdf");
    m.center_cdf_alpha = tr.number();
    m.center_cdf_beta = tr.number();
    tr.expect("bandwidth");
    m.center.bandwidth = tr.number();
    m.center.points = tr.vector("points");
    if (m.center.points.size() < 2 || !(m.center.bandwidth > 0.0))
      throw CorruptModelError("model file: invalid kernel density block");
    kde_build_table(m.center);
    model.marginals.push_back(std::move(m));
  }

  tr.expect("flow_layers");
  const std::size_t n_layers = tr.integer();
  tr.expect("flow_hidden");
  const std::size_t n_hidden = tr.integer();
  std::vector<std::size_t> hidden(n_hidden);
  for (auto& h : hidden) h = tr.integer();
  tr.expect("flow_eps_u");
  const double eps_u = tr.number();
  tr.expect("flow_sigma_max");
  const double sigma_max = tr.number();
  tr.expect("flow_logit");
  const bool logit_input = tr.integer() != 0;

  Rng dummy(0);  // parameters are overwritten below
  model.flow = make_flow(model.dim, n_layers, hidden, sigma_max, logit_input,
                         dummy);
  model.flow.eps_u = eps_u;
  const std::vector<double> params = tr.vector("flow_params");
  if (params.size() != flow_param_count(model.flow))
    throw CorruptModelError("model file: flow parameter count mismatch");
  flow_set_params(model.flow, params);
  tr.expect("end");
  return model;
}

}  // namespace comet
