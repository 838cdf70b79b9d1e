#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "comet/coupling.hpp"
#include "comet/dataset.hpp"
#include "comet/marginal.hpp"

namespace comet {

enum class ModelMode { kComet, kRealnvpBaseline };

std::string to_string(ModelMode mode);
ModelMode mode_from_string(const std::string& name);

// Model file format tag; bumped on incompatible layout changes.
inline constexpr const char* kModelFormatTag = "comet-v1";

struct TrainConfig {
  double quantile_low = 0.05;   // a
  double quantile_high = 0.95;  // b
  std::size_t coupling_layers = 10;
  std::vector<std::size_t> hidden = {64, 64};
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  double sigma_max = 0.3;  // logit-space noise scale
  std::size_t max_epochs = 30;
  std::size_t patience = 2;  // consecutive non-improving epochs
  std::uint64_t seed = 42;

  void validate() const;
  std::uint64_t hash(ModelMode mode) const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool is_best = false;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

// Fitted artifact: d marginal transforms composed with a noise-conditioned
// coupling flow over a standard Gaussian latent. In baseline mode the
// marginals are absent and the flow runs on standardized inputs without the
// logit layer or training noise.
struct CometModel {
  ModelMode mode = ModelMode::kComet;
  std::size_t dim = 0;
  std::vector<MarginalModel> marginals;  // size dim in comet mode, else empty
  CouplingFlow flow;
  ColumnStats standardization;  // identity (0, 1) in comet mode
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

struct FitResult {
  CometModel model;
  TrainingLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Two-stage training: marginals are fit and frozen first (comet mode), then
// the flow minimizes the mean conditional NLL with per-sample logit-space
// noise eps ~ N(0, sigma^2 I), sigma ~ U[0, sigma_max]. Validation loss is
// evaluated at sigma = 0 each epoch; training stops once it fails to improve
// for `patience` consecutive epochs and the best-validation checkpoint is
// returned. `on_epoch`, when set, streams each epoch record as it lands.
FitResult fit(const Dataset& train, const Dataset& val, const TrainConfig& cfg,
              ModelMode mode, const EpochCallback& on_epoch = {});

// Composition log-density at sigma = 0; never below kLogDensityFloor.
double log_prob(const CometModel& model, std::span<const double> x);

std::vector<double> log_probs(const CometModel& model, const Dataset& data);

// z ~ N(0,I) -> inverse flow at the given noise level -> inverse marginals
// (comet) or de-standardization (baseline).
std::vector<std::vector<double>> sample(const CometModel& model, std::size_t n,
                                        double sigma, Rng& rng);

// Self-describing text file with a checksum; floats carry 17 significant
// digits so a load/save round trip is bit-exact.
void save_model(const CometModel& model, const std::string& path);
CometModel load_model(const std::string& path);

// FNV-1a over bytes; also used for the model-file checksum.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace comet
