#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "comet/errors.hpp"
#include "comet/model.hpp"
#include "support/tempdir.hpp"

using namespace comet;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.coupling_layers = 4;
  cfg.hidden = {16};
  cfg.batch_size = 128;
  cfg.max_epochs = 4;
  cfg.seed = 77;
  return cfg;
}

const SyntheticSplits& small_splits() {
  static const SyntheticSplits s = standard_splits(404, 0.01);
  return s;
}

const FitResult& comet_fit() {
  static const FitResult r =
      fit(small_splits().train, small_splits().val, small_config(),
          ModelMode::kComet);
  return r;
}

const FitResult& baseline_fit() {
  static const FitResult r =
      fit(small_splits().train, small_splits().val, small_config(),
          ModelMode::kRealnvpBaseline);
  return r;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("preconditions are enforced") {
    const Dataset tiny = gen_synthetic(500, 1);
    const Dataset val = gen_synthetic(100, 2);
    CHECK_THROWS_AS(fit(tiny, val, small_config(), ModelMode::kComet),
                    DataError);

    TrainConfig bad = small_config();
    bad.quantile_low = 0.9;
    bad.quantile_high = 0.1;
    CHECK_THROWS_AS(
        fit(small_splits().train, small_splits().val, bad, ModelMode::kComet),
        DomainError);
  }

  TEST_CASE("training log: best-so-far validation loss never increases") {
    const TrainingLog& log = comet_fit().log;
    REQUIRE(!log.epochs.empty());
    double best = log.epochs.front().val_loss;
    for (const auto& e : log.epochs) {
      if (e.is_best) CHECK(e.val_loss <= best);
      best = std::min(best, e.val_loss);
    }
    CHECK(log.best_val_loss == best);
  }

  TEST_CASE("early stopping: never runs past best epoch + patience") {
    const TrainingLog& log = comet_fit().log;
    const TrainConfig cfg = small_config();
    CHECK(log.epochs.size() <= log.best_epoch + cfg.patience);
    CHECK(log.epochs.size() <= cfg.max_epochs);
  }

  TEST_CASE("identical seeds give identical parameters and logs") {
    const FitResult a = fit(small_splits().train, small_splits().val,
                            small_config(), ModelMode::kComet);
    const FitResult b = fit(small_splits().train, small_splits().val,
                            small_config(), ModelMode::kComet);
    CHECK(flow_get_params(a.model.flow) == flow_get_params(b.model.flow));
    REQUIRE(a.log.epochs.size() == b.log.epochs.size());
    for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
      CHECK(a.log.epochs[i].train_loss == b.log.epochs[i].train_loss);
      CHECK(a.log.epochs[i].val_loss == b.log.epochs[i].val_loss);
    }
  }

  TEST_CASE("stage separation: marginals match a direct stage-1 refit") {
    const CometModel& model = comet_fit().model;
    const TrainConfig cfg = small_config();
    for (std::size_t c = 0; c < model.dim; ++c) {
      const MarginalModel direct = fit_marginal(
          small_splits().train.column(c), cfg.quantile_low, cfg.quantile_high);
      const MarginalModel& stored = model.marginals[c];
      CHECK(stored.alpha == direct.alpha);
      CHECK(stored.beta == direct.beta);
      CHECK(stored.left_tail.sigma == direct.left_tail.sigma);
      CHECK(stored.left_tail.xi == direct.left_tail.xi);
      CHECK(stored.right_tail.sigma == direct.right_tail.sigma);
      CHECK(stored.right_tail.xi == direct.right_tail.xi);
      CHECK(stored.center.points == direct.center.points);
      CHECK(stored.center.bandwidth == direct.center.bandwidth);
    }
  }

  TEST_CASE("log_prob is pure and rejects wrong width") {
    const CometModel& model = comet_fit().model;
    const auto row = small_splits().test.row(0);
    const double a = log_prob(model, row);
    const double b = log_prob(model, row);
    CHECK(a == b);
    CHECK(std::isfinite(a));
    CHECK_THROWS_AS(log_prob(model, std::vector<double>{1.0, 2.0}), ShapeError);
  }

  TEST_CASE("log_prob honors the sentinel floor") {
    const CometModel& model = comet_fit().model;
    // far below every fitted left-tail support
    std::vector<double> way_off(model.dim, -1e12);
    const double lp = log_prob(model, way_off);
    CHECK(std::isfinite(lp));
    CHECK(lp >= kLogDensityFloor);
  }

  TEST_CASE("end-to-end invertibility at sigma = 0") {
    const CometModel& model = comet_fit().model;
    const Dataset& test = small_splits().test;
    for (std::size_t r = 0; r < test.rows; ++r) {
      const auto x = test.row(r);
      std::vector<double> u(model.dim);
      bool interior = true;
      for (std::size_t c = 0; c < model.dim; ++c) {
        u[c] = marginal_transform(model.marginals[c], x[c]);
        interior = interior && u[c] > 2.0 * kMarginalClamp &&
                   u[c] < 1.0 - 2.0 * kMarginalClamp;
      }
      if (!interior) continue;
      const auto z = flow_forward(model.flow, u, 0.0);
      const auto u_back = flow_inverse(model.flow, z.value, 0.0);
      for (std::size_t c = 0; c < model.dim; ++c) {
        const double x_back = marginal_inverse(model.marginals[c], u_back[c]);
        CHECK(std::abs(x_back - x[c]) < 1e-5);
      }
    }
  }

  TEST_CASE("sampling is reproducible and reacts to sigma") {
    const CometModel& model = comet_fit().model;
    Rng a(5), b(5), c(5);
    const auto sa = sample(model, 64, 0.0, a);
    const auto sb = sample(model, 64, 0.0, b);
    const auto sc = sample(model, 64, 0.3, c);
    CHECK(sa == sb);
    CHECK(sa != sc);
  }

  TEST_CASE("baseline mode standardizes instead of fitting marginals") {
    const CometModel& model = baseline_fit().model;
    CHECK(model.marginals.empty());
    CHECK(model.mode == ModelMode::kRealnvpBaseline);
    CHECK(model.flow.logit_input == false);
    CHECK(model.standardization.mean.size() == model.dim);
    const double lp = log_prob(model, small_splits().test.row(0));
    CHECK(std::isfinite(lp));
  }

  TEST_CASE("save/load round trip is bit-exact") {
    testutil::TempDir tmp;
    const std::string path = tmp.file("model.comet");
    const CometModel& model = comet_fit().model;
    save_model(model, path);
    const CometModel back = load_model(path);

    CHECK(back.mode == model.mode);
    CHECK(back.dim == model.dim);
    CHECK(back.seed == model.seed);
    CHECK(back.config_hash == model.config_hash);
    CHECK(flow_get_params(back.flow) == flow_get_params(model.flow));

    const Dataset& test = small_splits().test;
    for (std::size_t r = 0; r < std::min<std::size_t>(100, test.rows); ++r)
      CHECK(log_prob(back, test.row(r)) == log_prob(model, test.row(r)));

    Rng ra(9), rb(9);
    CHECK(sample(model, 32, 0.0, ra) == sample(back, 32, 0.0, rb));
  }

  TEST_CASE("tampered model file fails the checksum") {
    testutil::TempDir tmp;
    const std::string path = tmp.file("model.comet");
    save_model(comet_fit().model, path);

    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    const auto pos = text.find("dim");
    REQUIRE(pos != std::string::npos);
    text[pos + 4] = '9';  // corrupt the body, keep the stored checksum
    std::ofstream(tmp.file("bad.comet"), std::ios::binary) << text;
    CHECK_THROWS_AS(load_model(tmp.file("bad.comet")), CorruptModelError);
  }

  TEST_CASE("unknown version tag is rejected") {
    testutil::TempDir tmp;
    std::ofstream(tmp.file("v2.comet")) << "comet-v2\nchecksum 0\n";
    CHECK_THROWS_AS(load_model(tmp.file("v2.comet")), CorruptModelError);
    CHECK_THROWS_AS(load_model(tmp.file("missing.comet")), FileError);
  }

  TEST_CASE("mode is honored from the file, not the caller") {
    testutil::TempDir tmp;
    const std::string path = tmp.file("baseline.comet");
    save_model(baseline_fit().model, path);
    const CometModel back = load_model(path);
    CHECK(back.mode == ModelMode::kRealnvpBaseline);
    CHECK(back.marginals.empty());
  }
}
