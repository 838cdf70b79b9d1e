#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "comet/rng.hpp"

namespace comet {

enum class Activation { kTanh, kIdentity };

struct MlpLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // row-major [out x in]
  std::vector<double> bias;     // [out]
  Activation activation = Activation::kIdentity;
};

// Fully-connected network evaluated and differentiated by hand.
struct Mlp {
  std::vector<MlpLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t param_count() const;

  // Throws ShapeError when adjacent layer dimensions do not compose or any
  // entry is non-finite.
  void validate() const;
};

// Glorot-uniform weights, zero biases; tanh hidden layers, identity output.
// With zero_last the final layer starts all-zero so enclosing transforms
// begin at identity.
Mlp make_mlp(std::size_t in, std::span<const std::size_t> hidden,
             std::size_t out, Rng& rng, bool zero_last = false);

struct MlpCache {
  std::vector<std::vector<double>> inputs;   // input seen by each layer
  std::vector<std::vector<double>> preacts;  // pre-activation of each layer
};

struct MlpForwardResult {
  std::vector<double> output;
  MlpCache cache;
};

MlpForwardResult mlp_forward(const Mlp& params, std::span<const double> input);

// Allocation-free variant for hot loops: overwrites `output` and `cache`,
// reusing their buffers.
void mlp_forward_reuse(const Mlp& params, std::span<const double> input,
                       std::vector<double>& output, MlpCache& cache);

struct MlpBackwardResult {
  Mlp param_grads;  // same shape as the network
  std::vector<double> input_grad;
};

// Exact gradients of <output_grad, output> w.r.t. parameters and input.
// The cache must come from mlp_forward on the same network.
MlpBackwardResult mlp_backward(const Mlp& params, const MlpCache& cache,
                               std::span<const double> output_grad);

// Accumulating variant: adds the parameter gradients into `grad_accum`
// (which must already have the network's shape) and overwrites
// `input_grad`, reusing its buffer.
void mlp_backward_accumulate(const Mlp& params, const MlpCache& cache,
                             std::span<const double> output_grad,
                             Mlp& grad_accum, std::vector<double>& input_grad);

// Flat parameter IO, layer by layer, weights then bias.
void mlp_flatten(const Mlp& m, std::vector<double>& out);
std::size_t mlp_unflatten(Mlp& m, std::span<const double> flat);

struct AdamState {
  std::vector<double> m;  // first moment, same length as the parameters
  std::vector<double> v;  // second moment
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(std::size_t n_params, double learning_rate = 1e-3);

// Standard Adam update with bias correction; increments the step counter.
void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state);

using ScalarFn = std::function<double(std::span<const double>)>;
using GradFn = std::function<std::vector<double>(std::span<const double>)>;

// Max mismatch over coordinates between the analytic gradient and central
// differences with the given step; relative where the gradient is sizable,
// absolute near zero.
double grad_check(const ScalarFn& f, const GradFn& analytic_grad,
                  std::span<const double> point, double step);

}  // namespace comet
