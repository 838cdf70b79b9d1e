#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "comet/nn.hpp"
#include "comet/rng.hpp"

namespace comet {

// Smooth clamp keeping coupling log-scales in [-kScaleClamp, kScaleClamp]
// (applied as c * tanh(raw / c)).
inline constexpr double kScaleClamp = 5.0;

// Unit-cube inputs are clamped to [kLogitClamp, 1 - kLogitClamp] before the
// logit layer; must match the marginal transform's output clamp.
inline constexpr double kLogitClamp = 1e-7;

// Conditioner head gated on the scalar noise level:
//   out(x, sigma) = sigmoid(gate_w * sigma + gate_b) .* net(x)
//                   + (bias_w * sigma + bias_b)
struct ConcatSquash {
  Mlp net;
  std::vector<double> gate_weight;  // one entry per output coordinate
  std::vector<double> gate_bias;
  std::vector<double> bias_weight;
  std::vector<double> bias_bias;
};

// Affine coupling layer: one half passes through unchanged and conditions
// the element-wise scale/shift applied to the other half, so the Jacobian
// is block-triangular with log-determinant sum(s). Halves interleave by
// index parity (even indices pass through on even layers and vice versa);
// this splits neighboring coordinates at every layer, which contiguous
// halves cannot do.
struct CouplingLayer {
  int index = 0;            // position in the flow, for diagnostics
  std::size_t dim = 0;
  bool odd_parity = false;  // false: even indices pass through; true: odd
  ConcatSquash scale;
  ConcatSquash shift;
  double scale_clamp = kScaleClamp;

  std::size_t pass_dim() const {
    return odd_parity ? dim / 2 : (dim + 1) / 2;
  }
  std::size_t trans_dim() const { return dim - pass_dim(); }
};

struct CouplingFlow {
  std::size_t dim = 0;
  double eps_u = kLogitClamp;
  double sigma_max = 0.3;
  bool logit_input = true;  // false when the flow runs on unconstrained reals
  std::vector<std::size_t> hidden;  // conditioner hidden sizes (for IO)
  std::vector<CouplingLayer> layers;
};

// Alternating-parity stack of n_layers coupling layers. Scale and shift
// heads start at zero, so the freshly built flow is the identity (after the
// logit) for every sigma.
CouplingFlow make_flow(std::size_t dim, std::size_t n_layers,
                       std::span<const std::size_t> hidden, double sigma_max,
                       bool logit_input, Rng& rng);

struct VecLogdet {
  std::vector<double> value;
  double logdet = 0.0;
};

// Componentwise log(u/(1-u)) after clamping; logdet is
// sum_i(-log u_i - log(1-u_i)).
VecLogdet logit_forward(std::span<const double> u, double eps_u);
std::vector<double> logit_inverse(std::span<const double> y);

VecLogdet coupling_forward(const CouplingLayer& layer,
                           std::span<const double> x, double sigma);
std::vector<double> coupling_inverse(const CouplingLayer& layer,
                                     std::span<const double> y, double sigma);

VecLogdet flow_forward(const CouplingFlow& flow, std::span<const double> u,
                       double sigma);
std::vector<double> flow_inverse(const CouplingFlow& flow,
                                 std::span<const double> z, double sigma);

// log N(z; 0, I) + total log-determinant: the conditional log-density of u
// given the noise level.
double flow_log_prob(const CouplingFlow& flow, std::span<const double> u,
                     double sigma);

std::vector<std::vector<double>> flow_sample(const CouplingFlow& flow,
                                             std::size_t n, double sigma,
                                             Rng& rng);

// Flat parameter layout, per layer: scale net (weights then bias per MLP
// layer), scale gate_w/gate_b/bias_w/bias_b, then the shift head likewise.
std::size_t flow_param_count(const CouplingFlow& flow);
std::vector<double> flow_get_params(const CouplingFlow& flow);
void flow_set_params(CouplingFlow& flow, std::span<const double> flat);

struct FlowGradResult {
  double mean_nll = 0.0;
  std::vector<double> grad;  // same layout as flow_get_params
};

// Gradient of the mean negative flow_log_prob over the batch with respect
// to every flow parameter, by backpropagation through the conditioners and
// the log-determinant terms.
FlowGradResult flow_grad(const CouplingFlow& flow,
                         const std::vector<std::vector<double>>& u_batch,
                         std::span<const double> sigma_batch);

}  // namespace comet
