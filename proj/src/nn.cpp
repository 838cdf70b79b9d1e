#include "comet/nn.hpp"

#include <cmath>
#include <string>

#include "comet/errors.hpp"

namespace comet {

namespace {

double apply_activation(Activation act, double z) {
  return act == Activation::kTanh ? std::tanh(z) : z;
}

double activation_grad(Activation act, double z) {
  if (act == Activation::kIdentity) return 1.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

}  // namespace

std::size_t Mlp::input_dim() const {
  return layers.empty() ? 0 : layers.front().in;
}

std::size_t Mlp::output_dim() const {
  return layers.empty() ? 0 : layers.back().out;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void Mlp::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weights.size() != l.in * l.out || l.bias.size() != l.out)
      throw ShapeError("mlp layer " + std::to_string(i) +
                       ": weight/bias sizes inconsistent with dims");
    if (i > 0 && layers[i - 1].out != l.in)
      throw ShapeError("mlp layers " + std::to_string(i - 1) + " and " +
                       std::to_string(i) + " do not compose");
    for (double w : l.weights)
      if (!std::isfinite(w)) throw ShapeError("mlp has non-finite weight");
    for (double b : l.bias)
      if (!std::isfinite(b)) throw ShapeError("mlp has non-finite bias");
  }
}

Mlp make_mlp(std::size_t in, std::span<const std::size_t> hidden,
             std::size_t out, Rng& rng, bool zero_last) {
  Mlp net;
  std::size_t prev = in;
  auto add_layer = [&](std::size_t n_out, Activation act, bool zero) {
    MlpLayer layer;
    layer.in = prev;
    layer.out = n_out;
    layer.activation = act;
    layer.weights.resize(prev * n_out, 0.0);
    layer.bias.resize(n_out, 0.0);
    if (!zero) {
      const double bound =
          std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
      for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
    }
    net.layers.push_back(std::move(layer));
    prev = n_out;
  };
  for (std::size_t h : hidden) add_layer(h, Activation::kTanh, false);
  add_layer(out, Activation::kIdentity, zero_last);
  return net;
}

MlpForwardResult mlp_forward(const Mlp& params, std::span<const double> input) {
  MlpForwardResult res;
  mlp_forward_reuse(params, input, res.output, res.cache);
  return res;
}

void mlp_forward_reuse(const Mlp& params, std::span<const double> input,
                       std::vector<double>& output, MlpCache& cache) {
  if (params.layers.empty()) throw ShapeError("mlp_forward: empty network");
  if (input.size() != params.input_dim())
    throw ShapeError("mlp_forward: input length " +
                     std::to_string(input.size()) + " != layer dim " +
                     std::to_string(params.input_dim()));

  const std::size_t n_layers = params.layers.size();
  cache.inputs.resize(n_layers);
  cache.preacts.resize(n_layers);

  output.assign(input.begin(), input.end());
  for (std::size_t li = 0; li < n_layers; ++li) {
    const auto& l = params.layers[li];
    auto& x = cache.inputs[li];
    x.swap(output);
    auto& z = cache.preacts[li];
    z.resize(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      double acc = l.bias[r];
      const double* wrow = l.weights.data() + r * l.in;
      for (std::size_t c = 0; c < l.in; ++c) acc += wrow[c] * x[c];
      z[r] = acc;
    }
    output.resize(l.out);
    for (std::size_t r = 0; r < l.out; ++r)
      output[r] = apply_activation(l.activation, z[r]);
  }
}

MlpBackwardResult mlp_backward(const Mlp& params, const MlpCache& cache,
                               std::span<const double> output_grad) {
  MlpBackwardResult res;
  res.param_grads.layers.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& gl = res.param_grads.layers[i];
    const auto& sl = params.layers[i];
    gl.in = sl.in;
    gl.out = sl.out;
    gl.activation = sl.activation;
    gl.weights.assign(sl.weights.size(), 0.0);
    gl.bias.assign(sl.bias.size(), 0.0);
  }
  mlp_backward_accumulate(params, cache, output_grad, res.param_grads,
                          res.input_grad);
  return res;
}

void mlp_backward_accumulate(const Mlp& params, const MlpCache& cache,
                             std::span<const double> output_grad,
                             Mlp& grad_accum, std::vector<double>& input_grad) {
  const std::size_t n_layers = params.layers.size();
  if (cache.inputs.size() != n_layers || cache.preacts.size() != n_layers)
    throw ShapeError("mlp_backward: cache does not match network depth");
  if (output_grad.size() != params.output_dim())
    throw ShapeError("mlp_backward: output_grad length mismatch");
  if (grad_accum.layers.size() != n_layers)
    throw ShapeError("mlp_backward: gradient accumulator depth mismatch");
  for (std::size_t i = 0; i < n_layers; ++i) {
    if (cache.inputs[i].size() != params.layers[i].in ||
        cache.preacts[i].size() != params.layers[i].out)
      throw ShapeError("mlp_backward: stale cache at layer " +
                       std::to_string(i));
    if (grad_accum.layers[i].weights.size() != params.layers[i].weights.size())
      throw ShapeError("mlp_backward: gradient accumulator shape mismatch");
  }

  thread_local std::vector<double> g, gz, gx;
  g.assign(output_grad.begin(), output_grad.end());
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& l = params.layers[li];
    auto& gl = grad_accum.layers[li];

    // d/dz through the activation
    gz.resize(l.out);
    for (std::size_t r = 0; r < l.out; ++r)
      gz[r] = g[r] * activation_grad(l.activation, cache.preacts[li][r]);

    const auto& x = cache.inputs[li];
    gx.assign(l.in, 0.0);
    for (std::size_t r = 0; r < l.out; ++r) {
      gl.bias[r] += gz[r];
      double* wg = gl.weights.data() + r * l.in;
      const double* wrow = l.weights.data() + r * l.in;
      for (std::size_t c = 0; c < l.in; ++c) {
        wg[c] += gz[r] * x[c];
        gx[c] += wrow[c] * gz[r];
      }
    }
    g.swap(gx);
  }
  input_grad.assign(g.begin(), g.end());
}

void mlp_flatten(const Mlp& m, std::vector<double>& out) {
  for (const auto& l : m.layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
}

std::size_t mlp_unflatten(Mlp& m, std::span<const double> flat) {
  std::size_t pos = 0;
  for (auto& l : m.layers) {
    if (pos + l.weights.size() + l.bias.size() > flat.size())
      throw ShapeError("mlp_unflatten: flat vector too short");
    std::copy(flat.begin() + pos, flat.begin() + pos + l.weights.size(),
              l.weights.begin());
    pos += l.weights.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + l.bias.size(),
              l.bias.begin());
    pos += l.bias.size();
  }
  return pos;
}

AdamState make_adam(std::size_t n_params, double learning_rate) {
  AdamState st;
  st.m.assign(n_params, 0.0);
  st.v.assign(n_params, 0.0);
  st.learning_rate = learning_rate;
  return st;
}

void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw ShapeError("adam_step: parameter/gradient/state size mismatch");
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double mhat = state.m[i] / corr1;
    const double vhat = state.v[i] / corr2;
    params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

double grad_check(const ScalarFn& f, const GradFn& analytic_grad,
                  std::span<const double> point, double step) {
  std::vector<double> x(point.begin(), point.end());
  const std::vector<double> analytic = analytic_grad(x);
  if (analytic.size() != x.size())
    throw ShapeError("grad_check: gradient length mismatch");

  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("grad_check: non-finite function value");
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom = std::max(std::abs(analytic[i]), std::abs(numeric));
    const double err = denom > 1e-8 ? std::abs(analytic[i] - numeric) / denom
                                    : std::abs(analytic[i] - numeric);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace comet
