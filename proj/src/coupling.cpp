#include "comet/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "comet/errors.hpp"
#include "comet/stats.hpp"

namespace comet {

namespace {

// Index lists for the two interleaved halves.
struct Mask {
  std::vector<std::size_t> pass;
  std::vector<std::size_t> trans;
};

Mask mask_of(const CouplingLayer& l) {
  Mask m;
  m.pass.reserve(l.pass_dim());
  m.trans.reserve(l.trans_dim());
  for (std::size_t i = 0; i < l.dim; ++i) {
    if ((i % 2 == 0) != l.odd_parity)
      m.pass.push_back(i);
    else
      m.trans.push_back(i);
  }
  return m;
}

std::vector<double> gather(std::span<const double> x,
                           const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
  return out;
}

struct HeadEval {
  std::vector<double> out;      // gate .* net(x) + bias
  std::vector<double> net_out;  // net(x)
  std::vector<double> gate;     // sigmoid(gate_w * sigma + gate_b)
  MlpCache cache;
};

void eval_head_reuse(const ConcatSquash& head, std::span<const double> xp,
                     double sigma, HeadEval& ev) {
  mlp_forward_reuse(head.net, xp, ev.net_out, ev.cache);
  const std::size_t m = ev.net_out.size();
  ev.gate.resize(m);
  ev.out.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    ev.gate[i] = sigmoid(head.gate_weight[i] * sigma + head.gate_bias[i]);
    ev.out[i] = ev.gate[i] * ev.net_out[i] + head.bias_weight[i] * sigma +
                head.bias_bias[i];
  }
}

HeadEval eval_head(const ConcatSquash& head, std::span<const double> xp,
                   double sigma) {
  HeadEval ev;
  eval_head_reuse(head, xp, sigma, ev);
  return ev;
}

double clamp_scale(double raw, double c) { return c * std::tanh(raw / c); }

void check_sigma(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw DomainError("noise level sigma must be finite and >= 0");
}

}  // namespace

CouplingFlow make_flow(std::size_t dim, std::size_t n_layers,
                       std::span<const std::size_t> hidden, double sigma_max,
                       bool logit_input, Rng& rng) {
  if (dim < 2)
    throw ShapeError("make_flow: coupling layers need dim >= 2, got " +
                     std::to_string(dim));
  if (n_layers < 2)
    throw ShapeError("make_flow: need at least 2 coupling layers");
  if (sigma_max < 0.0) throw DomainError("make_flow: sigma_max must be >= 0");

  CouplingFlow flow;
  flow.dim = dim;
  flow.sigma_max = sigma_max;
  flow.logit_input = logit_input;
  flow.hidden.assign(hidden.begin(), hidden.end());

  for (std::size_t i = 0; i < n_layers; ++i) {
    CouplingLayer layer;
    layer.index = static_cast<int>(i);
    layer.dim = dim;
    layer.odd_parity = (i % 2 == 1);
    const std::size_t in = layer.pass_dim();
    const std::size_t out = layer.trans_dim();
    for (ConcatSquash* head : {&layer.scale, &layer.shift}) {
      head->net = make_mlp(in, hidden, out, rng, /*zero_last=*/true);
      head->gate_weight.assign(out, 0.0);
      head->gate_bias.assign(out, 0.0);
      head->bias_weight.assign(out, 0.0);
      head->bias_bias.assign(out, 0.0);
    }
    flow.layers.push_back(std::move(layer));
  }
  return flow;
}

VecLogdet logit_forward(std::span<const double> u, double eps_u) {
  VecLogdet res;
  res.value.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ui = std::clamp(u[i], eps_u, 1.0 - eps_u);
    const double om = 1.0 - ui;
    res.value[i] = std::log(ui) - std::log(om);
    res.logdet += -std::log(ui) - std::log(om);
  }
  return res;
}

std::vector<double> logit_inverse(std::span<const double> y) {
  std::vector<double> u(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) u[i] = sigmoid(y[i]);
  return u;
}

VecLogdet coupling_forward(const CouplingLayer& layer,
                           std::span<const double> x, double sigma) {
  if (x.size() != layer.dim)
    throw ShapeError("coupling_forward: input length " +
                     std::to_string(x.size()) + " != layer dim " +
                     std::to_string(layer.dim));
  check_sigma(sigma);
  const Mask mask = mask_of(layer);
  const std::vector<double> xp = gather(x, mask.pass);

  const HeadEval se = eval_head(layer.scale, xp, sigma);
  const HeadEval te = eval_head(layer.shift, xp, sigma);

  VecLogdet res;
  res.value.assign(x.begin(), x.end());
  for (std::size_t i = 0; i < mask.trans.size(); ++i) {
    const double s = clamp_scale(se.out[i], layer.scale_clamp);
    const double t = te.out[i];
    if (!std::isfinite(s) || !std::isfinite(t))
      throw NumericError("coupling layer " + std::to_string(layer.index) +
                         ": non-finite conditioner output");
    res.value[mask.trans[i]] = x[mask.trans[i]] * std::exp(s) + t;
    res.logdet += s;
  }
  return res;
}

std::vector<double> coupling_inverse(const CouplingLayer& layer,
                                     std::span<const double> y, double sigma) {
  if (y.size() != layer.dim)
    throw ShapeError("coupling_inverse: input length mismatch");
  check_sigma(sigma);
  const Mask mask = mask_of(layer);
  const std::vector<double> yp = gather(y, mask.pass);

  const HeadEval se = eval_head(layer.scale, yp, sigma);
  const HeadEval te = eval_head(layer.shift, yp, sigma);

  std::vector<double> x(y.begin(), y.end());
  for (std::size_t i = 0; i < mask.trans.size(); ++i) {
    const double s = clamp_scale(se.out[i], layer.scale_clamp);
    const double t = te.out[i];
    if (!std::isfinite(s) || !std::isfinite(t))
      throw NumericError("coupling layer " + std::to_string(layer.index) +
                         ": non-finite conditioner output");
    x[mask.trans[i]] = (y[mask.trans[i]] - t) * std::exp(-s);
  }
  return x;
}

VecLogdet flow_forward(const CouplingFlow& flow, std::span<const double> u,
                       double sigma) {
  if (u.size() != flow.dim)
    throw ShapeError("flow_forward: input length " + std::to_string(u.size()) +
                     " != flow dim " + std::to_string(flow.dim));
  VecLogdet acc;
  if (flow.logit_input) {
    acc = logit_forward(u, flow.eps_u);
  } else {
    acc.value.assign(u.begin(), u.end());
  }
  for (const auto& layer : flow.layers) {
    VecLogdet step = coupling_forward(layer, acc.value, sigma);
    acc.value = std::move(step.value);
    acc.logdet += step.logdet;
  }
  return acc;
}

std::vector<double> flow_inverse(const CouplingFlow& flow,
                                 std::span<const double> z, double sigma) {
  if (z.size() != flow.dim)
    throw ShapeError("flow_inverse: input length mismatch");
  std::vector<double> x(z.begin(), z.end());
  for (auto it = flow.layers.rbegin(); it != flow.layers.rend(); ++it)
    x = coupling_inverse(*it, x, sigma);
  return flow.logit_input ? logit_inverse(x) : x;
}

double flow_log_prob(const CouplingFlow& flow, std::span<const double> u,
                     double sigma) {
  const VecLogdet fwd = flow_forward(flow, u, sigma);
  double quad = 0.0;
  for (double zi : fwd.value) quad += zi * zi;
  const double d = static_cast<double>(flow.dim);
  return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * quad + fwd.logdet;
}

std::vector<std::vector<double>> flow_sample(const CouplingFlow& flow,
                                             std::size_t n, double sigma,
                                             Rng& rng) {
  if (n < 1) throw DomainError("flow_sample: need n >= 1");
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> z = rng.normals(flow.dim);
    out.push_back(flow_inverse(flow, z, sigma));
  }
  return out;
}

std::size_t flow_param_count(const CouplingFlow& flow) {
  std::size_t n = 0;
  for (const auto& layer : flow.layers)
    for (const ConcatSquash* head : {&layer.scale, &layer.shift})
      n += head->net.param_count() + head->gate_weight.size() +
           head->gate_bias.size() + head->bias_weight.size() +
           head->bias_bias.size();
  return n;
}

std::vector<double> flow_get_params(const CouplingFlow& flow) {
  std::vector<double> flat;
  flat.reserve(flow_param_count(flow));
  for (const auto& layer : flow.layers)
    for (const ConcatSquash* head : {&layer.scale, &layer.shift}) {
      mlp_flatten(head->net, flat);
      for (const auto* v : {&head->gate_weight, &head->gate_bias,
                            &head->bias_weight, &head->bias_bias})
        flat.insert(flat.end(), v->begin(), v->end());
    }
  return flat;
}

void flow_set_params(CouplingFlow& flow, std::span<const double> flat) {
  if (flat.size() != flow_param_count(flow))
    throw ShapeError("flow_set_params: expected " +
                     std::to_string(flow_param_count(flow)) + " values, got " +
                     std::to_string(flat.size()));
  std::size_t pos = 0;
  for (auto& layer : flow.layers)
    for (ConcatSquash* head : {&layer.scale, &layer.shift}) {
      pos += mlp_unflatten(head->net, flat.subspan(pos));
      for (auto* v : {&head->gate_weight, &head->gate_bias, &head->bias_weight,
                      &head->bias_bias}) {
        std::copy(flat.begin() + pos, flat.begin() + pos + v->size(),
                  v->begin());
        pos += v->size();
      }
    }
}

namespace {

// Per-layer forward record for backpropagation; buffers are reused across
// samples.
struct LayerTape {
  std::vector<double> input;  // x entering the layer
  std::vector<double> xp;     // gathered pass-through coordinates
  HeadEval scale_ev;
  HeadEval shift_ev;
  std::vector<double> s;  // clamped log-scales
};

struct HeadGrads {
  Mlp net;
  std::vector<double> gate_weight, gate_bias, bias_weight, bias_bias;
};

struct LayerGrads {
  HeadGrads scale, shift;
};

LayerGrads zero_layer_grads(const CouplingLayer& layer) {
  LayerGrads g;
  for (auto [src, dst] : {std::pair{&layer.scale, &g.scale},
                          std::pair{&layer.shift, &g.shift}}) {
    dst->net.layers.resize(src->net.layers.size());
    for (std::size_t i = 0; i < src->net.layers.size(); ++i) {
      auto& gl = dst->net.layers[i];
      const auto& sl = src->net.layers[i];
      gl.in = sl.in;
      gl.out = sl.out;
      gl.activation = sl.activation;
      gl.weights.assign(sl.weights.size(), 0.0);
      gl.bias.assign(sl.bias.size(), 0.0);
    }
    const std::size_t m = src->gate_weight.size();
    dst->gate_weight.assign(m, 0.0);
    dst->gate_bias.assign(m, 0.0);
    dst->bias_weight.assign(m, 0.0);
    dst->bias_bias.assign(m, 0.0);
  }
  return g;
}

// Backprop through one conditioner head. g_out is d(nll)/d(head output);
// writes d(nll)/d(x_pass) into input_grad and accumulates parameter
// gradients.
void backprop_head(const ConcatSquash& head, const HeadEval& ev,
                   std::span<const double> g_out, double sigma,
                   HeadGrads& grads, std::vector<double>& input_grad) {
  const std::size_t m = g_out.size();
  thread_local std::vector<double> g_net;
  g_net.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double gate = ev.gate[i];
    g_net[i] = g_out[i] * gate;
    const double g_gate = g_out[i] * ev.net_out[i];
    const double g_pre = g_gate * gate * (1.0 - gate);  // sigmoid'
    grads.gate_weight[i] += g_pre * sigma;
    grads.gate_bias[i] += g_pre;
    grads.bias_weight[i] += g_out[i] * sigma;
    grads.bias_bias[i] += g_out[i];
  }
  mlp_backward_accumulate(head.net, ev.cache, g_net, grads.net, input_grad);
}

}  // namespace

FlowGradResult flow_grad(const CouplingFlow& flow,
                         const std::vector<std::vector<double>>& u_batch,
                         std::span<const double> sigma_batch) {
  if (u_batch.empty()) throw DataError("flow_grad: empty batch");
  if (sigma_batch.size() != u_batch.size())
    throw ShapeError("flow_grad: sigma batch length mismatch");

  const std::size_t n_layers = flow.layers.size();
  std::vector<LayerGrads> grads;
  std::vector<Mask> masks;
  grads.reserve(n_layers);
  masks.reserve(n_layers);
  for (const auto& layer : flow.layers) {
    grads.push_back(zero_layer_grads(layer));
    masks.push_back(mask_of(layer));
  }

  double nll_sum = 0.0;
  std::vector<LayerTape> tape(n_layers);
  std::vector<double> x, g, g_in, g_s, g_t, gp_scale, gp_shift;

  for (std::size_t bi = 0; bi < u_batch.size(); ++bi) {
    const auto& u = u_batch[bi];
    const double sigma = sigma_batch[bi];
    if (u.size() != flow.dim) throw ShapeError("flow_grad: row length mismatch");
    check_sigma(sigma);

    // forward, recording what the backward pass needs
    double logdet = 0.0;
    if (flow.logit_input) {
      VecLogdet lg = logit_forward(u, flow.eps_u);
      logdet += lg.logdet;
      x = std::move(lg.value);
    } else {
      x = u;
    }
    for (std::size_t li = 0; li < n_layers; ++li) {
      const auto& layer = flow.layers[li];
      const Mask& mask = masks[li];
      LayerTape& t = tape[li];
      t.input = x;
      t.xp.resize(mask.pass.size());
      for (std::size_t i = 0; i < mask.pass.size(); ++i)
        t.xp[i] = t.input[mask.pass[i]];
      eval_head_reuse(layer.scale, t.xp, sigma, t.scale_ev);
      eval_head_reuse(layer.shift, t.xp, sigma, t.shift_ev);
      t.s.resize(mask.trans.size());
      for (std::size_t i = 0; i < mask.trans.size(); ++i) {
        t.s[i] = clamp_scale(t.scale_ev.out[i], layer.scale_clamp);
        if (!std::isfinite(t.s[i]) || !std::isfinite(t.shift_ev.out[i]))
          throw NumericError("coupling layer " + std::to_string(layer.index) +
                             ": non-finite conditioner output");
        x[mask.trans[i]] =
            t.input[mask.trans[i]] * std::exp(t.s[i]) + t.shift_ev.out[i];
        logdet += t.s[i];
      }
    }

    double quad = 0.0;
    for (double zi : x) quad += zi * zi;
    const double d = static_cast<double>(flow.dim);
    nll_sum +=
        0.5 * quad + 0.5 * d * std::log(2.0 * std::numbers::pi) - logdet;

    // backward: g = d(nll)/d(layer output)
    g = x;  // derivative of 0.5*||z||^2
    for (std::size_t li = n_layers; li-- > 0;) {
      const auto& layer = flow.layers[li];
      const Mask& mask = masks[li];
      const LayerTape& t = tape[li];

      g_s.resize(mask.trans.size());
      g_t.resize(mask.trans.size());
      g_in.assign(flow.dim, 0.0);
      for (std::size_t i = 0; i < mask.trans.size(); ++i) {
        const double es = std::exp(t.s[i]);
        const double gy = g[mask.trans[i]];
        g_in[mask.trans[i]] = gy * es;
        // the -logdet term contributes -1 to d(nll)/d(s)
        const double ds_draw =
            1.0 - (t.s[i] / layer.scale_clamp) * (t.s[i] / layer.scale_clamp);
        g_s[i] = (gy * t.input[mask.trans[i]] * es - 1.0) * ds_draw;
        g_t[i] = gy;
      }
      auto& lg = grads[li];
      backprop_head(layer.scale, t.scale_ev, g_s, sigma, lg.scale, gp_scale);
      backprop_head(layer.shift, t.shift_ev, g_t, sigma, lg.shift, gp_shift);
      for (std::size_t i = 0; i < mask.pass.size(); ++i)
        g_in[mask.pass[i]] = g[mask.pass[i]] + gp_scale[i] + gp_shift[i];
      g.swap(g_in);
    }
  }

  // flatten accumulated gradients in flow_get_params order, averaged
  const double inv_n = 1.0 / static_cast<double>(u_batch.size());
  FlowGradResult res;
  res.mean_nll = nll_sum * inv_n;
  res.grad.reserve(flow_param_count(flow));
  for (const auto& lg : grads)
    for (const HeadGrads* head : {&lg.scale, &lg.shift}) {
      mlp_flatten(head->net, res.grad);
      for (const auto* v : {&head->gate_weight, &head->gate_bias,
                            &head->bias_weight, &head->bias_bias})
        res.grad.insert(res.grad.end(), v->begin(), v->end());
    }
  for (auto& gv : res.grad) gv *= inv_n;
  return res;
}

}  // namespace comet
