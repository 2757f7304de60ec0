#include "gridcast/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "gridcast/errors.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {

namespace {

NetworkParams zero_params(const NetworkSpec& spec) {
  NetworkParams p;
  p.layer1 = CellParams(spec.layer1_filters, spec.input_channels, spec.kernel_h,
                        spec.kernel_w, spec.grid_h, spec.grid_w);
  p.layer2 = CellParams(spec.layer2_filters, spec.layer1_filters, spec.kernel_h,
                        spec.kernel_w, spec.grid_h, spec.grid_w);
  p.head_weight = ConvKernel(1, spec.layer2_filters, 1, 1);
  p.head_bias.assign(1, 0.0);
  return p;
}

// Derivative of the cell activation expressed through its output value:
// tanh' = 1 - y^2, relu' = [y > 0] (zero at exactly zero).
inline double act_deriv(Activation g, double y) {
  return g == Activation::Tanh ? 1.0 - y * y : (y > 0.0 ? 1.0 : 0.0);
}

// Reverse sweep through one layer for one batch item. `input` and `h_seq` are
// the layer's input and hidden-state sequences from the traced forward pass.
// dH injections arrive per step from `inject` (frame (0, t)) and/or once at
// the final step from `inject_last`. Parameter gradients accumulate into
// `gp`; when `dinput` is given, frame (0, t) receives dLoss/dx_t.
void cell_bptt(const CellParams& p, const SeqBatch& input, int b,
               const SeqBatch& h_seq, const LayerTrace& trace, Activation g,
               bool use_peepholes, const SeqBatch* inject,
               const Grid3* inject_last, CellParams& gp, SeqBatch* dinput) {
  const int T = trace.time;
  const int f = p.filters;
  const int gh = p.grid_h;
  const int gw = p.grid_w;
  const std::size_t state_len = static_cast<std::size_t>(f) * gh * gw;

  const Grid3 zero_state_grid(f, gh, gw);
  Grid3 dh(f, gh, gw), dc(f, gh, gw);
  Grid3 da_i(f, gh, gw), da_f(f, gh, gw), da_g(f, gh, gw), da_o(f, gh, gw);
  Grid3 dh_prev(f, gh, gw), dc_prev(f, gh, gw);
  Grid3 x_t(p.in_channels, gh, gw);
  Grid3 h_prev(f, gh, gw);
  Grid3 dx_t(p.in_channels, gh, gw);

  for (int t = T - 1; t >= 0; --t) {
    const StepRecord& r = trace.at(b, t);
    if (inject != nullptr) {
      const double* extra = inject->frame(0, t);
      for (std::size_t k = 0; k < state_len; ++k) dh.data[k] += extra[k];
    }
    if (t == T - 1 && inject_last != nullptr) {
      for (std::size_t k = 0; k < state_len; ++k)
        dh.data[k] += inject_last->data[k];
    }

    const Grid3& c_prev = t > 0 ? trace.at(b, t - 1).c : zero_state_grid;
    if (t > 0) {
      std::memcpy(h_prev.data.data(), h_seq.frame(b, t - 1),
                  state_len * sizeof(double));
    } else {
      h_prev.fill(0.0);
    }
    std::memcpy(x_t.data.data(), input.frame(b, t),
                x_t.data.size() * sizeof(double));

    for (std::size_t k = 0; k < state_len; ++k) {
      const double o = r.out_gate.data[k];
      const double d_o = dh.data[k] * r.gc.data[k];   // H = O . g(C)
      da_o.data[k] = d_o * o * (1.0 - o);
      dc.data[k] += dh.data[k] * o * act_deriv(g, r.gc.data[k]);
    }
    if (use_peepholes) {
      // the output gate peeks at the current cell state
      for (std::size_t k = 0; k < state_len; ++k)
        dc.data[k] += p.w_co.data[k] * da_o.data[k];
    }

    for (std::size_t k = 0; k < state_len; ++k) {
      const double i = r.in_gate.data[k];
      const double fo = r.forget_gate.data[k];
      const double d_i = dc.data[k] * r.cand.data[k];  // C = F.Cprev + I.G
      const double d_f = dc.data[k] * c_prev.data[k];
      da_i.data[k] = d_i * i * (1.0 - i);
      da_f.data[k] = d_f * fo * (1.0 - fo);
      da_g.data[k] = dc.data[k] * i * act_deriv(g, r.cand.data[k]);
      dc_prev.data[k] = dc.data[k] * fo;
    }
    if (use_peepholes) {
      for (std::size_t k = 0; k < state_len; ++k) {
        dc_prev.data[k] += p.w_ci.data[k] * da_i.data[k] +
                           p.w_cf.data[k] * da_f.data[k];
        gp.w_ci.data[k] += da_i.data[k] * c_prev.data[k];
        gp.w_cf.data[k] += da_f.data[k] * c_prev.data[k];
        gp.w_co.data[k] += da_o.data[k] * r.c.data[k];
      }
    }

    conv2d_same_backward_kernel(x_t, da_i, gp.w_xi);
    conv2d_same_backward_kernel(x_t, da_f, gp.w_xf);
    conv2d_same_backward_kernel(x_t, da_g, gp.w_xc);
    conv2d_same_backward_kernel(x_t, da_o, gp.w_xo);
    conv2d_same_backward_kernel(h_prev, da_i, gp.w_hi);
    conv2d_same_backward_kernel(h_prev, da_f, gp.w_hf);
    conv2d_same_backward_kernel(h_prev, da_g, gp.w_hc);
    conv2d_same_backward_kernel(h_prev, da_o, gp.w_ho);
    conv2d_same_backward_bias(da_i, gp.b_i.data());
    conv2d_same_backward_bias(da_f, gp.b_f.data());
    conv2d_same_backward_bias(da_g, gp.b_c.data());
    conv2d_same_backward_bias(da_o, gp.b_o.data());

    dh_prev.fill(0.0);
    conv2d_same_backward_input(p.w_hi, da_i, dh_prev);
    conv2d_same_backward_input(p.w_hf, da_f, dh_prev);
    conv2d_same_backward_input(p.w_hc, da_g, dh_prev);
    conv2d_same_backward_input(p.w_ho, da_o, dh_prev);

    if (dinput != nullptr) {
      dx_t.fill(0.0);
      conv2d_same_backward_input(p.w_xi, da_i, dx_t);
      conv2d_same_backward_input(p.w_xf, da_f, dx_t);
      conv2d_same_backward_input(p.w_xc, da_g, dx_t);
      conv2d_same_backward_input(p.w_xo, da_o, dx_t);
      std::memcpy(dinput->frame(0, t), dx_t.data.data(),
                  dx_t.data.size() * sizeof(double));
    }

    std::swap(dh, dh_prev);
    std::swap(dc, dc_prev);
  }
}

void check_batch_targets(const SeqBatch& x, const std::vector<Grid3>& y) {
  if (x.batch < 1) throw ShapeError("loss: empty batch");
  if (y.size() != static_cast<std::size_t>(x.batch))
    throw ShapeError("loss: " + std::to_string(x.batch) + " inputs but " +
                     std::to_string(y.size()) + " targets");
  for (const Grid3& t : y) {
    if (t.channels != 1 || t.height != x.height || t.width != x.width)
      throw ShapeError("loss: target grid shape mismatch");
    require_finite(t.data, "loss target");
  }
}

}  // namespace

double mse_loss(const std::vector<Grid3>& predicted,
                const std::vector<Grid3>& observed) {
  if (predicted.empty() || predicted.size() != observed.size())
    throw ShapeError("mse_loss: size mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!predicted[i].same_shape(observed[i]))
      throw ShapeError("mse_loss: shape mismatch at sample " +
                       std::to_string(i));
    for (std::size_t k = 0; k < predicted[i].data.size(); ++k) {
      const double d = predicted[i].data[k] - observed[i].data[k];
      sum += d * d;
    }
    count += predicted[i].data.size();
  }
  return sum / static_cast<double>(count);
}

LossGradients loss_and_gradients(const NetworkSpec& spec,
                                 const NetworkParams& params, const SeqBatch& x,
                                 const std::vector<Grid3>& y) {
  validate_network(spec, params);
  check_batch_targets(x, y);
  const Activation g = spec.cell_activation;
  const bool peep = spec.peepholes;
  const int T = x.time;

  LayerTrace trace1, trace2;
  SeqBatch h1 = layer_forward_traced(params.layer1, x, g, peep, &trace1);
  SeqBatch h2 = layer_forward_traced(params.layer2, h1, g, peep, &trace2);

  LossGradients out;
  out.grads = zero_params(spec);
  const std::size_t cells = static_cast<std::size_t>(x.height) * x.width;
  const double denom = static_cast<double>(x.batch) * cells;

  SeqBatch dh1(1, T, spec.layer1_filters, x.height, x.width);
  Grid3 dh2(spec.layer2_filters, x.height, x.width);
  Grid3 dpred(1, x.height, x.width);

  double sq_sum = 0.0;
  for (int b = 0; b < x.batch; ++b) {
    const Grid3 h2_final = h2.frame_grid(b, T - 1);
    const Grid3 pred =
        conv2d_same(h2_final, params.head_weight, params.head_bias);
    for (std::size_t k = 0; k < cells; ++k) {
      const double d = pred.data[k] - y[b].data[k];
      sq_sum += d * d;
      dpred.data[k] = 2.0 * d / denom;
    }

    conv2d_same_backward_kernel(h2_final, dpred, out.grads.head_weight);
    conv2d_same_backward_bias(dpred, out.grads.head_bias.data());
    dh2.fill(0.0);
    conv2d_same_backward_input(params.head_weight, dpred, dh2);

    cell_bptt(params.layer2, h1, b, h2, trace2, g, peep, nullptr, &dh2,
              out.grads.layer2, &dh1);
    cell_bptt(params.layer1, x, b, h1, trace1, g, peep, &dh1, nullptr,
              out.grads.layer1, nullptr);
  }
  out.loss = sq_sum / denom;
  return out;
}

GradCheckResult grad_check(const NetworkSpec& spec,
                           const NetworkParams& params, const SeqBatch& x,
                           const std::vector<Grid3>& y, double epsilon) {
  if (epsilon <= 0.0) throw ValueError("grad_check: epsilon must be positive");
  LossGradients analytic = loss_and_gradients(spec, params, x, y);

  NetworkParams probe = params;
  std::vector<TensorRef> probe_refs = tensor_refs(probe);
  std::vector<TensorRef> grad_refs = tensor_refs(analytic.grads);

  GradCheckResult result;
  for (std::size_t r = 0; r < probe_refs.size(); ++r) {
    std::vector<double>& values = *probe_refs[r].values;
    const std::vector<double>& grads = *grad_refs[r].values;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + epsilon;
      const double up = mse_loss(network_forward(spec, probe, x), y);
      values[k] = saved - epsilon;
      const double down = mse_loss(network_forward(spec, probe, x), y);
      values[k] = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double rel = std::abs(grads[k] - numeric) /
                         std::max(1.0, std::abs(numeric));
      ++result.params_checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = probe_refs[r].name;
        result.worst_index = k;
        result.analytic = grads[k];
        result.numeric = numeric;
      }
    }
  }
  return result;
}

AdamState make_adam_state(NetworkParams& params) {
  AdamState state;
  for (const TensorRef& ref : tensor_refs(params)) {
    state.m.emplace_back(ref.values->size(), 0.0);
    state.v.emplace_back(ref.values->size(), 0.0);
  }
  return state;
}

void adam_step(NetworkParams& params, NetworkParams& grads, AdamState& state,
               const AdamConfig& cfg) {
  std::vector<TensorRef> refs = tensor_refs(params);
  std::vector<TensorRef> grefs = tensor_refs(grads);
  if (state.m.size() != refs.size())
    throw ValueError("adam_step: state does not match parameter layout");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t r = 0; r < refs.size(); ++r) {
    std::vector<double>& theta = *refs[r].values;
    const std::vector<double>& grad = *grefs[r].values;
    std::vector<double>& m = state.m[r];
    std::vector<double>& v = state.v[r];
    if (theta.size() != grad.size() || theta.size() != m.size())
      throw ValueError("adam_step: tensor size mismatch at " + refs[r].name);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      theta[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

double clip_gradients(NetworkParams& grads, double max_norm) {
  double sq = 0.0;
  std::vector<TensorRef> refs = tensor_refs(grads);
  for (const TensorRef& ref : refs)
    for (double g : *ref.values) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const TensorRef& ref : refs)
      for (double& g : *ref.values) g *= scale;
  }
  return norm;
}

double kink_margin(const NetworkSpec& spec, const NetworkParams& params,
                   const SeqBatch& x) {
  validate_network(spec, params);
  const Activation g = spec.cell_activation;
  LayerTrace trace1, trace2;
  SeqBatch h1 =
      layer_forward_traced(params.layer1, x, g, spec.peepholes, &trace1);
  layer_forward_traced(params.layer2, h1, g, spec.peepholes, &trace2);
  double margin = std::numeric_limits<double>::infinity();
  for (const LayerTrace* trace : {&trace1, &trace2})
    for (const StepRecord& step : trace->steps)
      margin = std::min(margin, step.kink_margin);
  return margin;
}

PredictionSet predict_all(const NetworkSpec& spec, const NetworkParams& params,
                          const WindowSet& set, int batch_size) {
  if (batch_size < 1) throw ValueError("predict_all: batch_size must be >= 1");
  PredictionSet out;
  out.predicted.reserve(set.size());
  out.observed.reserve(set.size());
  SeqBatch x;
  std::vector<Grid3> y;
  std::vector<std::size_t> indices;
  for (std::size_t start = 0; start < set.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop =
        std::min(set.size(), start + static_cast<std::size_t>(batch_size));
    indices.resize(stop - start);
    std::iota(indices.begin(), indices.end(), start);
    set.assemble(indices, x, y);
    std::vector<Grid3> preds = network_forward(spec, params, x);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      out.predicted.push_back(std::move(preds[i]));
      out.observed.push_back(std::move(y[i]));
    }
  }
  return out;
}

namespace {

double validation_loss(const NetworkSpec& spec, const NetworkParams& params,
                       const WindowSet& val_set, int batch_size) {
  PredictionSet p = predict_all(spec, params, val_set, batch_size);
  return mse_loss(p.predicted, p.observed);
}

}  // namespace

TrainResult train(const NetworkSpec& spec, const NetworkParams& initial,
                  const WindowSet& train_set, const WindowSet& val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate_network(spec, initial);
  if (train_set.size() == 0) throw ValueError("train: no training samples");
  if (cfg.batch_size < 1) throw ValueError("train: batch_size must be >= 1");
  if (cfg.max_epochs < 1) throw ValueError("train: max_epochs must be >= 1");
  if (cfg.patience < 1) throw ValueError("train: patience must be >= 1");

  NetworkParams params = initial;
  AdamState adam = make_adam_state(params);
  Rng rng = Rng::stream(cfg.shuffle_seed, 0x73687566);  // shuffle stream

  TrainResult result;
  result.best_params = params;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  NetworkParams last_finite = params;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = order.size();
  int stale_epochs = 0;
  result.stop_reason = "max_epochs";

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = rng.below(i + 1);
      std::swap(order[i], order[j]);
    }

    double train_sq = 0.0;
    bool finite = true;
    SeqBatch x;
    std::vector<Grid3> y;
    try {
      for (std::size_t start = 0; start < n && finite;
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop =
            std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
        train_set.assemble(
            std::span<const std::size_t>(order.data() + start, stop - start),
            x, y);
        LossGradients lg = loss_and_gradients(spec, params, x, y);
        if (!std::isfinite(lg.loss)) {
          finite = false;
          break;
        }
        train_sq += lg.loss * static_cast<double>(stop - start);
        clip_gradients(lg.grads, cfg.clip_norm);
        adam_step(params, lg.grads, adam, cfg.adam);
      }
    } catch (const ValueError&) {
      // the forward pass rejects non-finite activations; treat as divergence
      finite = false;
    }

    if (!finite) {
      result.diverged = true;
      result.stop_reason = "diverged";
      break;
    }
    last_finite = params;
    ++result.epochs_run;

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = train_sq / static_cast<double>(n);
    stats.val_loss = val_set.size() > 0
                         ? validation_loss(spec, params, val_set,
                                           cfg.batch_size)
                         : stats.train_loss;
    stats.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - epoch_start)
                        .count();
    stats.improved = stats.val_loss < result.best_val_loss;
    if (stats.improved) {
      result.best_val_loss = stats.val_loss;
      result.best_epoch = epoch;
      result.best_params = params;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (stale_epochs >= cfg.patience) {
      result.stop_reason = "early_stop";
      break;
    }
  }

  if (result.best_epoch == 0) {
    // never completed a finite epoch; hand back the last finite parameters
    result.best_params = last_finite;
    result.best_val_loss = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

}  // namespace gridcast
