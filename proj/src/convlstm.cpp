#include "gridcast/convlstm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "gridcast/rng.hpp"

namespace gridcast {

const char* activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw DataError("unknown activation '" + name + "' (expected tanh or relu)");
}

CellParams::CellParams(int filters_, int in_channels_, int kh_, int kw_,
                       int grid_h_, int grid_w_)
    : filters(filters_),
      in_channels(in_channels_),
      kh(kh_),
      kw(kw_),
      grid_h(grid_h_),
      grid_w(grid_w_),
      w_xi(filters_, in_channels_, kh_, kw_),
      w_xf(filters_, in_channels_, kh_, kw_),
      w_xc(filters_, in_channels_, kh_, kw_),
      w_xo(filters_, in_channels_, kh_, kw_),
      w_hi(filters_, filters_, kh_, kw_),
      w_hf(filters_, filters_, kh_, kw_),
      w_hc(filters_, filters_, kh_, kw_),
      w_ho(filters_, filters_, kh_, kw_),
      w_ci(filters_, grid_h_, grid_w_),
      w_cf(filters_, grid_h_, grid_w_),
      w_co(filters_, grid_h_, grid_w_),
      b_i(filters_, 0.0),
      b_f(filters_, 0.0),
      b_c(filters_, 0.0),
      b_o(filters_, 0.0) {}

CellState zero_state(int filters, int grid_h, int grid_w) {
  return CellState{Grid3(filters, grid_h, grid_w),
                   Grid3(filters, grid_h, grid_w)};
}

void NetworkSpec::validate() const {
  if (layer1_filters < 1 || layer2_filters < 1) {
    throw ShapeError("NetworkSpec: filter counts must be >= 1");
  }
  if (kernel_h < 1 || kernel_w < 1) {
    throw ShapeError("NetworkSpec: kernel dims must be >= 1");
  }
  if (input_channels < 1 || grid_h < 1 || grid_w < 1) {
    throw ShapeError("NetworkSpec: input dimensions must be >= 1");
  }
}

namespace {

void check_cell_shapes(const CellParams& p, const Grid3& x,
                       const CellState& prev) {
  if (x.channels != p.in_channels) {
    throw ShapeError("cell_step: input has " + std::to_string(x.channels) +
                     " channels, cell expects " +
                     std::to_string(p.in_channels));
  }
  if (x.height != p.grid_h || x.width != p.grid_w) {
    throw ShapeError("cell_step: input grid " + std::to_string(x.height) +
                     "x" + std::to_string(x.width) + " does not match cell " +
                     std::to_string(p.grid_h) + "x" + std::to_string(p.grid_w));
  }
  if (prev.h.channels != p.filters || prev.h.height != p.grid_h ||
      prev.h.width != p.grid_w || !prev.h.same_shape(prev.c)) {
    throw ShapeError("cell_step: previous state shape mismatch");
  }
}

void check_gate_finite(const Grid3& g, const char* gate) {
  if (!all_finite(g.data)) {
    throw ValueError(std::string("cell_step: non-finite value in ") + gate);
  }
}

void apply_activation(Activation g, const double* in, double* out,
                      std::size_t n) {
  if (g == Activation::Tanh) {
    for (std::size_t k = 0; k < n; ++k) out[k] = std::tanh(in[k]);
  } else {
    for (std::size_t k = 0; k < n; ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
  }
}

// One step. x given as a raw (in_channels, grid) frame so sequence code can
// feed SeqBatch frames without copying.
void cell_step_core(const CellParams& p, const double* x_data,
                    const CellState& prev, Activation g, bool use_peepholes,
                    CellState& out, StepRecord* rec) {
  const int n = p.filters;
  const int gh = p.grid_h;
  const int gw = p.grid_w;
  const std::size_t plane = static_cast<std::size_t>(gh) * gw;
  const std::size_t state_len = static_cast<std::size_t>(n) * plane;

  Grid3 x_view(p.in_channels, gh, gw,
               std::vector<double>(x_data, x_data + static_cast<std::size_t>(p.in_channels) * plane));

  auto preact = [&](const ConvKernel& wx, const ConvKernel& wh,
                    const std::vector<double>& bias) {
    Grid3 a(n, gh, gw);
    for (int f = 0; f < n; ++f) {
      double b = bias[f];
      double* row = a.data.data() + f * plane;
      for (std::size_t k = 0; k < plane; ++k) row[k] = b;
    }
    conv2d_same_accum(x_view, wx, a);
    conv2d_same_accum(prev.h, wh, a);
    return a;
  };

  Grid3 a_i = preact(p.w_xi, p.w_hi, p.b_i);
  Grid3 a_f = preact(p.w_xf, p.w_hf, p.b_f);
  Grid3 a_c = preact(p.w_xc, p.w_hc, p.b_c);
  if (use_peepholes) {
    for (std::size_t k = 0; k < state_len; ++k) {
      a_i.data[k] += p.w_ci.data[k] * prev.c.data[k];
      a_f.data[k] += p.w_cf.data[k] * prev.c.data[k];
    }
  }
  check_gate_finite(a_i, "input gate");
  check_gate_finite(a_f, "forget gate");
  check_gate_finite(a_c, "cell candidate");

  Grid3 in_gate(n, gh, gw), forget_gate(n, gh, gw), cand(n, gh, gw);
  for (std::size_t k = 0; k < state_len; ++k) {
    in_gate.data[k] = 1.0 / (1.0 + std::exp(-a_i.data[k]));
    forget_gate.data[k] = 1.0 / (1.0 + std::exp(-a_f.data[k]));
  }
  apply_activation(g, a_c.data.data(), cand.data.data(), state_len);

  Grid3 c_next(n, gh, gw);
  for (std::size_t k = 0; k < state_len; ++k) {
    c_next.data[k] = forget_gate.data[k] * prev.c.data[k] +
                     in_gate.data[k] * cand.data[k];
  }
  check_gate_finite(c_next, "cell state");

  Grid3 a_o = preact(p.w_xo, p.w_ho, p.b_o);
  if (use_peepholes) {
    for (std::size_t k = 0; k < state_len; ++k) {
      a_o.data[k] += p.w_co.data[k] * c_next.data[k];
    }
  }
  check_gate_finite(a_o, "output gate");

  Grid3 out_gate(n, gh, gw), gc(n, gh, gw);
  for (std::size_t k = 0; k < state_len; ++k) {
    out_gate.data[k] = 1.0 / (1.0 + std::exp(-a_o.data[k]));
  }
  apply_activation(g, c_next.data.data(), gc.data.data(), state_len);

  Grid3 h_next(n, gh, gw);
  for (std::size_t k = 0; k < state_len; ++k) {
    h_next.data[k] = out_gate.data[k] * gc.data[k];
  }
  check_gate_finite(h_next, "hidden state");

  if (rec != nullptr) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < state_len; ++k) {
      margin = std::min(margin, std::abs(a_c.data[k]));
      // A relu cell pinned at exactly zero is stable under parameter nudges:
      // it can only leave zero if some candidate preactivation crosses zero,
      // and those are already counted above. Only near-zero (not exact-zero)
      // cell states make g(C) kink-sensitive.
      if (c_next.data[k] != 0.0)
        margin = std::min(margin, std::abs(c_next.data[k]));
    }
    rec->kink_margin = margin;
    rec->in_gate = std::move(in_gate);
    rec->forget_gate = std::move(forget_gate);
    rec->cand = std::move(cand);
    rec->out_gate = std::move(out_gate);
    rec->c = c_next;  // also the next state, keep a copy
    rec->gc = std::move(gc);
  }
  out.c = std::move(c_next);
  out.h = std::move(h_next);
}

}  // namespace

CellState cell_step(const CellParams& params, const Grid3& x,
                    const CellState& prev, Activation g, bool use_peepholes) {
  check_cell_shapes(params, x, prev);
  require_finite(x.data, "cell_step input");
  CellState out;
  cell_step_core(params, x.data.data(), prev, g, use_peepholes, out, nullptr);
  return out;
}

SeqBatch layer_forward_traced(const CellParams& params, const SeqBatch& seq,
                              Activation g, bool use_peepholes,
                              LayerTrace* trace) {
  if (seq.batch < 1 || seq.time < 1) {
    throw ShapeError("layer_forward: empty sequence");
  }
  if (seq.channels != params.in_channels || seq.height != params.grid_h ||
      seq.width != params.grid_w) {
    throw ShapeError("layer_forward: sequence frame shape does not match cell");
  }

  SeqBatch out(seq.batch, seq.time, params.filters, params.grid_h,
               params.grid_w);
  if (trace != nullptr) {
    trace->batch = seq.batch;
    trace->time = seq.time;
    trace->steps.assign(static_cast<std::size_t>(seq.batch) * seq.time,
                        StepRecord{});
  }

  for (int b = 0; b < seq.batch; ++b) {
    CellState state = zero_state(params.filters, params.grid_h, params.grid_w);
    for (int t = 0; t < seq.time; ++t) {
      StepRecord* rec = trace != nullptr ? &trace->at(b, t) : nullptr;
      CellState next;
      cell_step_core(params, seq.frame(b, t), state, g, use_peepholes, next,
                     rec);
      std::memcpy(out.frame(b, t), next.h.data.data(),
                  next.h.data.size() * sizeof(double));
      state = std::move(next);
    }
  }
  return out;
}

SeqBatch layer_forward(const CellParams& params, const SeqBatch& seq,
                       bool return_sequences, Activation g,
                       bool use_peepholes) {
  SeqBatch all = layer_forward_traced(params, seq, g, use_peepholes, nullptr);
  if (return_sequences) return all;

  SeqBatch last(all.batch, 1, all.channels, all.height, all.width);
  for (int b = 0; b < all.batch; ++b) {
    std::memcpy(last.frame(b, 0), all.frame(b, all.time - 1),
                all.frame_size() * sizeof(double));
  }
  return last;
}

void validate_network(const NetworkSpec& spec, const NetworkParams& params) {
  spec.validate();
  auto check_cell = [](const CellParams& p, int filters, int in_channels,
                       int kh, int kw, int gh, int gw, const char* which) {
    bool ok = p.filters == filters && p.in_channels == in_channels &&
              p.kh == kh && p.kw == kw && p.grid_h == gh && p.grid_w == gw &&
              p.w_xi.out_channels == filters &&
              p.w_xi.in_channels == in_channels &&
              p.w_hi.in_channels == filters &&
              p.w_ci.channels == filters && p.w_ci.height == gh &&
              p.w_ci.width == gw &&
              static_cast<int>(p.b_i.size()) == filters;
    if (!ok) {
      throw ShapeError(std::string("network params: ") + which +
                       " does not match spec");
    }
  };
  check_cell(params.layer1, spec.layer1_filters, spec.input_channels,
             spec.kernel_h, spec.kernel_w, spec.grid_h, spec.grid_w, "layer1");
  check_cell(params.layer2, spec.layer2_filters, spec.layer1_filters,
             spec.kernel_h, spec.kernel_w, spec.grid_h, spec.grid_w, "layer2");
  if (params.head_weight.out_channels != 1 ||
      params.head_weight.in_channels != spec.layer2_filters ||
      params.head_weight.kh != 1 || params.head_weight.kw != 1 ||
      params.head_bias.size() != 1) {
    throw ShapeError("network params: head does not match spec");
  }
}

std::vector<Grid3> network_forward(const NetworkSpec& spec,
                                   const NetworkParams& params,
                                   const SeqBatch& batch) {
  validate_network(spec, params);
  if (batch.channels != spec.input_channels) {
    throw ShapeError("network_forward: batch has " +
                     std::to_string(batch.channels) + " channels, spec wants " +
                     std::to_string(spec.input_channels));
  }
  if (batch.height != spec.grid_h || batch.width != spec.grid_w) {
    throw ShapeError("network_forward: batch grid does not match spec");
  }

  const Activation g = spec.cell_activation;
  SeqBatch seq1 = layer_forward(params.layer1, batch, true, g, spec.peepholes);
  SeqBatch h2 = layer_forward(params.layer2, seq1, false, g, spec.peepholes);

  std::vector<Grid3> preds;
  preds.reserve(batch.batch);
  for (int b = 0; b < batch.batch; ++b) {
    preds.push_back(
        conv2d_same(h2.frame_grid(b, 0), params.head_weight, params.head_bias));
  }
  return preds;
}

namespace {

void fill_glorot(ConvKernel& k, Rng& rng) {
  const double fan_in = static_cast<double>(k.in_channels) * k.kh * k.kw;
  const double fan_out = static_cast<double>(k.out_channels) * k.kh * k.kw;
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : k.data) v = rng.uniform(-bound, bound);
}

}  // namespace

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  NetworkParams p;
  p.layer1 = CellParams(spec.layer1_filters, spec.input_channels, spec.kernel_h,
                        spec.kernel_w, spec.grid_h, spec.grid_w);
  p.layer2 = CellParams(spec.layer2_filters, spec.layer1_filters, spec.kernel_h,
                        spec.kernel_w, spec.grid_h, spec.grid_w);
  p.head_weight = ConvKernel(1, spec.layer2_filters, 1, 1);
  p.head_bias.assign(1, 0.0);

  Rng rng = Rng::stream(seed, 0x67726964);  // fixed stream tag for init
  for (CellParams* cell : {&p.layer1, &p.layer2}) {
    fill_glorot(cell->w_xi, rng);
    fill_glorot(cell->w_xf, rng);
    fill_glorot(cell->w_xc, rng);
    fill_glorot(cell->w_xo, rng);
    fill_glorot(cell->w_hi, rng);
    fill_glorot(cell->w_hf, rng);
    fill_glorot(cell->w_hc, rng);
    fill_glorot(cell->w_ho, rng);
    std::fill(cell->b_f.begin(), cell->b_f.end(), 1.0);
  }
  fill_glorot(p.head_weight, rng);
  return p;
}

std::vector<TensorRef> tensor_refs(NetworkParams& params) {
  std::vector<TensorRef> refs;
  refs.reserve(31);
  auto add_cell = [&refs](const std::string& prefix, CellParams& c) {
    refs.push_back({prefix + "/w_xi", &c.w_xi.data, false});
    refs.push_back({prefix + "/w_xf", &c.w_xf.data, false});
    refs.push_back({prefix + "/w_xc", &c.w_xc.data, false});
    refs.push_back({prefix + "/w_xo", &c.w_xo.data, false});
    refs.push_back({prefix + "/w_hi", &c.w_hi.data, false});
    refs.push_back({prefix + "/w_hf", &c.w_hf.data, false});
    refs.push_back({prefix + "/w_hc", &c.w_hc.data, false});
    refs.push_back({prefix + "/w_ho", &c.w_ho.data, false});
    refs.push_back({prefix + "/w_ci", &c.w_ci.data, true});
    refs.push_back({prefix + "/w_cf", &c.w_cf.data, true});
    refs.push_back({prefix + "/w_co", &c.w_co.data, true});
    refs.push_back({prefix + "/b_i", &c.b_i, false});
    refs.push_back({prefix + "/b_f", &c.b_f, false});
    refs.push_back({prefix + "/b_c", &c.b_c, false});
    refs.push_back({prefix + "/b_o", &c.b_o, false});
  };
  add_cell("layer1", params.layer1);
  add_cell("layer2", params.layer2);
  refs.push_back({"head/weight", &params.head_weight.data, false});
  refs.push_back({"head/bias", &params.head_bias, false});
  return refs;
}

}  // namespace gridcast
