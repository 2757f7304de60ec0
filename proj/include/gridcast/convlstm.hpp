#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/tensor.hpp"

namespace gridcast {

// Activation applied to the cell candidate and to the cell state on output.
// Tanh follows the layer equations exactly; Relu is the variant used for
// training speed on rainfall data.
enum class Activation { Tanh, Relu };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// All weights of one ConvLSTM cell: input-to-state and state-to-state
// convolutions per gate, elementwise peephole weights on the cell state, and
// per-filter biases.
struct CellParams {
  int filters = 0;
  int in_channels = 0;
  int kh = 0;
  int kw = 0;
  int grid_h = 0;
  int grid_w = 0;

  ConvKernel w_xi, w_xf, w_xc, w_xo;  // filters x in_channels x kh x kw
  ConvKernel w_hi, w_hf, w_hc, w_ho;  // filters x filters x kh x kw
  Grid3 w_ci, w_cf, w_co;             // filters x grid_h x grid_w
  std::vector<double> b_i, b_f, b_c, b_o;  // length filters

  CellParams() = default;
  CellParams(int filters, int in_channels, int kh, int kw, int grid_h,
             int grid_w);
};

struct CellState {
  Grid3 h;  // hidden state, filters x grid_h x grid_w
  Grid3 c;  // cell state, same shape
};

CellState zero_state(int filters, int grid_h, int grid_w);

struct NetworkSpec {
  int layer1_filters = 128;
  int layer2_filters = 64;
  int kernel_h = 2;
  int kernel_w = 2;
  Activation cell_activation = Activation::Tanh;
  bool peepholes = true;
  int input_channels = 11;
  int grid_h = 2;
  int grid_w = 2;

  void validate() const;
};

// Two stacked cells plus a linear 1x1 projection down to one output channel.
struct NetworkParams {
  CellParams layer1;
  CellParams layer2;
  ConvKernel head_weight;          // 1 x layer2_filters x 1 x 1
  std::vector<double> head_bias;   // length 1
};

// One gate update of the cell:
//   I = sigma(w_xi*x + w_hi*H + w_ci.C + b_i)
//   F = sigma(w_xf*x + w_hf*H + w_cf.C + b_f)
//   C' = F.C + I.g(w_xc*x + w_hc*H + b_c)
//   O = sigma(w_xo*x + w_ho*H + w_co.C' + b_o)
//   H' = O.g(C')
// where * is same-padded cross-correlation, . the elementwise product and g
// the configured cell activation.
CellState cell_step(const CellParams& params, const Grid3& x,
                    const CellState& prev, Activation g,
                    bool use_peepholes = true);

// Iterates cell_step over the time axis starting from zero states. Output has
// time == seq.time when return_sequences, else time == 1 holding the final H.
SeqBatch layer_forward(const CellParams& params, const SeqBatch& seq,
                       bool return_sequences, Activation g,
                       bool use_peepholes = true);

// layer1 (return sequences) -> layer2 (final state) -> 1x1 head. One
// single-channel prediction grid per batch item, in normalized target units.
std::vector<Grid3> network_forward(const NetworkSpec& spec,
                                   const NetworkParams& params,
                                   const SeqBatch& batch);

// Glorot-uniform convolution kernels, zero biases and peepholes, forget-gate
// bias 1.0. Identical seeds give identical parameters.
NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

// Shape consistency between a spec and a parameter set.
void validate_network(const NetworkSpec& spec, const NetworkParams& params);

// Every parameter tensor of the network in a fixed documented order, paired
// with its checkpoint name. The same order drives the optimizer state, the
// finite-difference sweep, and checkpoint serialization.
struct TensorRef {
  std::string name;
  std::vector<double>* values;
  bool peephole;
};
std::vector<TensorRef> tensor_refs(NetworkParams& params);

// --- internals shared with the training module ---

// Per-step activations recorded during a traced forward pass; the reverse
// sweep needs them. Derivatives are reconstructed from the recorded outputs
// (sigma' = s(1-s), tanh' = 1-y^2, relu' = [y > 0]).
struct StepRecord {
  Grid3 in_gate, forget_gate, cand, out_gate;
  Grid3 c;   // cell state after the step
  Grid3 gc;  // g(c)
  // Smallest |argument| the cell activation saw this step (candidate
  // preactivation and nonzero cell state; a cell pinned at exactly zero is
  // stable and doesn't count). Relu gradient checks resample seeds whose
  // margin sits too close to the kink at zero.
  double kink_margin = 0.0;
};

struct LayerTrace {
  int batch = 0;
  int time = 0;
  std::vector<StepRecord> steps;  // batch-major: steps[b*time + t]
  StepRecord& at(int b, int t) { return steps[static_cast<std::size_t>(b) * time + t]; }
  const StepRecord& at(int b, int t) const {
    return steps[static_cast<std::size_t>(b) * time + t];
  }
};

// As layer_forward, optionally filling a trace. The returned SeqBatch always
// contains all hidden states (callers slice the final step themselves).
SeqBatch layer_forward_traced(const CellParams& params, const SeqBatch& seq,
                              Activation g, bool use_peepholes,
                              LayerTrace* trace);

}  // namespace gridcast
