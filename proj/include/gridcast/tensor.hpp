#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gridcast/errors.hpp"

namespace gridcast {

// A (channels x height x width) real field, row-major. The spatial unit every
// other module works in: input frames, hidden states, cell states,
// predictions.
struct Grid3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Grid3() = default;
  Grid3(int c, int h, int w);
  Grid3(int c, int h, int w, std::vector<double> values);

  std::size_t size() const { return data.size(); }

  double& at(int c, int i, int j) {
    return data[(static_cast<std::size_t>(c) * height + i) * width + j];
  }
  double at(int c, int i, int j) const {
    return data[(static_cast<std::size_t>(c) * height + i) * width + j];
  }

  bool same_shape(const Grid3& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  void fill(double v);
};

// Convolution weights, shape (out_channels x in_channels x kh x kw),
// row-major.
struct ConvKernel {
  int out_channels = 0;
  int in_channels = 0;
  int kh = 0;
  int kw = 0;
  std::vector<double> data;

  ConvKernel() = default;
  ConvKernel(int out_c, int in_c, int kh_, int kw_);
  ConvKernel(int out_c, int in_c, int kh_, int kw_, std::vector<double> values);

  std::size_t size() const { return data.size(); }

  double& at(int o, int c, int a, int b) {
    return data[((static_cast<std::size_t>(o) * in_channels + c) * kh + a) * kw + b];
  }
  double at(int o, int c, int a, int b) const {
    return data[((static_cast<std::size_t>(o) * in_channels + c) * kh + a) * kw + b];
  }

  bool same_shape(const ConvKernel& o) const {
    return out_channels == o.out_channels && in_channels == o.in_channels &&
           kh == o.kh && kw == o.kw;
  }
};

// A (batch x time x channels x height x width) block of input sequences.
struct SeqBatch {
  int batch = 0;
  int time = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  SeqBatch() = default;
  SeqBatch(int b, int t, int c, int h, int w);

  std::size_t frame_size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  double* frame(int b, int t) {
    return data.data() + (static_cast<std::size_t>(b) * time + t) * frame_size();
  }
  const double* frame(int b, int t) const {
    return data.data() + (static_cast<std::size_t>(b) * time + t) * frame_size();
  }
  Grid3 frame_grid(int b, int t) const;
};

bool all_finite(std::span<const double> values);
void require_finite(std::span<const double> values, const char* what);

// Same-size 2D cross-correlation with zero padding. Total padding per spatial
// axis is k-1, split floor((k-1)/2) before and the remainder after, so an even
// kernel pads only on the bottom/right side. out[o,i,j] =
// bias[o] + sum_{c,a,b} in[c, i+a-pad_top, j+b-pad_left] * kernel[o,c,a,b].
Grid3 conv2d_same(const Grid3& input, const ConvKernel& kernel,
                  std::span<const double> bias);

// Unchecked cores used by the network hot path. `out` must be preshaped to
// (kernel.out_channels, input.height, input.width).
void conv2d_same_accum(const Grid3& input, const ConvKernel& kernel,
                       Grid3& out);
// d(loss)/d(input) contribution of one convolution; accumulates into dinput.
void conv2d_same_backward_input(const ConvKernel& kernel, const Grid3& dout,
                                Grid3& dinput);
// d(loss)/d(kernel); accumulates into dkernel.
void conv2d_same_backward_kernel(const Grid3& input, const Grid3& dout,
                                 ConvKernel& dkernel);
// d(loss)/d(bias); accumulates into dbias (length out_channels).
void conv2d_same_backward_bias(const Grid3& dout, double* dbias);

Grid3 sigmoid(const Grid3& x);
Grid3 tanh_act(const Grid3& x);
Grid3 relu(const Grid3& x);
Grid3 hadamard(const Grid3& a, const Grid3& b);

}  // namespace gridcast
