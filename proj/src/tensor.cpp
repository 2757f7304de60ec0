#include "gridcast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridcast {

namespace {

void check_positive_dims(int a, int b, int c, const char* what) {
  if (a <= 0 || b <= 0 || c <= 0) {
    throw ShapeError(std::string(what) + ": dimensions must be positive");
  }
}

}  // namespace

Grid3::Grid3(int c, int h, int w) : channels(c), height(h), width(w) {
  check_positive_dims(c, h, w, "Grid3");
  data.assign(static_cast<std::size_t>(c) * h * w, 0.0);
}

Grid3::Grid3(int c, int h, int w, std::vector<double> values)
    : channels(c), height(h), width(w), data(std::move(values)) {
  check_positive_dims(c, h, w, "Grid3");
  if (data.size() != static_cast<std::size_t>(c) * h * w) {
    throw ShapeError("Grid3: data length " + std::to_string(data.size()) +
                     " does not match " + std::to_string(c) + "x" +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  require_finite(data, "Grid3");
}

void Grid3::fill(double v) { std::fill(data.begin(), data.end(), v); }

ConvKernel::ConvKernel(int out_c, int in_c, int kh_, int kw_)
    : out_channels(out_c), in_channels(in_c), kh(kh_), kw(kw_) {
  if (out_c <= 0 || in_c <= 0 || kh_ <= 0 || kw_ <= 0) {
    throw ShapeError("ConvKernel: dimensions must be positive");
  }
  data.assign(static_cast<std::size_t>(out_c) * in_c * kh_ * kw_, 0.0);
}

ConvKernel::ConvKernel(int out_c, int in_c, int kh_, int kw_,
                       std::vector<double> values)
    : ConvKernel(out_c, in_c, kh_, kw_) {
  if (values.size() != data.size()) {
    throw ShapeError("ConvKernel: data length " +
                     std::to_string(values.size()) + " does not match shape");
  }
  require_finite(values, "ConvKernel");
  data = std::move(values);
}

SeqBatch::SeqBatch(int b, int t, int c, int h, int w)
    : batch(b), time(t), channels(c), height(h), width(w) {
  if (b <= 0 || t <= 0 || c <= 0 || h <= 0 || w <= 0) {
    throw ShapeError("SeqBatch: dimensions must be positive");
  }
  data.assign(static_cast<std::size_t>(b) * t * c * h * w, 0.0);
}

Grid3 SeqBatch::frame_grid(int b, int t) const {
  const double* p = frame(b, t);
  return Grid3(channels, height, width,
               std::vector<double>(p, p + frame_size()));
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_finite(std::span<const double> values, const char* what) {
  if (!all_finite(values)) {
    throw ValueError(std::string(what) + ": non-finite value");
  }
}

Grid3 conv2d_same(const Grid3& input, const ConvKernel& kernel,
                  std::span<const double> bias) {
  if (kernel.in_channels != input.channels) {
    throw ShapeError("conv2d_same: kernel expects " +
                     std::to_string(kernel.in_channels) +
                     " input channels, got " + std::to_string(input.channels));
  }
  if (static_cast<int>(bias.size()) != kernel.out_channels) {
    throw ShapeError("conv2d_same: bias length " +
                     std::to_string(bias.size()) + " != out_channels " +
                     std::to_string(kernel.out_channels));
  }
  require_finite(input.data, "conv2d_same input");
  require_finite(kernel.data, "conv2d_same kernel");
  require_finite(bias, "conv2d_same bias");

  Grid3 out(kernel.out_channels, input.height, input.width);
  for (int o = 0; o < out.channels; ++o) {
    double b = bias[o];
    for (int i = 0; i < out.height; ++i) {
      for (int j = 0; j < out.width; ++j) {
        out.at(o, i, j) = b;
      }
    }
  }
  conv2d_same_accum(input, kernel, out);
  return out;
}

void conv2d_same_accum(const Grid3& input, const ConvKernel& kernel,
                       Grid3& out) {
  const int h = input.height;
  const int w = input.width;
  const int pad_top = (kernel.kh - 1) / 2;
  const int pad_left = (kernel.kw - 1) / 2;

  for (int o = 0; o < kernel.out_channels; ++o) {
    for (int c = 0; c < input.channels; ++c) {
      for (int a = 0; a < kernel.kh; ++a) {
        const int di = a - pad_top;
        const int i_lo = std::max(0, -di);
        const int i_hi = std::min(h, h - di);
        for (int b = 0; b < kernel.kw; ++b) {
          const double kv = kernel.at(o, c, a, b);
          if (kv == 0.0) continue;
          const int dj = b - pad_left;
          const int j_lo = std::max(0, -dj);
          const int j_hi = std::min(w, w - dj);
          for (int i = i_lo; i < i_hi; ++i) {
            for (int j = j_lo; j < j_hi; ++j) {
              out.at(o, i, j) += input.at(c, i + di, j + dj) * kv;
            }
          }
        }
      }
    }
  }
}

void conv2d_same_backward_input(const ConvKernel& kernel, const Grid3& dout,
                                Grid3& dinput) {
  const int h = dinput.height;
  const int w = dinput.width;
  const int pad_top = (kernel.kh - 1) / 2;
  const int pad_left = (kernel.kw - 1) / 2;

  // dinput[c, i+di, j+dj] += dout[o, i, j] * kernel[o,c,a,b]; re-indexed so
  // the write side iterates over valid dout positions.
  for (int o = 0; o < kernel.out_channels; ++o) {
    for (int c = 0; c < kernel.in_channels; ++c) {
      for (int a = 0; a < kernel.kh; ++a) {
        const int di = a - pad_top;
        const int i_lo = std::max(0, -di);
        const int i_hi = std::min(h, h - di);
        for (int b = 0; b < kernel.kw; ++b) {
          const double kv = kernel.at(o, c, a, b);
          if (kv == 0.0) continue;
          const int dj = b - pad_left;
          const int j_lo = std::max(0, -dj);
          const int j_hi = std::min(w, w - dj);
          for (int i = i_lo; i < i_hi; ++i) {
            for (int j = j_lo; j < j_hi; ++j) {
              dinput.at(c, i + di, j + dj) += dout.at(o, i, j) * kv;
            }
          }
        }
      }
    }
  }
}

void conv2d_same_backward_kernel(const Grid3& input, const Grid3& dout,
                                 ConvKernel& dkernel) {
  const int h = input.height;
  const int w = input.width;
  const int pad_top = (dkernel.kh - 1) / 2;
  const int pad_left = (dkernel.kw - 1) / 2;

  for (int o = 0; o < dkernel.out_channels; ++o) {
    for (int c = 0; c < dkernel.in_channels; ++c) {
      for (int a = 0; a < dkernel.kh; ++a) {
        const int di = a - pad_top;
        const int i_lo = std::max(0, -di);
        const int i_hi = std::min(h, h - di);
        for (int b = 0; b < dkernel.kw; ++b) {
          const int dj = b - pad_left;
          const int j_lo = std::max(0, -dj);
          const int j_hi = std::min(w, w - dj);
          double acc = 0.0;
          for (int i = i_lo; i < i_hi; ++i) {
            for (int j = j_lo; j < j_hi; ++j) {
              acc += dout.at(o, i, j) * input.at(c, i + di, j + dj);
            }
          }
          dkernel.at(o, c, a, b) += acc;
        }
      }
    }
  }
}

void conv2d_same_backward_bias(const Grid3& dout, double* dbias) {
  const std::size_t plane = static_cast<std::size_t>(dout.height) * dout.width;
  for (int o = 0; o < dout.channels; ++o) {
    double acc = 0.0;
    const double* p = dout.data.data() + o * plane;
    for (std::size_t k = 0; k < plane; ++k) acc += p[k];
    dbias[o] += acc;
  }
}

namespace {

template <class Fn>
Grid3 elementwise(const Grid3& x, const char* name, Fn&& fn) {
  require_finite(x.data, name);
  Grid3 out(x.channels, x.height, x.width);
  for (std::size_t k = 0; k < x.data.size(); ++k) out.data[k] = fn(x.data[k]);
  return out;
}

}  // namespace

Grid3 sigmoid(const Grid3& x) {
  return elementwise(x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Grid3 tanh_act(const Grid3& x) {
  return elementwise(x, "tanh_act", [](double v) { return std::tanh(v); });
}

Grid3 relu(const Grid3& x) {
  return elementwise(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; });
}

Grid3 hadamard(const Grid3& a, const Grid3& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("hadamard: shape mismatch");
  }
  Grid3 out(a.channels, a.height, a.width);
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    out.data[k] = a.data[k] * b.data[k];
  }
  return out;
}

}  // namespace gridcast
