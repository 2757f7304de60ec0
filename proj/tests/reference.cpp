#include "reference.hpp"

#include <cmath>
#include <cstddef>

namespace testref {

namespace {

double sigmoid_scalar(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double activate_scalar(gridcast::Activation g, double v) {
  if (g == gridcast::Activation::Tanh) return std::tanh(v);
  return v > 0.0 ? v : 0.0;
}

}  // namespace

gridcast::Grid3 conv2d_same(const gridcast::Grid3& input,
                            const gridcast::ConvKernel& kernel,
                            const std::vector<double>& bias) {
  const int ic = input.channels;
  const int h = input.height;
  const int w = input.width;
  const int oc = kernel.out_channels;
  const int kh = kernel.kh;
  const int kw = kernel.kw;
  const int pad_top = (kh - 1) / 2;
  const int pad_left = (kw - 1) / 2;
  const double* in = input.data.data();
  const double* ker = kernel.data.data();

  gridcast::Grid3 out(oc, h, w);
  for (int o = 0; o < oc; ++o) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double acc = bias[static_cast<std::size_t>(o)];
        for (int c = 0; c < ic; ++c) {
          for (int a = 0; a < kh; ++a) {
            for (int b = 0; b < kw; ++b) {
              const int ii = i + a - pad_top;
              const int jj = j + b - pad_left;
              if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
              acc += in[(static_cast<std::size_t>(c) * h + ii) * w + jj] *
                     ker[((static_cast<std::size_t>(o) * ic + c) * kh + a) *
                             kw +
                         b];
            }
          }
        }
        out.data[(static_cast<std::size_t>(o) * h + i) * w + j] = acc;
      }
    }
  }
  return out;
}

gridcast::CellState cell_step(const gridcast::CellParams& p,
                              const gridcast::Grid3& x,
                              const gridcast::CellState& prev,
                              gridcast::Activation g, bool use_peepholes) {
  const int f = p.filters;
  const int h = p.grid_h;
  const int w = p.grid_w;
  const std::size_t cells = static_cast<std::size_t>(f) * h * w;
  const std::vector<double> no_bias(static_cast<std::size_t>(f), 0.0);

  // preactivation of one gate: conv(x) + conv(H) [+ W_c . C] + b
  auto preact = [&](const gridcast::ConvKernel& wx,
                    const gridcast::ConvKernel& wh, const gridcast::Grid3& wc,
                    const std::vector<double>& b,
                    const gridcast::Grid3& c_state) {
    gridcast::Grid3 zx = conv2d_same(x, wx, no_bias);
    gridcast::Grid3 zh = conv2d_same(prev.h, wh, no_bias);
    std::vector<double> z(cells);
    for (std::size_t k = 0; k < cells; ++k) {
      z[k] = zx.data[k] + zh.data[k] + b[k / (static_cast<std::size_t>(h) * w)];
      if (use_peepholes) z[k] += wc.data[k] * c_state.data[k];
    }
    return z;
  };

  const std::vector<double> a_i = preact(p.w_xi, p.w_hi, p.w_ci, p.b_i, prev.c);
  const std::vector<double> a_f = preact(p.w_xf, p.w_hf, p.w_cf, p.b_f, prev.c);

  // candidate has no peephole term
  gridcast::Grid3 zxc = conv2d_same(x, p.w_xc, no_bias);
  gridcast::Grid3 zhc = conv2d_same(prev.h, p.w_hc, no_bias);

  gridcast::CellState next;
  next.c = gridcast::Grid3(f, h, w);
  next.h = gridcast::Grid3(f, h, w);
  for (std::size_t k = 0; k < cells; ++k) {
    const double gate_i = sigmoid_scalar(a_i[k]);
    const double gate_f = sigmoid_scalar(a_f[k]);
    const double cand =
        activate_scalar(g, zxc.data[k] + zhc.data[k] +
                               p.b_c[k / (static_cast<std::size_t>(h) * w)]);
    next.c.data[k] = gate_f * prev.c.data[k] + gate_i * cand;
  }

  // output gate peeps at the *updated* cell state
  const std::vector<double> a_o = preact(p.w_xo, p.w_ho, p.w_co, p.b_o, next.c);
  for (std::size_t k = 0; k < cells; ++k) {
    const double gate_o = sigmoid_scalar(a_o[k]);
    next.h.data[k] = gate_o * activate_scalar(g, next.c.data[k]);
  }
  return next;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < n; ++k) ma += a[k];
  for (std::size_t k = 0; k < n; ++k) mb += b[k];
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0;
  for (std::size_t k = 0; k < n; ++k) cov += (a[k] - ma) * (b[k] - mb);
  double va = 0.0;
  for (std::size_t k = 0; k < n; ++k) va += (a[k] - ma) * (a[k] - ma);
  double vb = 0.0;
  for (std::size_t k = 0; k < n; ++k) vb += (b[k] - mb) * (b[k] - mb);
  return cov / (std::sqrt(va) * std::sqrt(vb));
}

double nse(const std::vector<double>& obs, const std::vector<double>& pred) {
  const std::size_t n = obs.size();
  double mo = 0.0;
  for (std::size_t k = 0; k < n; ++k) mo += obs[k];
  mo /= static_cast<double>(n);
  double err = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    err += (obs[k] - pred[k]) * (obs[k] - pred[k]);
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) var += (obs[k] - mo) * (obs[k] - mo);
  return 1.0 - err / var;
}

double nrmse(const std::vector<double>& obs, const std::vector<double>& pred) {
  const std::size_t n = obs.size();
  double mo = 0.0;
  for (std::size_t k = 0; k < n; ++k) mo += obs[k];
  mo /= static_cast<double>(n);
  double err = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    err += (obs[k] - pred[k]) * (obs[k] - pred[k]);
  return std::sqrt(err / static_cast<double>(n)) / mo;
}

std::int64_t window_count(std::int64_t hours, int input_length, int lead) {
  std::int64_t count = 0;
  for (std::int64_t t = 0; t < hours; ++t) {
    const std::int64_t first_input = t - (input_length - 1);
    const std::int64_t target = t + lead;
    if (first_input >= 0 && target <= hours - 1) ++count;
  }
  return count;
}

}  // namespace testref
