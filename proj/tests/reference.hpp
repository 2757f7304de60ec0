// Naive reference implementations used as correctness oracles. Each one is
// written from the definitions with plain loops and raw indexing, sharing no
// math helpers with the library, so agreement is evidence rather than
// tautology. Test-only code; clarity over speed.
#pragma once

#include <cstdint>
#include <vector>

#include "gridcast/convlstm.hpp"
#include "gridcast/tensor.hpp"

namespace testref {

// Same-size cross-correlation with zero padding, trailing-side for even
// kernels: quadruple loop straight from the definition.
gridcast::Grid3 conv2d_same(const gridcast::Grid3& input,
                            const gridcast::ConvKernel& kernel,
                            const std::vector<double>& bias);

// One gate-by-gate cell update, every term spelled out per equation.
gridcast::CellState cell_step(const gridcast::CellParams& p,
                              const gridcast::Grid3& x,
                              const gridcast::CellState& prev,
                              gridcast::Activation g, bool use_peepholes);

double pearson(const std::vector<double>& a, const std::vector<double>& b);
double nse(const std::vector<double>& obs, const std::vector<double>& pred);
double nrmse(const std::vector<double>& obs, const std::vector<double>& pred);

// Counts valid window anchors by trying every hour.
std::int64_t window_count(std::int64_t hours, int input_length, int lead);

}  // namespace testref
