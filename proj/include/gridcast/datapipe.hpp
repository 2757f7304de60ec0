#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridcast/tensor.hpp"
#include "gridcast/timeutil.hpp"

namespace gridcast {

inline constexpr int kNumVariables = 12;
inline constexpr int kNumPredictors = 11;  // tp is target-only
inline constexpr int kTpIndex = 11;
inline constexpr int kGridRows = 2;
inline constexpr int kGridCols = 2;
inline constexpr int kGridCells = kGridRows * kGridCols;

// Variable codes in storage order; tp last.
const std::array<std::string, kNumVariables>& variable_codes();
const std::array<std::string, kNumVariables>& variable_units();
int variable_index(const std::string& code);  // -1 when unknown

// Hourly multi-variable series on the 2x2 grid. Hours are contiguous from
// start_hour; every (hour, variable, cell) slot is populated and finite.
struct GridSeriesDataset {
  EpochHour start_hour = 0;
  std::int64_t hours = 0;
  // indexed (hour, variable, row, col), row-major
  std::vector<double> values;

  double at(std::int64_t hour, int var, int row, int col) const {
    return values[((static_cast<std::size_t>(hour) * kNumVariables + var) *
                   kGridRows + row) * kGridCols + col];
  }
  double& at(std::int64_t hour, int var, int row, int col) {
    return values[((static_cast<std::size_t>(hour) * kNumVariables + var) *
                   kGridRows + row) * kGridCols + col];
  }
};

// Long-format CSV, header `timestamp_utc,row,col,variable,value`, one row per
// (hour, cell, variable). Rejects gaps, duplicates, unknown codes and
// non-finite values, citing the offending row.
GridSeriesDataset load_csv(const std::string& path);
void save_csv(const GridSeriesDataset& ds, const std::string& path);

struct NormalizationStats {
  struct Entry {
    double min = 0.0;
    double max = 0.0;
    bool degenerate = false;
  };
  std::array<Entry, kNumVariables> vars;
};

// Per-variable min/max over hour offsets [span_begin, span_end) of the
// dataset, across all four cells.
NormalizationStats fit_normalization(const GridSeriesDataset& ds,
                                     std::int64_t span_begin,
                                     std::int64_t span_end);
// (x - min) / (max - min); a degenerate variable maps to 0.
GridSeriesDataset apply_normalization(const GridSeriesDataset& ds,
                                      const NormalizationStats& stats);
double normalize_value(double v, const NormalizationStats& stats, int var);
double invert_value(double v, const NormalizationStats& stats, int var);

// Text stats file, one `code,min,max,degenerate` line per variable.
void save_stats(const NormalizationStats& stats, const std::string& path);
NormalizationStats load_stats(const std::string& path);

struct WindowSpec {
  int input_length = 24;  // L, hours of predictors per sample
  int lead = 6;           // forecast gap in hours
};

// One training pair: predictors over hours (anchor-L+1 .. anchor), target tp
// at hour anchor+lead. Samples are views; values live in the dataset.
struct WindowedSample {
  std::int64_t anchor = 0;
};

// One sample per anchor in [L-1, hours-1-lead]; count = hours - (L-1) - lead.
std::vector<WindowedSample> make_windows(const GridSeriesDataset& ds,
                                         const WindowSpec& spec);

struct SplitResult {
  std::vector<WindowedSample> train;
  std::vector<WindowedSample> validation;
  std::vector<WindowedSample> test;
};

// Chronological: first 85% (floor) trains; of the remainder, the first 15%
// (floor) validates; the rest tests.
SplitResult split(const std::vector<WindowedSample>& samples);

// A split bound to its (normalized) dataset, ready for batch assembly.
struct WindowSet {
  const GridSeriesDataset* data = nullptr;
  WindowSpec spec;
  std::vector<WindowedSample> samples;

  std::size_t size() const { return samples.size(); }

  // Gathers the given sample indices into a dense batch. x is
  // (n, L, 11, 2, 2); y holds one (1, 2, 2) tp grid per sample.
  void assemble(std::span<const std::size_t> indices, SeqBatch& x,
                std::vector<Grid3>& y) const;
};

// Hour offsets [0, end) that training windows touch, targets included; the
// span normalization stats must be fitted on to avoid test leakage.
std::int64_t train_span_end(const WindowSpec& spec, std::size_t train_count);

}  // namespace gridcast
