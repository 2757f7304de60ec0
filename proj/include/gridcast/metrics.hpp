#pragma once

#include <array>
#include <optional>
#include <vector>

#include "gridcast/datapipe.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

// All three throw MetricError when the statistic is undefined (constant
// series for cc and nse, zero-mean observations for nrmse) instead of
// returning a silent placeholder. Series need at least two points.
double pearson_cc(const std::vector<double>& a, const std::vector<double>& b);
double nse(const std::vector<double>& observed,
           const std::vector<double>& predicted);
double nrmse(const std::vector<double>& observed,
             const std::vector<double>& predicted);

enum class Phase { Training, Testing };
const char* phase_name(Phase p);

// One labeled observed/predicted series: the rainfall at one grid cell over
// one run phase at one lead time, in mm.
struct PairedSeries {
  std::vector<double> observed;
  std::vector<double> predicted;
  int grid = 1;  // 1..4, row-major over the 2x2 grid
  Phase phase = Phase::Testing;
  int lead_hours = 6;
};

// The per-cell series of a prediction run; grid label derives from (row,
// col), phase and lead are the caller's to set.
PairedSeries cell_series(const std::vector<Grid3>& observed,
                         const std::vector<Grid3>& predicted, int row,
                         int col);

// One (grid, phase, lead) cell of the skill table. `present` distinguishes a
// combination that was never supplied from one whose statistics are
// undefined; absent slots carry no numbers at all.
struct ReportSlot {
  int grid = 1;
  Phase phase = Phase::Training;
  int lead_hours = 6;
  bool present = false;
  std::optional<double> cc;
  std::optional<double> nse;
  std::optional<double> nrmse;
};

struct MetricsReport {
  std::vector<ReportSlot> slots;  // grid-major, then phase, then lead
};

// Builds the full skill table over grids 1..4, both phases, and leads 6 and
// 12 hours (plus any other lead present in the input). Combinations without
// a series are marked absent, never zero-filled.
MetricsReport per_grid_report(const std::vector<PairedSeries>& series);

// How a variable is reduced to one series for the correlation matrix.
enum class SeriesMode {
  SpatialMean,  // mean over the four cells per hour (default)
  PooledCells,  // every (hour, cell) pair as its own observation
};

struct CorrelationMatrix {
  SeriesMode mode = SeriesMode::SpatialMean;
  std::array<double, kNumVariables * kNumVariables> r{};
  std::array<bool, kNumVariables * kNumVariables> defined{};

  double at(int i, int j) const { return r[i * kNumVariables + j]; }
  bool is_defined(int i, int j) const {
    return defined[i * kNumVariables + j];
  }
};

// Pairwise Pearson correlation between all twelve variables. Symmetric, unit
// diagonal; pairs involving a constant series are marked undefined.
CorrelationMatrix correlation_matrix(const GridSeriesDataset& ds,
                                     SeriesMode mode = SeriesMode::SpatialMean);

}  // namespace gridcast
