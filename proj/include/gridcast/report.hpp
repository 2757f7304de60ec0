#pragma once

#include <string>
#include <vector>

#include "gridcast/metrics.hpp"
#include "gridcast/tensor.hpp"
#include "gridcast/timeutil.hpp"

namespace gridcast {

// Aligned plain-text skill table: one section per lead, one row per
// (phase, metric), one column per grid. Absent slots print "-", present but
// undefined statistics print "n/a".
std::string format_metrics_table(const MetricsReport& report);

// The same table as a JSON document with keys grid/phase/lead/cc/nse/nrmse.
std::string metrics_report_json(const MetricsReport& report);

// Correlation matrix renderings: aligned text, JSON, and a self-contained
// SVG heatmap.
std::string format_correlation_matrix(const CorrelationMatrix& m);
std::string correlation_matrix_json(const CorrelationMatrix& m);
std::string correlation_heatmap_svg(const CorrelationMatrix& m);

// Observed vs predicted line chart over sample index; self-contained SVG.
std::string line_chart_svg(const std::string& title,
                           const std::vector<double>& observed,
                           const std::vector<double>& predicted);

// Observed vs predicted scatter with the identity line and the sample
// correlation annotated as R.
std::string scatter_svg(const std::string& title,
                        const std::vector<double>& observed,
                        const std::vector<double>& predicted);

// Prediction rows for one run: sample s covers the four cells of the target
// hour target_hours[s], all in physical mm.
void save_predictions_csv(const std::vector<EpochHour>& target_hours,
                          const std::vector<Grid3>& observed,
                          const std::vector<Grid3>& predicted,
                          const std::string& path);

struct PredictionsFile {
  std::vector<EpochHour> target_hours;  // one per sample
  std::vector<Grid3> observed;          // (1, 2, 2) per sample
  std::vector<Grid3> predicted;
};

// Reads the CSV written by save_predictions_csv. Expects complete 2x2 grids
// per timestamp.
PredictionsFile load_predictions_csv(const std::string& path);

// Per-grid series CSV backing one plot: timestamp, observed, predicted.
void save_grid_series_csv(const std::vector<EpochHour>& target_hours,
                          const std::vector<double>& observed,
                          const std::vector<double>& predicted,
                          const std::string& path);

}  // namespace gridcast
