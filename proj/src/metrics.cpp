#include "gridcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "gridcast/errors.hpp"

namespace gridcast {

namespace {

void check_pair(const std::vector<double>& a, const std::vector<double>& b,
                const char* what) {
  if (a.size() < 2)
    throw MetricError(std::string(what) + ": need at least two points");
  if (a.size() != b.size())
    throw MetricError(std::string(what) + ": series lengths differ (" +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double pearson_cc(const std::vector<double>& a, const std::vector<double>& b) {
  check_pair(a, b, "pearson_cc");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - ma;
    const double db = b[k] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0)
    throw MetricError("pearson_cc: first series is constant");
  if (vb == 0.0)
    throw MetricError("pearson_cc: second series is constant");
  // Cauchy-Schwarz: cov^2 <= va*vb in exact arithmetic, so crossing it is
  // rounding noise on a perfectly correlated pair. Pin those to +/-1 so
  // pred == obs comes out at exactly 1.
  if (cov * cov >= va * vb) return cov > 0.0 ? 1.0 : -1.0;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double nse(const std::vector<double>& observed,
           const std::vector<double>& predicted) {
  check_pair(observed, predicted, "nse");
  const double mo = mean_of(observed);
  double err = 0.0, var = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = observed[k] - predicted[k];
    const double d = observed[k] - mo;
    err += e * e;
    var += d * d;
  }
  if (var == 0.0)
    throw MetricError("nse: observed series is constant");
  return 1.0 - err / var;
}

double nrmse(const std::vector<double>& observed,
             const std::vector<double>& predicted) {
  check_pair(observed, predicted, "nrmse");
  const double mo = mean_of(observed);
  if (mo == 0.0)
    throw MetricError("nrmse: observed series has zero mean");
  double err = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = observed[k] - predicted[k];
    err += e * e;
  }
  return std::sqrt(err / static_cast<double>(observed.size())) / mo;
}

const char* phase_name(Phase p) {
  return p == Phase::Training ? "training" : "testing";
}

PairedSeries cell_series(const std::vector<Grid3>& observed,
                         const std::vector<Grid3>& predicted, int row,
                         int col) {
  if (observed.size() != predicted.size())
    throw ShapeError("cell_series: sample counts differ");
  PairedSeries out;
  out.observed.reserve(observed.size());
  out.predicted.reserve(observed.size());
  for (std::size_t s = 0; s < observed.size(); ++s) {
    if (observed[s].channels != 1 || !observed[s].same_shape(predicted[s]))
      throw ShapeError("cell_series: grid shape mismatch at sample " +
                       std::to_string(s));
    if (row < 0 || row >= observed[s].height || col < 0 ||
        col >= observed[s].width)
      throw ShapeError("cell_series: cell out of range");
    out.observed.push_back(observed[s].at(0, row, col));
    out.predicted.push_back(predicted[s].at(0, row, col));
  }
  out.grid = row * kGridCols + col + 1;
  return out;
}

MetricsReport per_grid_report(const std::vector<PairedSeries>& series) {
  std::set<int> leads = {6, 12};
  for (const PairedSeries& s : series) {
    if (s.grid < 1 || s.grid > kGridCells)
      throw ValueError("per_grid_report: grid id must be 1.." +
                       std::to_string(kGridCells));
    if (s.lead_hours < 0)
      throw ValueError("per_grid_report: negative lead");
    leads.insert(s.lead_hours);
  }

  MetricsReport report;
  for (int grid = 1; grid <= kGridCells; ++grid) {
    for (Phase phase : {Phase::Training, Phase::Testing}) {
      for (int lead : leads) {
        ReportSlot slot;
        slot.grid = grid;
        slot.phase = phase;
        slot.lead_hours = lead;
        const PairedSeries* found = nullptr;
        for (const PairedSeries& s : series) {
          if (s.grid != grid || s.phase != phase || s.lead_hours != lead)
            continue;
          if (found != nullptr)
            throw ValueError(
                "per_grid_report: duplicate series for grid " +
                std::to_string(grid) + " " + phase_name(phase) + " lead " +
                std::to_string(lead));
          found = &s;
        }
        if (found != nullptr) {
          slot.present = true;
          try {
            slot.cc = pearson_cc(found->observed, found->predicted);
          } catch (const MetricError&) {
          }
          try {
            slot.nse = nse(found->observed, found->predicted);
          } catch (const MetricError&) {
          }
          try {
            slot.nrmse = nrmse(found->observed, found->predicted);
          } catch (const MetricError&) {
          }
        }
        report.slots.push_back(std::move(slot));
      }
    }
  }
  return report;
}

CorrelationMatrix correlation_matrix(const GridSeriesDataset& ds,
                                     SeriesMode mode) {
  if (ds.hours < 2)
    throw MetricError("correlation_matrix: need at least two hours");

  // One centered series per variable.
  std::array<std::vector<double>, kNumVariables> series;
  for (int var = 0; var < kNumVariables; ++var) {
    std::vector<double>& s = series[var];
    if (mode == SeriesMode::SpatialMean) {
      s.reserve(static_cast<std::size_t>(ds.hours));
      for (std::int64_t h = 0; h < ds.hours; ++h) {
        double sum = 0.0;
        for (int r = 0; r < kGridRows; ++r)
          for (int c = 0; c < kGridCols; ++c) sum += ds.at(h, var, r, c);
        s.push_back(sum / kGridCells);
      }
    } else {
      s.reserve(static_cast<std::size_t>(ds.hours) * kGridCells);
      for (std::int64_t h = 0; h < ds.hours; ++h)
        for (int r = 0; r < kGridRows; ++r)
          for (int c = 0; c < kGridCols; ++c) s.push_back(ds.at(h, var, r, c));
    }
    const double m = mean_of(s);
    for (double& x : s) x -= m;
  }

  std::array<double, kNumVariables> norm{};
  for (int var = 0; var < kNumVariables; ++var) {
    double sq = 0.0;
    for (double x : series[var]) sq += x * x;
    norm[var] = std::sqrt(sq);
  }

  CorrelationMatrix out;
  out.mode = mode;
  out.r.fill(std::numeric_limits<double>::quiet_NaN());
  out.defined.fill(false);
  for (int i = 0; i < kNumVariables; ++i) {
    for (int j = i; j < kNumVariables; ++j) {
      if (norm[i] == 0.0 || norm[j] == 0.0) continue;
      double value;
      if (i == j) {
        value = 1.0;
      } else {
        double dot = 0.0;
        for (std::size_t k = 0; k < series[i].size(); ++k)
          dot += series[i][k] * series[j][k];
        value = std::clamp(dot / (norm[i] * norm[j]), -1.0, 1.0);
      }
      out.r[i * kNumVariables + j] = value;
      out.r[j * kNumVariables + i] = value;
      out.defined[i * kNumVariables + j] = true;
      out.defined[j * kNumVariables + i] = true;
    }
  }
  return out;
}

}  // namespace gridcast
