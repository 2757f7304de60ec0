#include "gridcast/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <set>

#include "gridcast/datapipe.hpp"
#include "gridcast/errors.hpp"
#include "json.hpp"

namespace gridcast {

namespace {

using nlohmann::json;

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return std::string(buf);
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

const ReportSlot* find_slot(const MetricsReport& report, int grid, Phase phase,
                            int lead) {
  for (const ReportSlot& s : report.slots)
    if (s.grid == grid && s.phase == phase && s.lead_hours == lead) return &s;
  return nullptr;
}

std::string metric_text(const ReportSlot* slot,
                        const std::optional<double> ReportSlot::* member) {
  if (slot == nullptr || !slot->present) return "-";
  const std::optional<double>& v = slot->*member;
  return v.has_value() ? fmt("%.4f", *v) : "n/a";
}

json optional_json(const std::optional<double>& v) {
  return v.has_value() ? json(*v) : json(nullptr);
}

// white -> red for positive, white -> blue for negative correlations
std::string heat_color(double v) {
  const double a = std::clamp(std::abs(v), 0.0, 1.0);
  double r = 1.0, g = 1.0, b = 1.0;
  if (v >= 0.0) {
    r = 1.0 + a * (0.70 - 1.0);
    g = 1.0 + a * (0.09 - 1.0);
    b = 1.0 + a * (0.17 - 1.0);
  } else {
    r = 1.0 + a * (0.13 - 1.0);
    g = 1.0 + a * (0.40 - 1.0);
    b = 1.0 + a * (0.67 - 1.0);
  }
  return fmt("#%02x%02x%02x", static_cast<int>(std::lround(r * 255.0)),
             static_cast<int>(std::lround(g * 255.0)),
             static_cast<int>(std::lround(b * 255.0)));
}

void value_range(const std::vector<double>& a, const std::vector<double>& b,
                 double& lo, double& hi) {
  lo = a.front();
  hi = a.front();
  for (const std::vector<double>* s : {&a, &b}) {
    for (double v : *s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) hi = lo + 1.0;
}

void check_series(const std::vector<double>& observed,
                  const std::vector<double>& predicted, const char* what) {
  if (observed.empty() || observed.size() != predicted.size())
    throw ValueError(std::string(what) + ": need equal-length nonempty series");
  require_finite(observed, what);
  require_finite(predicted, what);
}

}  // namespace

std::string format_metrics_table(const MetricsReport& report) {
  std::set<int> leads;
  for (const ReportSlot& s : report.slots) leads.insert(s.lead_hours);

  std::string out;
  out += "forecast skill by grid cell\n";
  out += "===========================\n";
  for (int lead : leads) {
    out += fmt("\nlead %d hours\n", lead);
    out += "  " + pad("phase", 11) + pad("metric", 9);
    for (int grid = 1; grid <= kGridCells; ++grid)
      out += pad(fmt("grid %d", grid), 10);
    out += "\n";
    for (Phase phase : {Phase::Training, Phase::Testing}) {
      struct Row {
        const char* label;
        const std::optional<double> ReportSlot::* member;
      };
      const Row rows[] = {{"CC", &ReportSlot::cc},
                          {"NSE", &ReportSlot::nse},
                          {"NRMSE", &ReportSlot::nrmse}};
      for (const Row& row : rows) {
        out += "  " + pad(phase_name(phase), 11) + pad(row.label, 9);
        for (int grid = 1; grid <= kGridCells; ++grid) {
          const ReportSlot* slot = find_slot(report, grid, phase, lead);
          out += pad(metric_text(slot, row.member), 10);
        }
        out += "\n";
      }
    }
  }
  return out;
}

std::string metrics_report_json(const MetricsReport& report) {
  json slots = json::array();
  for (const ReportSlot& s : report.slots) {
    json slot;
    slot["grid"] = s.grid;
    slot["phase"] = phase_name(s.phase);
    slot["lead"] = s.lead_hours;
    slot["present"] = s.present;
    slot["cc"] = optional_json(s.cc);
    slot["nse"] = optional_json(s.nse);
    slot["nrmse"] = optional_json(s.nrmse);
    slots.push_back(std::move(slot));
  }
  json doc;
  doc["slots"] = std::move(slots);
  return doc.dump(2) + "\n";
}

std::string format_correlation_matrix(const CorrelationMatrix& m) {
  const auto& codes = variable_codes();
  std::string out;
  out += "predictor correlation matrix (";
  out += m.mode == SeriesMode::SpatialMean ? "spatial mean" : "pooled cells";
  out += ")\n";
  out += pad("", 7);
  for (int j = 0; j < kNumVariables; ++j) out += pad(codes[j], 7);
  out += "\n";
  for (int i = 0; i < kNumVariables; ++i) {
    out += pad(codes[i], 7);
    for (int j = 0; j < kNumVariables; ++j) {
      out += m.is_defined(i, j) ? pad(fmt("%+.2f", m.at(i, j)), 7)
                                : pad("n/a", 7);
    }
    out += "\n";
  }
  return out;
}

std::string correlation_matrix_json(const CorrelationMatrix& m) {
  json vars = json::array();
  for (const std::string& code : variable_codes()) vars.push_back(code);
  json matrix = json::array();
  for (int i = 0; i < kNumVariables; ++i) {
    json row = json::array();
    for (int j = 0; j < kNumVariables; ++j) {
      row.push_back(m.is_defined(i, j) ? json(m.at(i, j)) : json(nullptr));
    }
    matrix.push_back(std::move(row));
  }
  json doc;
  doc["mode"] =
      m.mode == SeriesMode::SpatialMean ? "spatial-mean" : "pooled-cells";
  doc["variables"] = std::move(vars);
  doc["matrix"] = std::move(matrix);
  return doc.dump(2) + "\n";
}

std::string correlation_heatmap_svg(const CorrelationMatrix& m) {
  const int cell = 38;
  const int left = 64;
  const int top = 64;
  const int width = left + kNumVariables * cell + 12;
  const int height = top + kNumVariables * cell + 12;
  const auto& codes = variable_codes();

  std::string svg;
  svg += fmt(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "viewBox=\"0 0 %d %d\">\n",
      width, height, width, height);
  svg += fmt("<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width,
             height);
  svg += "<g font-family=\"DejaVu Sans Mono, monospace\" font-size=\"11\" "
         "fill=\"#222\">\n";
  svg += fmt("<text x=\"%d\" y=\"20\" font-size=\"14\">predictor correlation "
             "matrix</text>\n",
             left);
  for (int j = 0; j < kNumVariables; ++j) {
    svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"end\" "
               "transform=\"rotate(-45 %d %d)\">%s</text>\n",
               left + j * cell + cell / 2, top - 8, left + j * cell + cell / 2,
               top - 8, codes[j].c_str());
  }
  for (int i = 0; i < kNumVariables; ++i) {
    svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%s</text>\n",
               left - 6, top + i * cell + cell / 2 + 4, codes[i].c_str());
    for (int j = 0; j < kNumVariables; ++j) {
      const int x = left + j * cell;
      const int y = top + i * cell;
      if (m.is_defined(i, j)) {
        svg += fmt("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                   "fill=\"%s\" stroke=\"#ddd\"/>\n",
                   x, y, cell, cell, heat_color(m.at(i, j)).c_str());
        const bool dark = std::abs(m.at(i, j)) > 0.55;
        svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" "
                   "font-size=\"10\" fill=\"%s\">%+.2f</text>\n",
                   x + cell / 2, y + cell / 2 + 4, dark ? "white" : "#222",
                   m.at(i, j));
      } else {
        svg += fmt("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                   "fill=\"#bbb\" stroke=\"#ddd\"/>\n",
                   x, y, cell, cell);
        svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" "
                   "font-size=\"10\">n/a</text>\n",
                   x + cell / 2, y + cell / 2 + 4);
      }
    }
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string line_chart_svg(const std::string& title,
                           const std::vector<double>& observed,
                           const std::vector<double>& predicted) {
  check_series(observed, predicted, "line_chart_svg");
  const int width = 860, height = 320;
  const int ml = 64, mr = 16, mt = 30, mb = 34;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;
  double lo, hi;
  value_range(observed, predicted, lo, hi);
  const std::size_t n = observed.size();

  auto sx = [&](std::size_t i) {
    return n == 1 ? ml + pw / 2.0
                  : ml + pw * static_cast<double>(i) /
                             static_cast<double>(n - 1);
  };
  auto sy = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

  auto polyline = [&](const std::vector<double>& s, const char* color) {
    std::string p = fmt("<polyline fill=\"none\" stroke=\"%s\" "
                        "stroke-width=\"1.2\" points=\"",
                        color);
    for (std::size_t i = 0; i < n; ++i)
      p += fmt("%.2f,%.2f ", sx(i), sy(s[i]));
    p += "\"/>\n";
    return p;
  };

  std::string svg;
  svg += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
             "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
             width, height, width, height);
  svg += fmt("<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width,
             height);
  svg += "<g font-family=\"DejaVu Sans Mono, monospace\" font-size=\"12\" "
         "fill=\"#222\">\n";
  svg += fmt("<text x=\"%d\" y=\"18\" font-size=\"13\">%s</text>\n", ml,
             title.c_str());
  svg += fmt("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
             "stroke=\"#333\"/>\n",
             ml, mt, ml, height - mb);
  svg += fmt("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
             "stroke=\"#333\"/>\n",
             ml, height - mb, width - mr, height - mb);
  svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%.4g</text>\n",
             ml - 6, mt + 10, hi);
  svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%.4g</text>\n",
             ml - 6, height - mb, lo);
  svg += fmt("<text x=\"%d\" y=\"%d\">1</text>\n", ml, height - mb + 16);
  svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%zu</text>\n",
             width - mr, height - mb + 16, n);
  svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">sample</text>\n",
             ml + static_cast<int>(pw) / 2, height - mb + 28);
  svg += polyline(observed, "#1f77b4");
  svg += polyline(predicted, "#d62728");
  svg += fmt("<line x1=\"%d\" y1=\"12\" x2=\"%d\" y2=\"12\" "
             "stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
             width - 250, width - 230);
  svg += fmt("<text x=\"%d\" y=\"16\">observed</text>\n", width - 224);
  svg += fmt("<line x1=\"%d\" y1=\"12\" x2=\"%d\" y2=\"12\" "
             "stroke=\"#d62728\" stroke-width=\"2\"/>\n",
             width - 130, width - 110);
  svg += fmt("<text x=\"%d\" y=\"16\">predicted</text>\n", width - 104);
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string scatter_svg(const std::string& title,
                        const std::vector<double>& observed,
                        const std::vector<double>& predicted) {
  check_series(observed, predicted, "scatter_svg");
  const int width = 420, height = 420;
  const int ml = 56, mr = 16, mt = 30, mb = 44;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;
  double lo, hi;
  value_range(observed, predicted, lo, hi);

  auto sx = [&](double v) { return ml + pw * (v - lo) / (hi - lo); };
  auto sy = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::string r_text = "R = n/a";
  try {
    r_text = fmt("R = %.4f", pearson_cc(observed, predicted));
  } catch (const MetricError&) {
  }

  std::string svg;
  svg += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
             "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
             width, height, width, height);
  svg += fmt("<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width,
             height);
  svg += "<g font-family=\"DejaVu Sans Mono, monospace\" font-size=\"12\" "
         "fill=\"#222\">\n";
  svg += fmt("<text x=\"%d\" y=\"18\" font-size=\"13\">%s</text>\n", ml,
             title.c_str());
  svg += fmt("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
             "stroke=\"#333\"/>\n",
             ml, mt, ml, height - mb);
  svg += fmt("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
             "stroke=\"#333\"/>\n",
             ml, height - mb, width - mr, height - mb);
  svg += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
             "stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
             sx(lo), sy(lo), sx(hi), sy(hi));
  svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%.4g</text>\n",
             ml - 6, mt + 10, hi);
  svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%.4g</text>\n",
             ml - 6, height - mb, lo);
  svg += fmt("<text x=\"%d\" y=\"%d\">%.4g</text>\n", ml, height - mb + 16,
             lo);
  svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%.4g</text>\n",
             width - mr, height - mb + 16, hi);
  svg += fmt("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">observed "
             "(mm)</text>\n",
             ml + static_cast<int>(pw) / 2, height - mb + 32);
  svg += fmt("<text x=\"%d\" y=\"%d\" transform=\"rotate(-90 14 %d)\" "
             "text-anchor=\"middle\">predicted (mm)</text>\n",
             14, mt + static_cast<int>(ph) / 2, mt + static_cast<int>(ph) / 2);
  for (std::size_t i = 0; i < observed.size(); ++i) {
    svg += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\" fill=\"#1f77b4\" "
               "fill-opacity=\"0.6\"/>\n",
               sx(observed[i]), sy(predicted[i]));
  }
  svg += fmt("<text x=\"%d\" y=\"%d\">%s</text>\n", ml + 10, mt + 16,
             r_text.c_str());
  svg += "</g>\n</svg>\n";
  return svg;
}

void save_predictions_csv(const std::vector<EpochHour>& target_hours,
                          const std::vector<Grid3>& observed,
                          const std::vector<Grid3>& predicted,
                          const std::string& path) {
  if (target_hours.size() != observed.size() ||
      observed.size() != predicted.size())
    throw ValueError("save_predictions_csv: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  out << "timestamp_utc,row,col,observed_mm,predicted_mm\n";
  char buf[96];
  for (std::size_t s = 0; s < target_hours.size(); ++s) {
    if (observed[s].channels != 1 || !observed[s].same_shape(predicted[s]))
      throw ValueError("save_predictions_csv: grid shape mismatch");
    const std::string ts = format_iso_hour(target_hours[s]);
    for (int r = 0; r < observed[s].height; ++r) {
      for (int c = 0; c < observed[s].width; ++c) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", r, c,
                      observed[s].at(0, r, c), predicted[s].at(0, r, c));
        out << ts << ',' << buf;
      }
    }
  }
  if (!out) throw DataError(path + ": write failed");
}

PredictionsFile load_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp_utc,row,col,observed_mm,predicted_mm")
    throw DataError(path + ": bad header '" + line + "'");

  PredictionsFile out;
  std::size_t line_no = 1;
  int cell_in_group = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) break;
    std::array<std::string, 5> fields;
    std::size_t start = 0;
    int nf = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (nf >= 5)
          throw DataError(path + ": line " + std::to_string(line_no) +
                          ": expected 5 fields");
        fields[nf++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (nf != 5)
      throw DataError(path + ": line " + std::to_string(line_no) +
                      ": expected 5 fields");

    const EpochHour hour = parse_iso_hour(fields[0]);
    const int row = fields[1] == "0" ? 0 : fields[1] == "1" ? 1 : -1;
    const int col = fields[2] == "0" ? 0 : fields[2] == "1" ? 1 : -1;
    if (row < 0 || col < 0)
      throw DataError(path + ": line " + std::to_string(line_no) +
                      ": row/col must be 0 or 1");
    double obs = 0.0, pred = 0.0;
    auto parse = [&](const std::string& text, double& v) {
      auto [p, ec] =
          std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size())
        throw DataError(path + ": line " + std::to_string(line_no) +
                        ": bad numeric value '" + text + "'");
    };
    parse(fields[3], obs);
    parse(fields[4], pred);

    if (cell_in_group == 0) {
      out.target_hours.push_back(hour);
      out.observed.emplace_back(1, kGridRows, kGridCols);
      out.predicted.emplace_back(1, kGridRows, kGridCols);
    } else if (hour != out.target_hours.back()) {
      throw DataError(path + ": line " + std::to_string(line_no) +
                      ": incomplete grid for " +
                      format_iso_hour(out.target_hours.back()));
    }
    const int expect_row = cell_in_group / kGridCols;
    const int expect_col = cell_in_group % kGridCols;
    if (row != expect_row || col != expect_col)
      throw DataError(path + ": line " + std::to_string(line_no) +
                      ": cells must appear in row-major order");
    out.observed.back().at(0, row, col) = obs;
    out.predicted.back().at(0, row, col) = pred;
    cell_in_group = (cell_in_group + 1) % kGridCells;
  }
  if (cell_in_group != 0)
    throw DataError(path + ": incomplete final grid");
  if (out.target_hours.empty()) throw DataError(path + ": no data rows");
  return out;
}

void save_grid_series_csv(const std::vector<EpochHour>& target_hours,
                          const std::vector<double>& observed,
                          const std::vector<double>& predicted,
                          const std::string& path) {
  if (target_hours.size() != observed.size() ||
      observed.size() != predicted.size())
    throw ValueError("save_grid_series_csv: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  out << "timestamp_utc,observed_mm,predicted_mm\n";
  char buf[80];
  for (std::size_t s = 0; s < target_hours.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", observed[s], predicted[s]);
    out << format_iso_hour(target_hours[s]) << ',' << buf;
  }
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace gridcast
