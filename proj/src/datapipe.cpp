#include "gridcast/datapipe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "gridcast/errors.hpp"

namespace gridcast {

namespace {

const std::array<std::string, kNumVariables> kCodes = {
    "t250", "t500", "t850", "rh250", "rh500", "rh850",
    "pv500", "pv850", "tcc", "hcc", "sp", "tp"};

const std::array<std::string, kNumVariables> kUnits = {
    "K", "K", "K", "%", "%", "%",
    "K m^2 kg^-1 s^-1", "K m^2 kg^-1 s^-1", "fraction", "fraction", "Pa", "mm"};

constexpr char kHeader[] = "timestamp_utc,row,col,variable,value";

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw DataError(path + ": " + what);
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line,
                            const std::string& what) {
  fail(path, "line " + std::to_string(line) + ": " + what);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Splits on commas into exactly 5 fields; no quoting, fields never contain
// commas.
std::array<std::string_view, 5> split_fields(const std::string& path,
                                             std::size_t line_no,
                                             const std::string& line) {
  std::array<std::string_view, 5> out;
  std::size_t start = 0;
  int field = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      if (field >= 5)
        fail_line(path, line_no, "expected 5 fields, found more");
      out[field++] = std::string_view(line).substr(start, i - start);
      start = i + 1;
    }
  }
  if (field != 5)
    fail_line(path, line_no,
              "expected 5 fields, found " + std::to_string(field));
  return out;
}

int parse_cell_index(const std::string& path, std::size_t line_no,
                     std::string_view text, const char* what, int limit) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.begin(), text.end(), v);
  if (ec != std::errc() || ptr != text.end() || v < 0 || v >= limit)
    fail_line(path, line_no,
              std::string(what) + " must be an integer in [0, " +
                  std::to_string(limit - 1) + "], got '" + std::string(text) +
                  "'");
  return v;
}

double parse_value(const std::string& path, std::size_t line_no,
                   std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.begin(), text.end(), v);
  if (ec != std::errc() || ptr != text.end())
    fail_line(path, line_no, "bad numeric value '" + std::string(text) + "'");
  return v;
}

EpochHour parse_row_hour(const std::string& path, std::size_t line_no,
                         std::string_view text) {
  try {
    return parse_iso_hour(std::string(text));
  } catch (const DataError& e) {
    fail_line(path, line_no, e.what());
  }
}

std::string slot_name(EpochHour hour, int var, int row, int col) {
  return format_iso_hour(hour) + " " + kCodes[var] + " row " +
         std::to_string(row) + " col " + std::to_string(col);
}

}  // namespace

const std::array<std::string, kNumVariables>& variable_codes() {
  return kCodes;
}

const std::array<std::string, kNumVariables>& variable_units() {
  return kUnits;
}

int variable_index(const std::string& code) {
  for (int i = 0; i < kNumVariables; ++i)
    if (kCodes[i] == code) return i;
  return -1;
}

GridSeriesDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");

  std::string line;
  if (!std::getline(in, line)) fail(path, "empty file");
  strip_cr(line);
  if (line != kHeader)
    fail_line(path, 1,
              "bad header '" + line + "', expected '" + kHeader + "'");

  // Pass 1: timestamps only, to size the series and catch whole-hour gaps.
  std::vector<EpochHour> row_hours;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      fail_line(path, line_no, "blank line");
    }
    auto fields = split_fields(path, line_no, line);
    row_hours.push_back(parse_row_hour(path, line_no, fields[0]));
  }
  if (row_hours.empty()) fail(path, "no data rows");

  const auto [min_it, max_it] =
      std::minmax_element(row_hours.begin(), row_hours.end());
  const EpochHour start = *min_it;
  const std::int64_t hours = *max_it - start + 1;
  const std::size_t slots = static_cast<std::size_t>(hours) * kNumVariables *
                            kGridCells;
  if (slots / 48 > row_hours.size())  // cheaper than naming every gap below
    fail(path, "series spans " + std::to_string(hours) + " hours (" +
                   format_iso_hour(start) + " to " + format_iso_hour(*max_it) +
                   ") but has only " + std::to_string(row_hours.size()) +
                   " rows; hourly coverage is required");

  std::vector<std::uint8_t> hour_seen(static_cast<std::size_t>(hours), 0);
  for (EpochHour h : row_hours) hour_seen[static_cast<std::size_t>(h - start)] = 1;
  for (std::int64_t h = 0; h < hours; ++h) {
    if (hour_seen[static_cast<std::size_t>(h)]) continue;
    std::size_t later_line = 0;
    for (std::size_t i = 0; i < row_hours.size(); ++i) {
      if (row_hours[i] > start + h) {
        later_line = i + 2;  // +1 header, +1 one-based
        break;
      }
    }
    fail(path, "gap in hours: no rows for " + format_iso_hour(start + h) +
                   " (next hour first appears at line " +
                   std::to_string(later_line) + ")");
  }

  // Pass 2: full parse and placement.
  GridSeriesDataset ds;
  ds.start_hour = start;
  ds.hours = hours;
  ds.values.assign(slots, 0.0);
  std::vector<std::uint8_t> present(slots, 0);

  in.clear();
  in.seekg(0);
  std::getline(in, line);  // header
  line_no = 1;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) break;  // validated trailing blank in pass 1
    auto fields = split_fields(path, line_no, line);
    const EpochHour hour = row_hours[data_rows++];
    const int row = parse_cell_index(path, line_no, fields[1], "row",
                                     kGridRows);
    const int col = parse_cell_index(path, line_no, fields[2], "col",
                                     kGridCols);
    const int var = variable_index(std::string(fields[3]));
    if (var < 0)
      fail_line(path, line_no,
                "unknown variable code '" + std::string(fields[3]) + "'");
    const double value = parse_value(path, line_no, fields[4]);
    if (!std::isfinite(value))
      fail_line(path, line_no,
                "non-finite value for " + slot_name(hour, var, row, col));
    if (var == kTpIndex && value < 0.0)
      fail_line(path, line_no,
                "negative precipitation at " + slot_name(hour, var, row, col));

    const std::size_t slot =
        ((static_cast<std::size_t>(hour - start) * kNumVariables + var) *
         kGridRows + row) * kGridCols + col;
    if (present[slot])
      fail_line(path, line_no,
                "duplicate entry for " + slot_name(hour, var, row, col));
    present[slot] = 1;
    ds.values[slot] = value;
  }

  std::size_t missing = 0;
  std::string listed;
  for (std::size_t slot = 0; slot < slots; ++slot) {
    if (present[slot]) continue;
    ++missing;
    if (missing <= 4) {
      const std::size_t cell = slot % kGridCells;
      const std::size_t var = (slot / kGridCells) % kNumVariables;
      const std::int64_t hour =
          static_cast<std::int64_t>(slot / (kGridCells * kNumVariables));
      if (!listed.empty()) listed += ", ";
      listed += slot_name(start + hour, static_cast<int>(var),
                          static_cast<int>(cell) / kGridCols,
                          static_cast<int>(cell) % kGridCols);
    }
  }
  if (missing > 0) {
    std::string msg = "missing " + std::to_string(missing) +
                      (missing == 1 ? " entry: " : " entries: ") + listed;
    if (missing > 4) msg += ", and " + std::to_string(missing - 4) + " more";
    fail(path, msg);
  }
  return ds;
}

void save_csv(const GridSeriesDataset& ds, const std::string& path) {
  if (ds.hours <= 0 ||
      ds.values.size() != static_cast<std::size_t>(ds.hours) * kNumVariables *
                              kGridCells)
    throw ValueError("save_csv: malformed dataset");
  std::ofstream out(path, std::ios::binary);  // binary: exact bytes, LF only
  if (!out) fail(path, "cannot open file for writing");
  out << kHeader << '\n';
  char buf[64];
  for (std::int64_t h = 0; h < ds.hours; ++h) {
    const std::string ts = format_iso_hour(ds.start_hour + h);
    for (int var = 0; var < kNumVariables; ++var) {
      for (int row = 0; row < kGridRows; ++row) {
        for (int col = 0; col < kGridCols; ++col) {
          std::snprintf(buf, sizeof buf, "%d,%d,%s,%.17g\n", row, col,
                        kCodes[var].c_str(), ds.at(h, var, row, col));
          out << ts << ',' << buf;
        }
      }
    }
  }
  if (!out) fail(path, "write failed");
}

NormalizationStats fit_normalization(const GridSeriesDataset& ds,
                                     std::int64_t span_begin,
                                     std::int64_t span_end) {
  if (span_begin < 0 || span_end > ds.hours || span_begin >= span_end)
    throw ValueError("fit_normalization: bad span [" +
                     std::to_string(span_begin) + ", " +
                     std::to_string(span_end) + ") for " +
                     std::to_string(ds.hours) + " hours");
  NormalizationStats stats;
  for (int var = 0; var < kNumVariables; ++var) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::int64_t h = span_begin; h < span_end; ++h) {
      for (int row = 0; row < kGridRows; ++row) {
        for (int col = 0; col < kGridCols; ++col) {
          const double v = ds.at(h, var, row, col);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    stats.vars[var] = {lo, hi, lo == hi};
  }
  return stats;
}

double normalize_value(double v, const NormalizationStats& stats, int var) {
  const auto& e = stats.vars[var];
  if (e.degenerate) return 0.0;
  return (v - e.min) / (e.max - e.min);
}

double invert_value(double v, const NormalizationStats& stats, int var) {
  const auto& e = stats.vars[var];
  if (e.degenerate) return e.min;
  return v * (e.max - e.min) + e.min;
}

GridSeriesDataset apply_normalization(const GridSeriesDataset& ds,
                                      const NormalizationStats& stats) {
  GridSeriesDataset out;
  out.start_hour = ds.start_hour;
  out.hours = ds.hours;
  out.values.resize(ds.values.size());
  const std::size_t per_hour = kNumVariables * kGridCells;
  for (std::size_t i = 0; i < ds.values.size(); ++i) {
    const int var = static_cast<int>((i % per_hour) / kGridCells);
    out.values[i] = normalize_value(ds.values[i], stats, var);
  }
  return out;
}

void save_stats(const NormalizationStats& stats, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  out << "code,min,max,degenerate\n";
  char buf[128];
  for (int var = 0; var < kNumVariables; ++var) {
    const auto& e = stats.vars[var];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%d\n", kCodes[var].c_str(),
                  e.min, e.max, e.degenerate ? 1 : 0);
    out << buf;
  }
  if (!out) fail(path, "write failed");
}

NormalizationStats load_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  std::string line;
  if (!std::getline(in, line)) fail(path, "empty file");
  strip_cr(line);
  if (line != "code,min,max,degenerate")
    fail_line(path, 1, "bad header '" + line + "'");
  NormalizationStats stats;
  std::array<bool, kNumVariables> seen{};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) break;
    std::stringstream ss(line);
    std::string code, min_s, max_s, deg_s;
    if (!std::getline(ss, code, ',') || !std::getline(ss, min_s, ',') ||
        !std::getline(ss, max_s, ',') || !std::getline(ss, deg_s))
      fail_line(path, line_no, "expected 4 fields");
    const int var = variable_index(code);
    if (var < 0)
      fail_line(path, line_no, "unknown variable code '" + code + "'");
    if (seen[var])
      fail_line(path, line_no, "duplicate entry for '" + code + "'");
    seen[var] = true;
    auto& e = stats.vars[var];
    e.min = parse_value(path, line_no, min_s);
    e.max = parse_value(path, line_no, max_s);
    if (deg_s == "0")
      e.degenerate = false;
    else if (deg_s == "1")
      e.degenerate = true;
    else
      fail_line(path, line_no, "degenerate flag must be 0 or 1");
    if (!e.degenerate && !(e.max > e.min))
      fail_line(path, line_no, "max must exceed min for '" + code + "'");
  }
  for (int var = 0; var < kNumVariables; ++var)
    if (!seen[var]) fail(path, "missing entry for '" + kCodes[var] + "'");
  return stats;
}

std::vector<WindowedSample> make_windows(const GridSeriesDataset& ds,
                                         const WindowSpec& spec) {
  if (spec.input_length < 1) throw ValueError("input_length must be >= 1");
  if (spec.lead < 1) throw ValueError("lead must be >= 1");
  const std::int64_t need =
      static_cast<std::int64_t>(spec.input_length) + spec.lead;
  if (ds.hours < need)
    throw ValueError("series has " + std::to_string(ds.hours) +
                     " hours; at least " + std::to_string(need) +
                     " required for input_length=" +
                     std::to_string(spec.input_length) + " lead=" +
                     std::to_string(spec.lead));
  std::vector<WindowedSample> out;
  out.reserve(static_cast<std::size_t>(ds.hours - need + 1));
  for (std::int64_t t = spec.input_length - 1; t <= ds.hours - 1 - spec.lead;
       ++t)
    out.push_back(WindowedSample{t});
  return out;
}

SplitResult split(const std::vector<WindowedSample>& samples) {
  const std::size_t n = samples.size();
  if (n < 3) throw ValueError("split: need at least 3 samples, got " +
                              std::to_string(n));
  const std::size_t n_train = n * 85 / 100;
  const std::size_t rem = n - n_train;
  const std::size_t n_val = rem * 15 / 100;
  SplitResult out;
  out.train.assign(samples.begin(), samples.begin() + n_train);
  out.validation.assign(samples.begin() + n_train,
                        samples.begin() + n_train + n_val);
  out.test.assign(samples.begin() + n_train + n_val, samples.end());
  return out;
}

void WindowSet::assemble(std::span<const std::size_t> indices, SeqBatch& x,
                         std::vector<Grid3>& y) const {
  if (data == nullptr) throw ValueError("WindowSet has no dataset");
  const int L = spec.input_length;
  x = SeqBatch(static_cast<int>(indices.size()), L, kNumPredictors, kGridRows,
               kGridCols);
  y.clear();
  y.reserve(indices.size());
  for (std::size_t s = 0; s < indices.size(); ++s) {
    if (indices[s] >= samples.size())
      throw ValueError("sample index out of range");
    const std::int64_t anchor = samples[indices[s]].anchor;
    for (int t = 0; t < L; ++t) {
      const std::int64_t hour = anchor - (L - 1) + t;
      double* frame = x.frame(static_cast<int>(s), t);
      for (int var = 0; var < kNumPredictors; ++var)
        for (int cell = 0; cell < kGridCells; ++cell)
          frame[var * kGridCells + cell] =
              data->at(hour, var, cell / kGridCols, cell % kGridCols);
    }
    Grid3 target(1, kGridRows, kGridCols);
    for (int cell = 0; cell < kGridCells; ++cell)
      target.data[static_cast<std::size_t>(cell)] =
          data->at(anchor + spec.lead, kTpIndex, cell / kGridCols,
                   cell % kGridCols);
    y.push_back(std::move(target));
  }
}

std::int64_t train_span_end(const WindowSpec& spec, std::size_t train_count) {
  if (train_count == 0)
    throw ValueError("training split is empty; cannot fit normalization");
  return static_cast<std::int64_t>(spec.input_length) + spec.lead +
         static_cast<std::int64_t>(train_count) - 1;
}

}  // namespace gridcast
