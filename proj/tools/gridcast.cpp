// gridcast: gridded rainfall nowcasting pipeline.
//
// Subcommands: ingest, synth, correlate, train, predict, evaluate, gradcheck,
// report. Every run is deterministic given (data, config, seed); outputs land
// in the configured output directory.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridcast/checkpoint.hpp"
#include "gridcast/convlstm.hpp"
#include "gridcast/datapipe.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/report.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/synth.hpp"
#include "gridcast/timeutil.hpp"
#include "gridcast/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gc = gridcast;

namespace {

struct RunConfig {
  std::string data;
  std::string out = "out";
  std::uint64_t seed = 0;
  // windowing
  int lead_hours = 6;
  int input_length = 24;
  // network
  int layer1_filters = 128;
  int layer2_filters = 64;
  int kernel_h = 2;
  int kernel_w = 2;
  std::string activation = "tanh";
  bool peepholes = true;
  // training
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;
  double clip_norm = 0.0;
  // synthetic data
  std::int64_t hours = 1024;
  std::string dynamics = "advection";
  double signal_to_noise = 0.0;
  // correlation matrix
  std::string correlation_mode = "spatial-mean";
};

[[noreturn]] void config_fail(const std::string& path, std::size_t line,
                              const std::string& what) {
  throw gc::DataError(path + ": line " + std::to_string(line) + ": " + what);
}

void parse_config_value(const std::string& path, std::size_t line_no,
                        RunConfig& cfg, const std::string& key,
                        const std::string& value) {
  auto as_int = [&](int lo) {
    int v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size() || v < lo)
      config_fail(path, line_no, "bad value '" + value + "' for " + key);
    return v;
  };
  auto as_i64 = [&](std::int64_t lo) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size() || v < lo)
      config_fail(path, line_no, "bad value '" + value + "' for " + key);
    return v;
  };
  auto as_u64 = [&]() {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
      config_fail(path, line_no, "bad value '" + value + "' for " + key);
    return v;
  };
  auto as_real = [&](double lo) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size() ||
        !std::isfinite(v) || v < lo)
      config_fail(path, line_no, "bad value '" + value + "' for " + key);
    return v;
  };
  auto as_bool = [&]() {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    config_fail(path, line_no,
                "bad value '" + value + "' for " + key +
                    " (expected on/off)");
  };

  if (key == "data") cfg.data = value;
  else if (key == "out") cfg.out = value;
  else if (key == "seed") cfg.seed = as_u64();
  else if (key == "lead_hours") cfg.lead_hours = as_int(1);
  else if (key == "input_length") cfg.input_length = as_int(1);
  else if (key == "layer1_filters") cfg.layer1_filters = as_int(1);
  else if (key == "layer2_filters") cfg.layer2_filters = as_int(1);
  else if (key == "kernel_h") cfg.kernel_h = as_int(1);
  else if (key == "kernel_w") cfg.kernel_w = as_int(1);
  else if (key == "activation") {
    gc::activation_from_name(value);  // validates
    cfg.activation = value;
  } else if (key == "peepholes") cfg.peepholes = as_bool();
  else if (key == "learning_rate") cfg.learning_rate = as_real(1e-300);
  else if (key == "beta1") cfg.beta1 = as_real(0.0);
  else if (key == "beta2") cfg.beta2 = as_real(0.0);
  else if (key == "adam_epsilon") cfg.adam_epsilon = as_real(1e-300);
  else if (key == "batch_size") cfg.batch_size = as_int(1);
  else if (key == "max_epochs") cfg.max_epochs = as_int(1);
  else if (key == "patience") cfg.patience = as_int(1);
  else if (key == "clip_norm") cfg.clip_norm = as_real(0.0);
  else if (key == "hours") cfg.hours = as_i64(48);
  else if (key == "dynamics") {
    gc::dynamics_from_name(value);  // validates
    cfg.dynamics = value;
  } else if (key == "signal_to_noise") cfg.signal_to_noise = as_real(0.0);
  else if (key == "correlation_mode") {
    if (value != "spatial-mean" && value != "pooled-cells")
      config_fail(path, line_no,
                  "bad value '" + value + "' for correlation_mode");
    cfg.correlation_mode = value;
  } else {
    config_fail(path, line_no, "unknown key '" + key + "'");
  }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gc::DataError(path + ": cannot open config file");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      config_fail(path, line_no, "expected key=value");
    auto trim = [](std::string s) {
      const std::size_t b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const std::size_t e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) config_fail(path, line_no, "empty key");
    parse_config_value(path, line_no, cfg, key, value);
  }
  if (cfg.beta1 >= 1.0 || cfg.beta2 >= 1.0)
    throw gc::DataError(path + ": beta1 and beta2 must be < 1");
}

gc::NetworkSpec network_spec(const RunConfig& cfg) {
  gc::NetworkSpec spec;
  spec.layer1_filters = cfg.layer1_filters;
  spec.layer2_filters = cfg.layer2_filters;
  spec.kernel_h = cfg.kernel_h;
  spec.kernel_w = cfg.kernel_w;
  spec.cell_activation = gc::activation_from_name(cfg.activation);
  spec.peepholes = cfg.peepholes;
  spec.input_channels = gc::kNumPredictors;
  spec.grid_h = gc::kGridRows;
  spec.grid_w = gc::kGridCols;
  spec.validate();
  return spec;
}

gc::TrainConfig train_config(const RunConfig& cfg) {
  gc::TrainConfig tc;
  tc.adam.learning_rate = cfg.learning_rate;
  tc.adam.beta1 = cfg.beta1;
  tc.adam.beta2 = cfg.beta2;
  tc.adam.epsilon = cfg.adam_epsilon;
  tc.batch_size = cfg.batch_size;
  tc.max_epochs = cfg.max_epochs;
  tc.patience = cfg.patience;
  tc.clip_norm = cfg.clip_norm;
  tc.shuffle_seed = cfg.seed;
  return tc;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out);
  return (fs::path(cfg.out) / name).string();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gc::DataError(path + ": cannot open file for writing");
  out << text;
  if (!out) throw gc::DataError(path + ": write failed");
}

// ---- checkpoint packaging -------------------------------------------------

constexpr char kMetaInputLength[] = "input_length";
constexpr char kMetaLeadHours[] = "lead_hours";

struct Model {
  gc::NetworkSpec spec;
  gc::NetworkParams params;
  gc::NormalizationStats stats;
  gc::WindowSpec window;
};

void save_model(const Model& model, const std::string& path) {
  gc::Checkpoint ck = gc::pack_network(model.spec, model.params);
  ck.set_meta(kMetaInputLength, model.window.input_length);
  ck.set_meta(kMetaLeadHours, model.window.lead);
  gc::NamedTensor mins{"norm/min", {gc::kNumVariables}, {}};
  gc::NamedTensor maxs{"norm/max", {gc::kNumVariables}, {}};
  gc::NamedTensor degs{"norm/degenerate", {gc::kNumVariables}, {}};
  for (const auto& e : model.stats.vars) {
    mins.values.push_back(e.min);
    maxs.values.push_back(e.max);
    degs.values.push_back(e.degenerate ? 1.0 : 0.0);
  }
  ck.tensors.push_back(std::move(mins));
  ck.tensors.push_back(std::move(maxs));
  ck.tensors.push_back(std::move(degs));
  gc::save_checkpoint(ck, path);
}

Model load_model(const std::string& path) {
  const gc::Checkpoint ck = gc::load_checkpoint(path);
  Model model;
  std::tie(model.spec, model.params) = gc::unpack_network(ck);
  if (!ck.has_meta(kMetaInputLength) || !ck.has_meta(kMetaLeadHours))
    throw gc::DataError(path + ": checkpoint lacks window geometry metadata");
  model.window.input_length =
      static_cast<int>(ck.meta_value(kMetaInputLength));
  model.window.lead = static_cast<int>(ck.meta_value(kMetaLeadHours));
  const gc::NamedTensor* mins = ck.find_tensor("norm/min");
  const gc::NamedTensor* maxs = ck.find_tensor("norm/max");
  const gc::NamedTensor* degs = ck.find_tensor("norm/degenerate");
  if (mins == nullptr || maxs == nullptr || degs == nullptr)
    throw gc::DataError(path + ": checkpoint lacks normalization stats");
  for (const gc::NamedTensor* t : {mins, maxs, degs})
    if (t->values.size() != gc::kNumVariables)
      throw gc::DataError(path + ": malformed normalization stats");
  for (int v = 0; v < gc::kNumVariables; ++v) {
    model.stats.vars[v].min = mins->values[v];
    model.stats.vars[v].max = maxs->values[v];
    model.stats.vars[v].degenerate = degs->values[v] != 0.0;
  }
  return model;
}

// ---- shared pipeline steps ------------------------------------------------

struct Pipeline {
  gc::GridSeriesDataset raw;
  gc::GridSeriesDataset normalized;
  gc::WindowSpec window;
  gc::SplitResult splits;
  gc::NormalizationStats stats;
};

// load -> window -> split -> fit stats on the training span -> normalize
Pipeline prepare_training_pipeline(const std::string& data_path,
                                   const gc::WindowSpec& window) {
  Pipeline p;
  p.window = window;
  p.raw = gc::load_csv(data_path);
  const std::vector<gc::WindowedSample> all = gc::make_windows(p.raw, window);
  p.splits = gc::split(all);
  if (p.splits.train.empty())
    throw gc::DataError("training split is empty; series too short");
  const std::int64_t span_end =
      gc::train_span_end(window, p.splits.train.size());
  p.stats = gc::fit_normalization(p.raw, 0, span_end);
  p.normalized = gc::apply_normalization(p.raw, p.stats);
  return p;
}

std::string split_phase_name(const std::string& split) {
  if (split == "train") return "training";
  if (split == "test") return "testing";
  return split;  // validation, all
}

// ---- command implementations ----------------------------------------------

int cmd_ingest(const RunConfig&, const std::string& data_path) {
  const gc::GridSeriesDataset ds = gc::load_csv(data_path);
  std::cout << "ok: " << data_path << "\n";
  std::cout << "hours: " << ds.hours << " ("
            << gc::format_iso_hour(ds.start_hour) << " to "
            << gc::format_iso_hour(ds.start_hour + ds.hours - 1) << ")\n";
  std::cout << "rows: "
            << ds.hours * gc::kNumVariables * gc::kGridCells << "\n";
  const auto& codes = gc::variable_codes();
  const auto& units = gc::variable_units();
  for (int var = 0; var < gc::kNumVariables; ++var) {
    double lo = ds.at(0, var, 0, 0), hi = lo, sum = 0.0;
    for (std::int64_t h = 0; h < ds.hours; ++h) {
      for (int r = 0; r < gc::kGridRows; ++r) {
        for (int c = 0; c < gc::kGridCols; ++c) {
          const double v = ds.at(h, var, r, c);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
          sum += v;
        }
      }
    }
    const double mean =
        sum / (static_cast<double>(ds.hours) * gc::kGridCells);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-6s min %-12.6g max %-12.6g mean %-12.6g %s",
                  codes[var].c_str(), lo, hi, mean, units[var].c_str());
    std::cout << buf << "\n";
  }
  return 0;
}

int cmd_synth(const RunConfig& cfg) {
  gc::SynthConfig sc;
  sc.seed = cfg.seed;
  sc.hours = cfg.hours;
  sc.dynamics = gc::dynamics_from_name(cfg.dynamics);
  sc.signal_to_noise = cfg.signal_to_noise;
  sc.lead_hours = cfg.lead_hours;
  const gc::GridSeriesDataset ds = gc::gen_dataset(sc);
  const std::string path = out_path(cfg, "synthetic.csv");
  gc::save_csv(ds, path);
  std::cout << "wrote " << path << " (" << ds.hours << " hours, "
            << gc::dynamics_name(sc.dynamics) << " dynamics, seed "
            << cfg.seed << ")\n";
  return 0;
}

void print_correlation_advisory(const gc::CorrelationMatrix& m) {
  struct Probe {
    const char* name;
    int var;
    double reference;
  };
  const Probe probes[] = {{"tp-rh500", gc::variable_index("rh500"), 0.43},
                          {"tp-sp", gc::variable_index("sp"), -0.36}};
  for (const Probe& probe : probes) {
    if (!m.is_defined(gc::kTpIndex, probe.var)) {
      std::cout << "advisory: " << probe.name << " undefined\n";
      continue;
    }
    const double r = m.at(gc::kTpIndex, probe.var);
    const double delta = r - probe.reference;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "advisory: %s = %+.4f (reference %+.2f, delta %+.4f, %s "
                  "the +/-0.05 band)",
                  probe.name, r, probe.reference, delta,
                  std::abs(delta) <= 0.05 ? "within" : "outside");
    std::cout << buf << "\n";
  }
}

int cmd_correlate(const RunConfig& cfg, const std::string& data_path) {
  const gc::GridSeriesDataset ds = gc::load_csv(data_path);
  const gc::SeriesMode mode = cfg.correlation_mode == "pooled-cells"
                                  ? gc::SeriesMode::PooledCells
                                  : gc::SeriesMode::SpatialMean;
  const gc::CorrelationMatrix m = gc::correlation_matrix(ds, mode);
  const std::string text = gc::format_correlation_matrix(m);
  write_text_file(out_path(cfg, "correlation.txt"), text);
  write_text_file(out_path(cfg, "correlation.json"),
                  gc::correlation_matrix_json(m));
  write_text_file(out_path(cfg, "correlation.svg"),
                  gc::correlation_heatmap_svg(m));
  std::cout << text;
  print_correlation_advisory(m);
  std::cout << "wrote " << out_path(cfg, "correlation.txt") << ", .json, .svg\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.data.empty())
    throw gc::DataError("no input data (set data= in the config or --data)");
  gc::WindowSpec window{cfg.input_length, cfg.lead_hours};
  Pipeline p = prepare_training_pipeline(cfg.data, window);
  std::cout << "windows: train " << p.splits.train.size() << ", validation "
            << p.splits.validation.size() << ", test "
            << p.splits.test.size() << "\n";

  const gc::NetworkSpec spec = network_spec(cfg);
  const gc::NetworkParams initial = gc::init_params(spec, cfg.seed);
  const gc::TrainConfig tc = train_config(cfg);

  gc::WindowSet train_set{&p.normalized, window, p.splits.train};
  gc::WindowSet val_set{&p.normalized, window, p.splits.validation};

  std::ofstream log(out_path(cfg, "train_log.txt"), std::ios::binary);
  if (!log) throw gc::DataError("cannot open train_log.txt for writing");
  const auto on_epoch = [&log](const gc::EpochStats& s) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "epoch %d train %.12g val %.12g seconds %.3f%s", s.epoch,
                  s.train_loss, s.val_loss, s.seconds,
                  s.improved ? " *" : "");
    log << buf << "\n";
    std::cout << buf << "\n";
  };
  const gc::TrainResult result =
      gc::train(spec, initial, train_set, val_set, tc, on_epoch);
  log << "stop: " << result.stop_reason << "\n";
  log.close();

  Model model{spec, result.best_params, p.stats, window};
  const std::string ckpt_path = out_path(cfg, "checkpoint.bin");
  save_model(model, ckpt_path);
  gc::save_stats(p.stats, out_path(cfg, "norm_stats.csv"));

  json hist;
  hist["stop_reason"] = result.stop_reason;
  hist["epochs_run"] = result.epochs_run;
  hist["best_epoch"] = result.best_epoch;
  hist["best_val_loss"] = result.best_val_loss;
  hist["diverged"] = result.diverged;
  json epochs = json::array();
  for (const gc::EpochStats& s : result.history) {
    json e;
    e["epoch"] = s.epoch;
    e["train_loss"] = s.train_loss;
    e["val_loss"] = s.val_loss;
    e["improved"] = s.improved;
    epochs.push_back(std::move(e));
  }
  hist["epochs"] = std::move(epochs);
  write_text_file(out_path(cfg, "history.json"), hist.dump(2) + "\n");

  std::cout << "wrote " << ckpt_path << " (best epoch " << result.best_epoch
            << ", validation loss " << result.best_val_loss << ")\n";
  if (result.diverged) {
    std::cerr << "error: training diverged; checkpoint holds the last finite "
                 "parameters\n";
    return 1;
  }
  return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& ckpt_path,
                const std::string& data_path, const std::string& split) {
  const Model model = load_model(ckpt_path);
  const gc::GridSeriesDataset raw = gc::load_csv(data_path);
  const std::vector<gc::WindowedSample> all =
      gc::make_windows(raw, model.window);

  std::vector<gc::WindowedSample> chosen;
  if (split == "all") {
    chosen = all;
  } else {
    gc::SplitResult splits = gc::split(all);
    if (split == "train") chosen = std::move(splits.train);
    else if (split == "validation") chosen = std::move(splits.validation);
    else if (split == "test") chosen = std::move(splits.test);
    else throw gc::DataError("unknown split '" + split + "'");
  }
  if (chosen.empty())
    throw gc::DataError("split '" + split + "' holds no samples");

  const gc::GridSeriesDataset normalized =
      gc::apply_normalization(raw, model.stats);
  const gc::WindowSet set{&normalized, model.window, chosen};
  const gc::PredictionSet ps =
      gc::predict_all(model.spec, model.params, set, cfg.batch_size);

  std::vector<gc::EpochHour> hours;
  std::vector<gc::Grid3> observed, predicted;
  hours.reserve(chosen.size());
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    const std::int64_t target = chosen[s].anchor + model.window.lead;
    hours.push_back(raw.start_hour + target);
    gc::Grid3 obs(1, gc::kGridRows, gc::kGridCols);
    gc::Grid3 pred(1, gc::kGridRows, gc::kGridCols);
    for (int r = 0; r < gc::kGridRows; ++r) {
      for (int c = 0; c < gc::kGridCols; ++c) {
        obs.at(0, r, c) = raw.at(target, gc::kTpIndex, r, c);
        pred.at(0, r, c) = gc::invert_value(ps.predicted[s].at(0, r, c),
                                            model.stats, gc::kTpIndex);
      }
    }
    observed.push_back(std::move(obs));
    predicted.push_back(std::move(pred));
  }

  const std::string name = "predictions_" + split_phase_name(split) + "_" +
                           std::to_string(model.window.lead) + "h.csv";
  const std::string path = out_path(cfg, name);
  gc::save_predictions_csv(hours, observed, predicted, path);
  std::cout << "wrote " << path << " (" << chosen.size() << " samples, lead "
            << model.window.lead << "h, split " << split << ")\n";
  return 0;
}

std::vector<gc::PairedSeries> series_from_predictions(
    const gc::PredictionsFile& file, gc::Phase phase, int lead) {
  std::vector<gc::PairedSeries> out;
  for (int r = 0; r < gc::kGridRows; ++r) {
    for (int c = 0; c < gc::kGridCols; ++c) {
      gc::PairedSeries s = gc::cell_series(file.observed, file.predicted, r, c);
      s.phase = phase;
      s.lead_hours = lead;
      out.push_back(std::move(s));
    }
  }
  return out;
}

int cmd_evaluate(const RunConfig& cfg,
                 const std::vector<std::string>& series_specs) {
  std::vector<gc::PairedSeries> series;
  for (const std::string& spec_text : series_specs) {
    const std::size_t c1 = spec_text.find(':');
    const std::size_t c2 =
        c1 == std::string::npos ? std::string::npos
                                : spec_text.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw gc::DataError("bad --series '" + spec_text +
                          "' (expected phase:lead:path)");
    const std::string phase_text = spec_text.substr(0, c1);
    const std::string lead_text = spec_text.substr(c1 + 1, c2 - c1 - 1);
    const std::string path = spec_text.substr(c2 + 1);
    gc::Phase phase;
    if (phase_text == "training") phase = gc::Phase::Training;
    else if (phase_text == "testing") phase = gc::Phase::Testing;
    else
      throw gc::DataError("bad phase '" + phase_text +
                          "' (expected training or testing)");
    int lead = 0;
    auto [p, ec] =
        std::from_chars(lead_text.data(), lead_text.data() + lead_text.size(),
                        lead);
    if (ec != std::errc() || p != lead_text.data() + lead_text.size() ||
        lead < 1)
      throw gc::DataError("bad lead '" + lead_text + "'");
    const gc::PredictionsFile file = gc::load_predictions_csv(path);
    for (gc::PairedSeries& s : series_from_predictions(file, phase, lead))
      series.push_back(std::move(s));
  }

  const gc::MetricsReport report = gc::per_grid_report(series);
  const std::string text = gc::format_metrics_table(report);
  write_text_file(out_path(cfg, "metrics.txt"), text);
  write_text_file(out_path(cfg, "metrics.json"),
                  gc::metrics_report_json(report));
  std::cout << text;
  std::cout << "wrote " << out_path(cfg, "metrics.txt") << " and .json\n";
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
  double worst = 0.0;
  int instance = 0;
  for (const gc::Activation act :
       {gc::Activation::Tanh, gc::Activation::Relu}) {
    for (const bool peep : {true, false}) {
      for (const int time : {2, 4}) {
        gc::NetworkSpec spec;
        spec.layer1_filters = 4;
        spec.layer2_filters = 2;
        spec.kernel_h = 2;
        spec.kernel_w = 2;
        spec.cell_activation = act;
        spec.peepholes = peep;
        spec.input_channels = 3;
        spec.grid_h = 2;
        spec.grid_w = 2;

        // relu has a kink at zero; resample until the forward pass stays
        // clear of it so finite differences are trustworthy
        std::uint64_t inst_seed = cfg.seed * 1000 + instance;
        gc::NetworkParams params;
        gc::SeqBatch x;
        std::vector<gc::Grid3> y;
        for (int attempt = 0;; ++attempt) {
          params = gc::init_params(spec, inst_seed);
          gc::Rng rng = gc::Rng::stream(inst_seed, 0x67636b31);
          for (const gc::TensorRef& ref : gc::tensor_refs(params))
            if (ref.peephole)
              for (double& v : *ref.values) v = rng.uniform(-0.5, 0.5);
          x = gc::SeqBatch(2, time, spec.input_channels, 2, 2);
          for (double& v : x.data) v = rng.uniform(0.0, 1.0);
          y.clear();
          for (int b = 0; b < x.batch; ++b) {
            gc::Grid3 t(1, 2, 2);
            for (double& v : t.data) v = rng.uniform(0.0, 1.0);
            y.push_back(std::move(t));
          }
          if (act == gc::Activation::Tanh ||
              gc::kink_margin(spec, params, x) > 1e-3 || attempt >= 64)
            break;
          inst_seed += 7919;
        }

        const gc::GradCheckResult r = gc::grad_check(spec, params, x, y, 1e-5);
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "instance %d (%s, peepholes %s, T=%d): max rel error "
                      "%.3e over %zu parameters",
                      instance, gc::activation_name(act), peep ? "on" : "off",
                      time, r.max_rel_error, r.params_checked);
        std::cout << buf << "\n";
        worst = std::max(worst, r.max_rel_error);
        ++instance;
      }
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "max relative error: %.6e", worst);
  std::cout << buf << "\n";
  return worst < 1e-4 ? 0 : 1;
}

int cmd_report(const RunConfig&, const std::string& dir) {
  if (!fs::is_directory(dir))
    throw gc::DataError(dir + ": not a directory");

  struct Found {
    std::string phase;
    int lead;
    std::string path;
  };
  std::vector<Found> found;
  std::vector<std::string> names;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file())
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const std::string& name : names) {
    for (const char* phase : {"training", "testing"}) {
      const std::string prefix = std::string("predictions_") + phase + "_";
      if (name.size() <= prefix.size() + 5 ||
          name.compare(0, prefix.size(), prefix) != 0)
        continue;
      const std::string tail = name.substr(prefix.size());
      if (tail.size() < 6 || tail.substr(tail.size() - 5) != "h.csv") continue;
      const std::string lead_text = tail.substr(0, tail.size() - 5);
      int lead = 0;
      auto [p, ec] = std::from_chars(
          lead_text.data(), lead_text.data() + lead_text.size(), lead);
      if (ec != std::errc() || p != lead_text.data() + lead_text.size() ||
          lead < 1)
        continue;
      found.push_back({phase, lead, (fs::path(dir) / name).string()});
    }
  }
  if (found.empty())
    throw gc::DataError(dir +
                        ": no predictions_<phase>_<lead>h.csv files found");

  std::vector<gc::PairedSeries> series;
  int plots = 0;
  for (const Found& f : found) {
    const gc::PredictionsFile file = gc::load_predictions_csv(f.path);
    const gc::Phase phase =
        f.phase == "training" ? gc::Phase::Training : gc::Phase::Testing;
    for (gc::PairedSeries& s : series_from_predictions(file, phase, f.lead)) {
      const std::string stem =
          f.phase + "_" + std::to_string(f.lead) + "h_grid" +
          std::to_string(s.grid);
      const std::string title = "grid " + std::to_string(s.grid) + ", " +
                                f.phase + ", lead " +
                                std::to_string(f.lead) + "h";
      write_text_file((fs::path(dir) / ("line_" + stem + ".svg")).string(),
                      gc::line_chart_svg(title, s.observed, s.predicted));
      write_text_file((fs::path(dir) / ("scatter_" + stem + ".svg")).string(),
                      gc::scatter_svg(title, s.observed, s.predicted));
      gc::save_grid_series_csv(
          file.target_hours, s.observed, s.predicted,
          (fs::path(dir) / ("series_" + stem + ".csv")).string());
      plots += 2;
      series.push_back(std::move(s));
    }
  }

  const gc::MetricsReport report = gc::per_grid_report(series);
  const std::string text = gc::format_metrics_table(report);
  write_text_file((fs::path(dir) / "report.txt").string(), text);
  write_text_file((fs::path(dir) / "report.json").string(),
                  gc::metrics_report_json(report));
  std::cout << text;
  std::cout << "wrote report.txt, report.json, " << plots << " charts in "
            << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridded rainfall nowcasting pipeline"};
  app.require_subcommand(1);
  app.fallthrough(true);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  CLI::Option* config_opt =
      app.add_option("--config", config_path, "key=value run configuration");
  CLI::Option* out_opt =
      app.add_option("--out", out_override, "output directory");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed_override, "random seed");

  auto make_config = [&]() {
    RunConfig cfg;
    if (*config_opt) load_config_file(cfg, config_path);
    if (*out_opt) cfg.out = out_override;
    if (*seed_opt) cfg.seed = seed_override;
    return cfg;
  };

  int exit_code = 0;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a dataset CSV");
  std::string ingest_path;
  ingest->add_option("csv", ingest_path, "dataset CSV path")->required();
  ingest->callback(
      [&] { exit_code = cmd_ingest(make_config(), ingest_path); });

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::int64_t synth_hours = 0;
  std::string synth_dynamics;
  double synth_snr = -1.0;
  CLI::Option* synth_hours_opt =
      synth->add_option("--hours", synth_hours, "series length in hours");
  CLI::Option* synth_dyn_opt = synth->add_option(
      "--dynamics", synth_dynamics, "advection or correlated-noise");
  CLI::Option* synth_snr_opt = synth->add_option(
      "--snr", synth_snr, "predictor signal-to-noise (0 = noiseless)");
  synth->callback([&] {
    RunConfig cfg = make_config();
    if (*synth_hours_opt) {
      if (synth_hours < 48) throw gc::DataError("hours must be at least 48");
      cfg.hours = synth_hours;
    }
    if (*synth_dyn_opt) {
      gc::dynamics_from_name(synth_dynamics);
      cfg.dynamics = synth_dynamics;
    }
    if (*synth_snr_opt) {
      if (!(synth_snr >= 0.0)) throw gc::DataError("snr must be >= 0");
      cfg.signal_to_noise = synth_snr;
    }
    exit_code = cmd_synth(cfg);
  });

  // correlate
  auto* correlate =
      app.add_subcommand("correlate", "predictor correlation matrix");
  std::string correlate_path;
  std::string correlate_mode;
  correlate->add_option("csv", correlate_path, "dataset CSV path")->required();
  CLI::Option* mode_opt = correlate->add_option(
      "--mode", correlate_mode, "spatial-mean or pooled-cells");
  correlate->callback([&] {
    RunConfig cfg = make_config();
    if (*mode_opt) {
      if (correlate_mode != "spatial-mean" && correlate_mode != "pooled-cells")
        throw gc::DataError("bad --mode '" + correlate_mode + "'");
      cfg.correlation_mode = correlate_mode;
    }
    exit_code = cmd_correlate(cfg, correlate_path);
  });

  // train
  auto* train = app.add_subcommand("train", "train a forecasting model");
  std::string train_data;
  CLI::Option* train_data_opt =
      train->add_option("--data", train_data, "dataset CSV path");
  train->callback([&] {
    RunConfig cfg = make_config();
    if (*train_data_opt) cfg.data = train_data;
    exit_code = cmd_train(cfg);
  });

  // predict
  auto* predict = app.add_subcommand("predict", "run a trained model");
  std::string predict_ckpt, predict_data, predict_split = "test";
  predict->add_option("checkpoint", predict_ckpt, "checkpoint path")
      ->required();
  predict->add_option("csv", predict_data, "dataset CSV path")->required();
  predict->add_option("--split", predict_split,
                      "train, validation, test, or all");
  predict->callback([&] {
    exit_code =
        cmd_predict(make_config(), predict_ckpt, predict_data, predict_split);
  });

  // evaluate
  auto* evaluate =
      app.add_subcommand("evaluate", "skill metrics for prediction files");
  std::vector<std::string> series_specs;
  evaluate->add_option("--series", series_specs,
                       "phase:lead:predictions.csv (repeatable)")
      ->required();
  evaluate->callback(
      [&] { exit_code = cmd_evaluate(make_config(), series_specs); });

  // gradcheck
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of the analytic gradients");
  gradcheck->callback([&] { exit_code = cmd_gradcheck(make_config()); });

  // report
  auto* report =
      app.add_subcommand("report", "skill table and charts for a run");
  std::string report_dir;
  report->add_option("dir", report_dir, "run output directory")->required();
  report->callback(
      [&] { exit_code = cmd_report(make_config(), report_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
