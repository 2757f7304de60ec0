// Acceptance gate for the rainfall nowcasting pipeline. Each numbered check
// prints exactly one PASS/FAIL line; the process exits nonzero if any fails.
//
//   1. analytic gradients match central finite differences on tiny networks
//   2. core numerics agree with naive reference implementations to 1e-12
//   3. metric identities and hand-computed values hold
//   4. a small network learns a synthetic advection dataset to NSE >= 0.8
//   5. the full pipeline runs end to end on a long-format CSV and reports
//      the rh500/sp correlation advisories (set GRIDCAST_REAL_CSV to run it
//      against a real reanalysis extract instead of the synthetic stand-in)
//   6. data pipeline invariants: split order, normalization round trip,
//      window counting, CSV round trip
//   7. two identically seeded end-to-end CLI runs are byte-identical

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "gridcast/convlstm.hpp"
#include "gridcast/datapipe.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/report.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/synth.hpp"
#include "gridcast/training.hpp"

#include "reference.hpp"

namespace fs = std::filesystem;
namespace gc = gridcast;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

bool same_bytes(const std::string& a, const std::string& b) {
  const std::string ba = read_file(a);
  return !ba.empty() && ba == read_file(b);
}

void line(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s - %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return std::string(buf);
}

// ---------------------------------------------------------------- criterion 1

bool criterion_gradients() {
  const double t0 = now_seconds();
  double worst = 0.0;
  int instances = 0;
  for (const gc::Activation act : {gc::Activation::Tanh, gc::Activation::Relu}) {
    for (const bool peep : {true, false}) {
      for (const int time : {2, 4}) {
        for (const std::uint64_t seed : {11u, 12u, 13u}) {
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

          std::uint64_t inst_seed = seed * 1000 + instances;
          gc::NetworkParams params;
          gc::SeqBatch x;
          std::vector<gc::Grid3> y;
          for (int attempt = 0;; ++attempt) {
            params = gc::init_params(spec, inst_seed);
            gc::Rng rng = gc::Rng::stream(inst_seed, 0x61636331);
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
          const gc::GradCheckResult r =
              gc::grad_check(spec, params, x, y, 1e-5);
          worst = std::max(worst, r.max_rel_error);
          ++instances;
        }
      }
    }
  }
  const double secs = now_seconds() - t0;
  const bool pass = worst < 1e-4 && secs < 60.0;
  line(1, pass,
       fmt("analytic vs central differences on %d tiny instances: worst "
           "relative error %.3e (< 1e-4), %.1fs (< 60s)",
           instances, worst, secs));
  return pass;
}

// ---------------------------------------------------------------- criterion 2

bool criterion_oracles() {
  gc::Rng rng(20260101);

  double conv_worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    const int ic = 1 + static_cast<int>(rng.below(4));
    const int oc = 1 + static_cast<int>(rng.below(4));
    const int kh = 1 + static_cast<int>(rng.below(3));
    const int kw = 1 + static_cast<int>(rng.below(3));
    const int h = 2 + static_cast<int>(rng.below(4));
    const int w = 2 + static_cast<int>(rng.below(4));
    gc::Grid3 in(ic, h, w);
    for (double& v : in.data) v = rng.uniform(-2.0, 2.0);
    gc::ConvKernel ker(oc, ic, kh, kw);
    for (double& v : ker.data) v = rng.uniform(-2.0, 2.0);
    std::vector<double> bias(static_cast<std::size_t>(oc));
    for (double& v : bias) v = rng.uniform(-1.0, 1.0);
    const gc::Grid3 got = gc::conv2d_same(in, ker, bias);
    const gc::Grid3 want = testref::conv2d_same(in, ker, bias);
    for (std::size_t k = 0; k < got.data.size(); ++k)
      conv_worst = std::max(conv_worst,
                            std::abs(got.data[k] - want.data[k]));
  }

  double cell_worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    const int filters = 1 + static_cast<int>(rng.below(4));
    const int in_ch = 1 + static_cast<int>(rng.below(3));
    const int kh = 1 + static_cast<int>(rng.below(2));
    const int kw = 1 + static_cast<int>(rng.below(2));
    const gc::Activation g =
        rng.below(2) == 0 ? gc::Activation::Tanh : gc::Activation::Relu;
    const bool peep = rng.below(2) == 0;
    gc::CellParams p(filters, in_ch, kh, kw, 2, 2);
    for (gc::ConvKernel* k :
         {&p.w_xi, &p.w_xf, &p.w_xc, &p.w_xo, &p.w_hi, &p.w_hf, &p.w_hc,
          &p.w_ho}) {
      for (double& v : k->data) v = rng.uniform(-0.8, 0.8);
    }
    for (gc::Grid3* g3 : {&p.w_ci, &p.w_cf, &p.w_co})
      for (double& v : g3->data) v = rng.uniform(-0.8, 0.8);
    for (std::vector<double>* b : {&p.b_i, &p.b_f, &p.b_c, &p.b_o})
      for (double& v : *b) v = rng.uniform(-0.5, 0.5);
    gc::Grid3 x(in_ch, 2, 2);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    gc::CellState prev = gc::zero_state(filters, 2, 2);
    for (double& v : prev.h.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : prev.c.data) v = rng.uniform(-1.0, 1.0);
    const gc::CellState got = gc::cell_step(p, x, prev, g, peep);
    const gc::CellState want = testref::cell_step(p, x, prev, g, peep);
    for (std::size_t k = 0; k < got.h.data.size(); ++k) {
      cell_worst = std::max(cell_worst,
                            std::abs(got.h.data[k] - want.h.data[k]));
      cell_worst = std::max(cell_worst,
                            std::abs(got.c.data[k] - want.c.data[k]));
    }
  }

  double metric_worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 2 + rng.below(300);
    std::vector<double> obs(n), pred(n);
    for (double& v : obs) v = rng.uniform(0.5, 9.5);
    for (double& v : pred) v = rng.uniform(0.5, 9.5);
    metric_worst = std::max(metric_worst,
                            std::abs(gc::pearson_cc(obs, pred) -
                                     testref::pearson(obs, pred)));
    metric_worst = std::max(
        metric_worst, std::abs(gc::nse(obs, pred) - testref::nse(obs, pred)));
    metric_worst = std::max(metric_worst, std::abs(gc::nrmse(obs, pred) -
                                                   testref::nrmse(obs, pred)));
  }

  const bool pass =
      conv_worst < 1e-12 && cell_worst < 1e-12 && metric_worst < 1e-12;
  line(2, pass,
       fmt("naive-reference agreement over 200 cases each: conv %.2e, cell "
           "%.2e, metrics %.2e (all < 1e-12)",
           conv_worst, cell_worst, metric_worst));
  return pass;
}

// ---------------------------------------------------------------- criterion 3

bool criterion_identities() {
  gc::Rng rng(33);
  std::vector<double> obs(64);
  for (double& v : obs) v = rng.uniform(1.0, 9.0);

  bool ok = true;
  std::string fail;

  if (gc::nse(obs, obs) != 1.0) { ok = false; fail = "NSE(obs,obs) != 1"; }
  double sum = 0.0;
  for (double v : obs) sum += v;
  const std::vector<double> mean_pred(obs.size(),
                                      sum / static_cast<double>(obs.size()));
  if (ok && gc::nse(obs, mean_pred) != 0.0) {
    ok = false;
    fail = "NSE(obs,mean) != 0";
  }
  if (ok && gc::nrmse(obs, obs) != 0.0) {
    ok = false;
    fail = "NRMSE(obs,obs) != 0";
  }

  std::vector<double> other(64), affine(64);
  for (double& v : other) v = rng.uniform(1.0, 9.0);
  for (std::size_t k = 0; k < other.size(); ++k)
    affine[k] = 3.0 * other[k] + 10.0;
  if (ok &&
      std::abs(gc::pearson_cc(obs, other) - gc::pearson_cc(obs, affine)) >
          1e-12) {
    ok = false;
    fail = "CC not affine invariant";
  }

  const double nse_hand = gc::nse({0, 2, 4}, {1, 2, 3});
  if (ok && nse_hand != 0.75) { ok = false; fail = "NSE hand value"; }
  const double nrmse_hand = gc::nrmse({0, 2, 4}, {1, 2, 3});
  if (ok && std::abs(nrmse_hand - 0.4082) > 1e-4) {
    ok = false;
    fail = "NRMSE hand value";
  }
  const double cc_hand = gc::pearson_cc({1, 2, 3, 4}, {2, 1, 4, 3});
  if (ok && std::abs(cc_hand - 0.6) > 1e-12) {
    ok = false;
    fail = "CC hand value";
  }

  line(3, ok,
       ok ? fmt("identities hold; NSE([0,2,4],[1,2,3]) = %.4g, NRMSE = %.6g, "
                "CC([1,2,3,4],[2,1,4,3]) = %.4g",
                nse_hand, nrmse_hand, cc_hand)
          : fail);
  return ok;
}

// ---------------------------------------------------------------- criterion 4

struct GridNse {
  double value[gc::kGridCells];
  double min() const {
    double m = value[0];
    for (double v : value) m = std::min(m, v);
    return m;
  }
};

GridNse per_grid_nse(const gc::PredictionSet& ps) {
  GridNse out{};
  for (int r = 0; r < gc::kGridRows; ++r) {
    for (int c = 0; c < gc::kGridCols; ++c) {
      const gc::PairedSeries s = gc::cell_series(ps.observed, ps.predicted,
                                                 r, c);
      out.value[r * gc::kGridCols + c] = gc::nse(s.observed, s.predicted);
    }
  }
  return out;
}

bool criterion_learnability() {
  const double t0 = now_seconds();

  gc::SynthConfig scfg;
  scfg.seed = 4242;
  scfg.hours = 20000;
  scfg.dynamics = gc::SynthDynamics::Advection;
  scfg.signal_to_noise = 0.0;  // noiseless: the high-SNR limit
  scfg.lead_hours = 6;
  const gc::GridSeriesDataset raw = gc::gen_advection(scfg);

  const gc::WindowSpec window{24, 6};
  const std::vector<gc::WindowedSample> windows = gc::make_windows(raw, window);
  gc::SplitResult splits = gc::split(windows);
  const gc::NormalizationStats stats = gc::fit_normalization(
      raw, 0, gc::train_span_end(window, splits.train.size()));
  const gc::GridSeriesDataset data = gc::apply_normalization(raw, stats);

  gc::NetworkSpec spec;
  spec.layer1_filters = 8;
  spec.layer2_filters = 4;
  spec.kernel_h = 2;
  spec.kernel_w = 2;
  spec.cell_activation = gc::Activation::Tanh;
  spec.peepholes = true;
  spec.input_channels = gc::kNumPredictors;
  spec.grid_h = 2;
  spec.grid_w = 2;

  gc::TrainConfig tc;  // library defaults: lr 1e-3, batch 32, patience 10
  tc.max_epochs = 25;
  tc.shuffle_seed = 4242;

  const gc::WindowSet train_set{&data, window, splits.train};
  const gc::WindowSet val_set{&data, window, splits.validation};
  const gc::WindowSet test_set{&data, window, splits.test};

  const gc::NetworkParams initial = gc::init_params(spec, 4242);
  const gc::TrainResult result =
      gc::train(spec, initial, train_set, val_set, tc);

  const gc::PredictionSet ps =
      gc::predict_all(spec, result.best_params, test_set, tc.batch_size);
  const GridNse nse = per_grid_nse(ps);

  const double secs = now_seconds() - t0;
  const bool pass = !result.diverged && nse.min() >= 0.8 && secs < 1800.0;
  line(4, pass,
       fmt("advection dataset (20000 h), 8/4 filters, lead 6: test NSE per "
           "grid %.3f %.3f %.3f %.3f (all >= 0.8), %d epochs, %.0fs (< 1800s)",
           nse.value[0], nse.value[1], nse.value[2], nse.value[3],
           result.epochs_run, secs));
  return pass;
}

// ---------------------------------------------------------------- criterion 5

bool criterion_pipeline(const fs::path& outdir) {
  fs::create_directories(outdir);
  const char* real = std::getenv("GRIDCAST_REAL_CSV");
  std::string source;
  std::string csv_path;
  if (real != nullptr && *real != '\0') {
    source = "user-supplied extract";
    csv_path = real;
  } else {
    source = "synthetic stand-in";
    gc::SynthConfig scfg;
    scfg.seed = 77;
    scfg.hours = 1000;
    scfg.dynamics = gc::SynthDynamics::CorrelatedNoise;
    csv_path = (outdir / "standin.csv").string();
    gc::save_csv(gc::gen_correlated_noise(scfg), csv_path);
  }

  // ingest
  const gc::GridSeriesDataset raw = gc::load_csv(csv_path);

  // correlate, with the rh500/sp advisory comparison (reported, not asserted)
  const gc::CorrelationMatrix m = gc::correlation_matrix(raw);
  std::ofstream corr(outdir / "correlation.txt", std::ios::binary);
  corr << gc::format_correlation_matrix(m);
  std::string advisory;
  const struct {
    const char* name;
    int var;
    double reference;
  } probes[] = {{"tp-rh500", 4, 0.43}, {"tp-sp", 10, -0.36}};
  for (const auto& probe : probes) {
    if (!m.is_defined(probe.var, gc::kTpIndex)) {
      advisory += fmt("%s undefined; ", probe.name);
      corr << probe.name << ": undefined\n";
      continue;
    }
    const double r = m.at(probe.var, gc::kTpIndex);
    const double delta = r - probe.reference;
    advisory += fmt("%s %+.3f vs %+.2f (%s +/-0.05); ", probe.name, r,
                    probe.reference,
                    std::abs(delta) <= 0.05 ? "within" : "outside");
    corr << fmt("%s: %+.4f (reference %+.2f, delta %+.4f, %s the +/-0.05 "
                "band)\n",
                probe.name, r, probe.reference, delta,
                std::abs(delta) <= 0.05 ? "within" : "outside");
  }
  corr.close();

  // train at full width, briefly; completion is the criterion here
  const gc::WindowSpec window{24, 6};
  const std::vector<gc::WindowedSample> windows = gc::make_windows(raw, window);
  gc::SplitResult splits = gc::split(windows);
  const gc::NormalizationStats stats = gc::fit_normalization(
      raw, 0, gc::train_span_end(window, splits.train.size()));
  const gc::GridSeriesDataset data = gc::apply_normalization(raw, stats);

  gc::NetworkSpec spec;  // 128/64 filters are the defaults
  spec.input_channels = gc::kNumPredictors;
  spec.validate();

  gc::TrainConfig tc;
  tc.max_epochs = 2;
  tc.shuffle_seed = 77;

  const gc::WindowSet train_set{&data, window, splits.train};
  const gc::WindowSet val_set{&data, window, splits.validation};
  const gc::WindowSet test_set{&data, window, splits.test};
  const gc::TrainResult result =
      gc::train(spec, gc::init_params(spec, 77), train_set, val_set, tc);
  if (result.diverged) {
    line(5, false, "training diverged on the " + source);
    return false;
  }

  // evaluate both phases and emit the skill table
  std::vector<gc::PairedSeries> series;
  for (const auto& [samples, phase] :
       {std::pair{&splits.train, gc::Phase::Training},
        std::pair{&splits.test, gc::Phase::Testing}}) {
    const gc::WindowSet set{&data, window, *samples};
    const gc::PredictionSet ps =
        gc::predict_all(spec, result.best_params, set, tc.batch_size);
    for (int r = 0; r < gc::kGridRows; ++r) {
      for (int c = 0; c < gc::kGridCols; ++c) {
        gc::PairedSeries s = gc::cell_series(ps.observed, ps.predicted, r, c);
        // back to physical mm for the report
        for (double& v : s.observed)
          v = gc::invert_value(v, stats, gc::kTpIndex);
        for (double& v : s.predicted)
          v = gc::invert_value(v, stats, gc::kTpIndex);
        s.phase = phase;
        s.lead_hours = window.lead;
        series.push_back(std::move(s));
      }
    }
  }
  const gc::MetricsReport report = gc::per_grid_report(series);
  std::ofstream table(outdir / "report.txt", std::ios::binary);
  table << gc::format_metrics_table(report);
  table.close();
  std::ofstream js(outdir / "report.json", std::ios::binary);
  js << gc::metrics_report_json(report);
  js.close();

  line(5, true,
       "pipeline completed on " + source + " (ingest, correlate, train at "
       "128/64, evaluate); advisory: " + advisory + "report in " +
       outdir.string());
  return true;
}

// ---------------------------------------------------------------- criterion 6

bool criterion_invariants() {
  gc::Rng rng(66);
  bool ok = true;
  std::string fail;

  // chronological split ordering on anchor hours
  {
    gc::SynthConfig scfg;
    scfg.seed = 6;
    scfg.hours = 500;
    const gc::GridSeriesDataset ds = gc::gen_advection(scfg);
    const std::vector<gc::WindowedSample> windows =
        gc::make_windows(ds, {24, 6});
    const gc::SplitResult s = gc::split(windows);
    auto increasing = [](const std::vector<gc::WindowedSample>& v) {
      for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k - 1].anchor >= v[k].anchor) return false;
      return true;
    };
    if (s.train.empty() || s.validation.empty() || s.test.empty() ||
        !increasing(s.train) || !increasing(s.validation) ||
        !increasing(s.test) ||
        s.train.back().anchor >= s.validation.front().anchor ||
        s.validation.back().anchor >= s.test.front().anchor) {
      ok = false;
      fail = "split ordering violated";
    }
  }

  // normalization round trip
  if (ok) {
    gc::GridSeriesDataset ds;
    ds.start_hour = 0;
    ds.hours = 300;
    ds.values.resize(static_cast<std::size_t>(ds.hours) * gc::kNumVariables *
                     gc::kGridCells);
    for (double& v : ds.values) v = rng.uniform(-50.0, 150.0);
    const gc::NormalizationStats stats = gc::fit_normalization(ds, 0, 300);
    const gc::GridSeriesDataset norm = gc::apply_normalization(ds, stats);
    double worst = 0.0;
    for (std::int64_t h = 0; h < ds.hours; ++h)
      for (int var = 0; var < gc::kNumVariables; ++var)
        for (int r = 0; r < gc::kGridRows; ++r)
          for (int c = 0; c < gc::kGridCols; ++c)
            worst = std::max(
                worst, std::abs(gc::invert_value(norm.at(h, var, r, c), stats,
                                                 var) -
                                ds.at(h, var, r, c)));
    if (worst >= 1e-12) {
      ok = false;
      fail = fmt("normalization round trip error %.3e", worst);
    }
  }

  // window-count formula vs brute force
  if (ok) {
    for (int c = 0; c < 100 && ok; ++c) {
      const int L = 1 + static_cast<int>(rng.below(30));
      const int lead = 1 + static_cast<int>(rng.below(15));
      const std::int64_t hours =
          L + lead + static_cast<std::int64_t>(rng.below(200));
      gc::GridSeriesDataset ds;
      ds.hours = hours;
      ds.values.assign(static_cast<std::size_t>(hours) * gc::kNumVariables *
                           gc::kGridCells,
                       0.0);
      const std::vector<gc::WindowedSample> w = gc::make_windows(ds, {L, lead});
      if (static_cast<std::int64_t>(w.size()) !=
          testref::window_count(hours, L, lead)) {
        ok = false;
        fail = fmt("window count mismatch at hours=%lld L=%d lead=%d",
                   static_cast<long long>(hours), L, lead);
      }
    }
  }

  // CSV round trip, bit exact
  if (ok) {
    gc::GridSeriesDataset ds;
    ds.start_hour = 438288;
    ds.hours = 24;
    ds.values.resize(static_cast<std::size_t>(ds.hours) * gc::kNumVariables *
                     gc::kGridCells);
    for (double& v : ds.values) v = rng.uniform(0.0, 100.0);
    const fs::path path = fs::temp_directory_path() /
                          ("gridcast_acceptance_" +
                           std::to_string(::getpid()) + ".csv");
    gc::save_csv(ds, path.string());
    const gc::GridSeriesDataset back = gc::load_csv(path.string());
    const fs::path again = path.string() + ".2";
    gc::save_csv(back, again.string());
    if (back.values != ds.values || back.start_hour != ds.start_hour ||
        !same_bytes(path.string(), again.string())) {
      ok = false;
      fail = "CSV round trip not bit-exact";
    }
    std::error_code ec;
    fs::remove(path, ec);
    fs::remove(again, ec);
  }

  line(6, ok,
       ok ? "split ordering, normalization round trip < 1e-12, window counts "
            "vs brute force (100 shapes), CSV round trip bit-exact"
          : fail);
  return ok;
}

// ---------------------------------------------------------------- criterion 7

int run_cmd(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool criterion_determinism(const fs::path& base) {
  const std::string bin = GRIDCAST_BIN;
  for (const char* leg : {"a", "b"}) {
    const fs::path dir = base / leg;
    fs::create_directories(dir);
    const std::string run = dir.string();
    const std::string quiet = " >'" + run + "/.log' 2>&1";
    std::ofstream cfg(dir / "run.cfg");
    cfg << "data = " << run << "/synthetic.csv\n"
        << "out = " << run << "\n"
        << "seed = 11\ninput_length = 5\nlead_hours = 6\n"
        << "layer1_filters = 3\nlayer2_filters = 2\n"
        << "learning_rate = 0.002\nbatch_size = 16\nmax_epochs = 2\n";
    cfg.close();
    if (run_cmd("'" + bin + "' synth --hours 72 --seed 3 --out '" + run +
                "'" + quiet) != 0 ||
        run_cmd("'" + bin + "' train --config '" + run + "/run.cfg'" +
                quiet) != 0 ||
        run_cmd("'" + bin + "' predict '" + run + "/checkpoint.bin' '" + run +
                "/synthetic.csv' --split test --out '" + run + "'" + quiet) !=
            0 ||
        run_cmd("'" + bin + "' evaluate --series testing:6:'" + run +
                "/predictions_testing_6h.csv' --out '" + run + "'" + quiet) !=
            0 ||
        run_cmd("'" + bin + "' report '" + run + "'" + quiet) != 0) {
      line(7, false, std::string("pipeline leg ") + leg + " failed; see " +
                         run + "/.log");
      return false;
    }
  }

  const std::string a = (base / "a").string(), b = (base / "b").string();
  std::string bad;
  for (const char* name :
       {"/synthetic.csv", "/checkpoint.bin", "/history.json",
        "/norm_stats.csv", "/predictions_testing_6h.csv", "/metrics.txt",
        "/metrics.json", "/report.txt", "/report.json",
        "/line_testing_6h_grid1.svg", "/scatter_testing_6h_grid4.svg"}) {
    if (!same_bytes(a + name, b + name)) {
      bad += std::string(name + 1) + " ";
    }
  }
  const bool pass = bad.empty();
  line(7, pass,
       pass ? "two identically seeded CLI runs (synth, train, predict, "
              "evaluate, report) are byte-identical"
            : "artifacts differ between identical runs: " + bad);
  return pass;
}

}  // namespace

int main() {
  const fs::path outdir = fs::current_path() / "acceptance_out";
  std::error_code ec;
  fs::remove_all(outdir, ec);
  fs::create_directories(outdir);

  bool all = true;
  const auto guard = [&all](int criterion, auto&& fn) {
    try {
      all = fn() && all;
    } catch (const std::exception& e) {
      line(criterion, false, std::string("exception: ") + e.what());
      all = false;
    }
  };

  guard(1, [] { return criterion_gradients(); });
  guard(2, [] { return criterion_oracles(); });
  guard(3, [] { return criterion_identities(); });
  guard(4, [] { return criterion_learnability(); });
  guard(5, [&] { return criterion_pipeline(outdir / "pipeline"); });
  guard(6, [] { return criterion_invariants(); });
  guard(7, [&] { return criterion_determinism(outdir / "determinism"); });

  return all ? 0 : 1;
}
