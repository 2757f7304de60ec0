#include "gridcast/synth.hpp"

#include <cmath>
#include <string>

#include "gridcast/errors.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {

namespace {

// Affine maps from the squashed latent mu in (-1, 1) into plausible physical
// ranges; sp decreases with mu so wet conditions come with low pressure.
struct Transform {
  double center;
  double coef;
  int lag;
};

constexpr std::array<Transform, kNumPredictors> kTransforms = {{
    {222.0, 8.0, 2},      // t250 (K)
    {255.0, 10.0, 1},     // t500
    {288.0, 9.0, 0},      // t850
    {50.0, 45.0, 1},      // rh250 (%)
    {55.0, 40.0, 0},      // rh500
    {60.0, 35.0, 2},      // rh850
    {4.0e-7, 2.5e-7, 1},  // pv500 (K m^2 kg^-1 s^-1)
    {2.0e-7, 1.2e-7, 0},  // pv850
    {0.50, 0.45, 1},      // tcc (fraction)
    {0.40, 0.35, 2},      // hcc
    {100800.0, -900.0, 0},  // sp (Pa)
}};

double softplus(double z) { return std::log1p(std::exp(-std::abs(z))) +
                                   std::max(z, 0.0); }

void check_config(const SynthConfig& cfg) {
  if (cfg.hours < 48)
    throw ValueError("synth: hours must be at least 48");
  if (std::isnan(cfg.signal_to_noise) || cfg.signal_to_noise < 0.0)
    throw ValueError("synth: signal_to_noise must be >= 0");
  if (cfg.lead_hours < 0)
    throw ValueError("synth: lead_hours must be >= 0");
  for (double rho : cfg.planted_correlations)
    if (!(std::abs(rho) <= 1.0))
      throw ValueError("synth: planted correlations must lie in [-1, 1]");
}

}  // namespace

const char* dynamics_name(SynthDynamics d) {
  return d == SynthDynamics::Advection ? "advection" : "correlated-noise";
}

SynthDynamics dynamics_from_name(const std::string& name) {
  if (name == "advection") return SynthDynamics::Advection;
  if (name == "correlated-noise") return SynthDynamics::CorrelatedNoise;
  throw DataError("unknown dynamics '" + name +
                  "' (expected advection or correlated-noise)");
}

namespace synth_detail {

double latent_squash(double lambda) { return std::tanh(lambda / 2.0); }

int predictor_lag(int var) { return kTransforms[static_cast<std::size_t>(var)].lag; }

double predictor_value(int var, double mu) {
  const Transform& t = kTransforms[static_cast<std::size_t>(var)];
  return t.center + t.coef * mu;
}

double predictor_inverse(int var, double value) {
  const Transform& t = kTransforms[static_cast<std::size_t>(var)];
  return (value - t.center) / t.coef;
}

double tp_from_mu(double mu) { return 12.0 * softplus(2.5 * mu - 0.5); }

}  // namespace synth_detail

GridSeriesDataset gen_advection(const SynthConfig& cfg) {
  check_config(cfg);
  const std::int64_t hours = cfg.hours;
  const int lead = cfg.lead_hours;
  const int max_lag = 2;

  // Latent field history: one value per (hour, cell), evolved on the torus.
  // Rainfall at hour u reads the field at u - lead, and a lag-d predictor at
  // hour t reads it at t - d, so the field must start max(lead, max_lag)
  // hours before the series does.
  const std::int64_t warmup = std::max<std::int64_t>(lead, max_lag);
  const std::int64_t field_len = hours + warmup;
  std::vector<std::array<double, kGridCells>> field(
      static_cast<std::size_t>(field_len));

  Rng dyn = Rng::stream(cfg.seed, 0x64796e31);  // latent dynamics stream
  constexpr std::array<double, kGridCells> kPhase = {0.0, 1.7, 3.1, 4.6};
  // cyclic neighbor on the 2x2 torus: 0 -> 1 -> 3 -> 2 -> 0
  constexpr std::array<int, kGridCells> kShift = {1, 3, 0, 2};

  std::array<double, kGridCells> lam;
  for (double& v : lam) v = dyn.uniform(-1.0, 1.0);
  for (std::int64_t step = 0; step < field_len; ++step) {
    field[static_cast<std::size_t>(step)] = lam;
    double mean = 0.0;
    for (double v : lam) mean += v;
    mean /= kGridCells;
    const double angle = 2.0 * 3.14159265358979323846 *
                         static_cast<double>(step) / 37.0;
    std::array<double, kGridCells> next;
    for (int cell = 0; cell < kGridCells; ++cell) {
      next[cell] = 0.5 * lam[kShift[cell]] + 0.2 * lam[cell] + 0.2 * mean +
                   0.45 * std::sin(angle + kPhase[cell]) +
                   0.05 * dyn.normal();
    }
    lam = next;
  }

  const bool noiseless =
      cfg.signal_to_noise == 0.0 || std::isinf(cfg.signal_to_noise);
  std::array<Rng, kNumPredictors> noise = {
      Rng::stream(cfg.seed, 0x6e730000), Rng::stream(cfg.seed, 0x6e730001),
      Rng::stream(cfg.seed, 0x6e730002), Rng::stream(cfg.seed, 0x6e730003),
      Rng::stream(cfg.seed, 0x6e730004), Rng::stream(cfg.seed, 0x6e730005),
      Rng::stream(cfg.seed, 0x6e730006), Rng::stream(cfg.seed, 0x6e730007),
      Rng::stream(cfg.seed, 0x6e730008), Rng::stream(cfg.seed, 0x6e730009),
      Rng::stream(cfg.seed, 0x6e73000a)};

  GridSeriesDataset ds;
  ds.start_hour = cfg.start_hour;
  ds.hours = hours;
  ds.values.assign(
      static_cast<std::size_t>(hours) * kNumVariables * kGridCells, 0.0);

  for (std::int64_t t = 0; t < hours; ++t) {
    for (int var = 0; var < kNumPredictors; ++var) {
      const Transform& tr = kTransforms[static_cast<std::size_t>(var)];
      const auto& src =
          field[static_cast<std::size_t>(warmup + t - tr.lag)];
      for (int cell = 0; cell < kGridCells; ++cell) {
        double v = synth_detail::predictor_value(
            var, synth_detail::latent_squash(src[cell]));
        if (!noiseless)
          v += std::abs(tr.coef) / (2.0 * cfg.signal_to_noise) *
               noise[static_cast<std::size_t>(var)].normal();
        ds.at(t, var, cell / kGridCols, cell % kGridCols) = v;
      }
    }
    const auto& tp_src = field[static_cast<std::size_t>(warmup + t - lead)];
    for (int cell = 0; cell < kGridCells; ++cell) {
      ds.at(t, kTpIndex, cell / kGridCols, cell % kGridCols) =
          synth_detail::tp_from_mu(synth_detail::latent_squash(tp_src[cell]));
    }
  }
  return ds;
}

GridSeriesDataset gen_correlated_noise(const SynthConfig& cfg) {
  check_config(cfg);
  const std::int64_t hours = cfg.hours;

  Rng base_rng = Rng::stream(cfg.seed, 0x62617365);
  std::array<Rng, kNumPredictors> noise = {
      Rng::stream(cfg.seed, 0x636e0000), Rng::stream(cfg.seed, 0x636e0001),
      Rng::stream(cfg.seed, 0x636e0002), Rng::stream(cfg.seed, 0x636e0003),
      Rng::stream(cfg.seed, 0x636e0004), Rng::stream(cfg.seed, 0x636e0005),
      Rng::stream(cfg.seed, 0x636e0006), Rng::stream(cfg.seed, 0x636e0007),
      Rng::stream(cfg.seed, 0x636e0008), Rng::stream(cfg.seed, 0x636e0009),
      Rng::stream(cfg.seed, 0x636e000a)};

  GridSeriesDataset ds;
  ds.start_hour = cfg.start_hour;
  ds.hours = hours;
  ds.values.assign(
      static_cast<std::size_t>(hours) * kNumVariables * kGridCells, 0.0);

  for (std::int64_t t = 0; t < hours; ++t) {
    const double x = base_rng.normal();
    for (int var = 0; var < kNumPredictors; ++var) {
      const double rho = cfg.planted_correlations[static_cast<std::size_t>(var)];
      const Transform& tr = kTransforms[static_cast<std::size_t>(var)];
      // a negative physical coefficient (sp falls when rainfall rises) would
      // flip the planted sign, so fold it into the mixing weight up front
      const double sgn = tr.coef < 0.0 ? -1.0 : 1.0;
      const double y = sgn * rho * x +
                       std::sqrt(1.0 - rho * rho) *
                           noise[static_cast<std::size_t>(var)].normal();
      for (int cell = 0; cell < kGridCells; ++cell) {
        // constant per-cell offset: affine in x, so correlations survive
        const double v = tr.center + tr.coef * (0.4 * y) +
                         tr.coef * 0.005 * cell;
        ds.at(t, var, cell / kGridCols, cell % kGridCols) = v;
      }
    }
    for (int cell = 0; cell < kGridCells; ++cell) {
      const double v = 0.8 * (x + 8.0) + 0.01 * cell;
      ds.at(t, kTpIndex, cell / kGridCols, cell % kGridCols) =
          std::max(v, 0.0);
    }
  }
  return ds;
}

GridSeriesDataset gen_dataset(const SynthConfig& cfg) {
  return cfg.dynamics == SynthDynamics::Advection ? gen_advection(cfg)
                                                  : gen_correlated_noise(cfg);
}

std::pair<std::vector<double>, std::vector<double>> gen_correlated_pair(
    std::uint64_t seed, double rho, std::size_t n) {
  if (!(std::abs(rho) <= 1.0))
    throw ValueError("gen_correlated_pair: |rho| must be <= 1");
  if (n < 2) throw ValueError("gen_correlated_pair: n must be >= 2");
  Rng rng = Rng::stream(seed, 0x70616972);
  std::vector<double> x(n), y(n);
  const double mix = std::sqrt(1.0 - rho * rho);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = rng.normal();
    y[k] = rho * x[k] + mix * rng.normal();
  }
  return {std::move(x), std::move(y)};
}

}  // namespace gridcast
