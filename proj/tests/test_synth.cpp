#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "gridcast/datapipe.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/synth.hpp"

using namespace gridcast;
namespace fs = std::filesystem;

namespace {

bool same_dataset(const GridSeriesDataset& a, const GridSeriesDataset& b) {
  return a.start_hour == b.start_hour && a.hours == b.hours &&
         a.values == b.values;
}

}  // namespace

TEST_CASE("generators are deterministic in the seed") {
  SynthConfig cfg;
  cfg.seed = 42;
  cfg.hours = 96;

  SUBCASE("advection") {
    cfg.dynamics = SynthDynamics::Advection;
    CHECK(same_dataset(gen_advection(cfg), gen_advection(cfg)));
    SynthConfig other = cfg;
    other.seed = 43;
    CHECK(!same_dataset(gen_advection(cfg), gen_advection(other)));
  }
  SUBCASE("correlated noise") {
    cfg.dynamics = SynthDynamics::CorrelatedNoise;
    CHECK(same_dataset(gen_correlated_noise(cfg), gen_correlated_noise(cfg)));
    SynthConfig other = cfg;
    other.seed = 43;
    CHECK(!same_dataset(gen_correlated_noise(cfg),
                        gen_correlated_noise(other)));
  }
  SUBCASE("gen_dataset dispatches on dynamics") {
    cfg.dynamics = SynthDynamics::Advection;
    CHECK(same_dataset(gen_dataset(cfg), gen_advection(cfg)));
    cfg.dynamics = SynthDynamics::CorrelatedNoise;
    CHECK(same_dataset(gen_dataset(cfg), gen_correlated_noise(cfg)));
  }
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.hours = 47;
  CHECK_THROWS_AS(gen_advection(cfg), ValueError);
  CHECK_THROWS_AS(gen_correlated_noise(cfg), ValueError);
  cfg.hours = 48;
  CHECK_NOTHROW(gen_advection(cfg));

  SynthConfig bad_snr;
  bad_snr.hours = 48;
  bad_snr.signal_to_noise = -1.0;
  CHECK_THROWS_AS(gen_advection(bad_snr), ValueError);

  SynthConfig bad_rho;
  bad_rho.hours = 48;
  bad_rho.planted_correlations[3] = 1.5;
  CHECK_THROWS_AS(gen_correlated_noise(bad_rho), ValueError);

  CHECK(dynamics_from_name("advection") == SynthDynamics::Advection);
  CHECK(dynamics_from_name("correlated-noise") ==
        SynthDynamics::CorrelatedNoise);
  CHECK_THROWS_AS(dynamics_from_name("brownian"), DataError);
  CHECK(std::string(dynamics_name(SynthDynamics::Advection)) == "advection");
  CHECK(std::string(dynamics_name(SynthDynamics::CorrelatedNoise)) ==
        "correlated-noise");
}

TEST_CASE("advection output stays in plausible physical ranges") {
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.hours = 200;
  const GridSeriesDataset ds = gen_advection(cfg);
  CHECK(ds.start_hour == cfg.start_hour);
  CHECK(ds.hours == 200);
  for (std::int64_t h = 0; h < ds.hours; ++h) {
    for (int r = 0; r < kGridRows; ++r) {
      for (int c = 0; c < kGridCols; ++c) {
        CHECK(ds.at(h, kTpIndex, r, c) > 0.0);      // rainfall
        CHECK(ds.at(h, kTpIndex, r, c) < 40.0);
        CHECK(ds.at(h, 0, r, c) > 210.0);           // t250 in K
        CHECK(ds.at(h, 0, r, c) < 234.0);
        CHECK(ds.at(h, 10, r, c) > 99000.0);        // sp in Pa
        CHECK(ds.at(h, 10, r, c) < 102600.0);
      }
    }
  }
}

TEST_CASE("noiseless advection encodes rainfall exactly in the predictors") {
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.hours = 120;
  cfg.lead_hours = 6;
  const GridSeriesDataset ds = gen_advection(cfg);

  double worst = 0.0;
  // lag-0 predictors: rainfall lead hours later is a fixed transform
  for (int var : {2, 4, 7, 10}) {
    REQUIRE(synth_detail::predictor_lag(var) == 0);
    for (std::int64_t t = 0; t + cfg.lead_hours < ds.hours; ++t) {
      for (int r = 0; r < kGridRows; ++r) {
        for (int c = 0; c < kGridCols; ++c) {
          const double mu = synth_detail::predictor_inverse(
              var, ds.at(t, var, r, c));
          const double want = synth_detail::tp_from_mu(mu);
          const double got = ds.at(t + cfg.lead_hours, kTpIndex, r, c);
          worst = std::max(worst, std::abs(got - want));
        }
      }
    }
  }
  // a lagged predictor sees the field lag hours late, shifting the match
  const int lagged = 0;  // t250, lag 2
  const int lag = synth_detail::predictor_lag(lagged);
  REQUIRE(lag == 2);
  for (std::int64_t t = lag; t - lag + cfg.lead_hours < ds.hours; ++t) {
    for (int r = 0; r < kGridRows; ++r) {
      for (int c = 0; c < kGridCols; ++c) {
        const double mu = synth_detail::predictor_inverse(
            lagged, ds.at(t, lagged, r, c));
        const double want = synth_detail::tp_from_mu(mu);
        const double got =
            ds.at(t - lag + cfg.lead_hours, kTpIndex, r, c);
        worst = std::max(worst, std::abs(got - want));
      }
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("lead_hours moves where the signal sits") {
  SynthConfig cfg;
  cfg.seed = 13;
  cfg.hours = 100;
  cfg.lead_hours = 9;
  const GridSeriesDataset ds = gen_advection(cfg);
  double worst = 0.0;
  for (std::int64_t t = 0; t + 9 < ds.hours; ++t)
    for (int r = 0; r < kGridRows; ++r)
      for (int c = 0; c < kGridCols; ++c) {
        const double mu =
            synth_detail::predictor_inverse(4, ds.at(t, 4, r, c));
        worst = std::max(worst, std::abs(ds.at(t + 9, kTpIndex, r, c) -
                                         synth_detail::tp_from_mu(mu)));
      }
  CHECK(worst < 1e-9);
}

TEST_CASE("zero and infinite signal_to_noise both mean noiseless") {
  SynthConfig a;
  a.seed = 17;
  a.hours = 64;
  a.signal_to_noise = 0.0;
  SynthConfig b = a;
  b.signal_to_noise = std::numeric_limits<double>::infinity();
  CHECK(same_dataset(gen_advection(a), gen_advection(b)));

  SynthConfig noisy = a;
  noisy.signal_to_noise = 4.0;
  const GridSeriesDataset nds = gen_advection(noisy);
  CHECK(!same_dataset(gen_advection(a), nds));
  // noise perturbs predictors but never the rainfall channel
  const GridSeriesDataset clean = gen_advection(a);
  for (std::int64_t h = 0; h < clean.hours; ++h)
    for (int r = 0; r < kGridRows; ++r)
      for (int c = 0; c < kGridCols; ++c)
        CHECK(nds.at(h, kTpIndex, r, c) == clean.at(h, kTpIndex, r, c));
}

TEST_CASE("synth_detail transforms invert cleanly") {
  for (int var = 0; var < kNumPredictors; ++var) {
    for (double mu : {-0.95, -0.4, 0.0, 0.3, 0.99}) {
      const double v = synth_detail::predictor_value(var, mu);
      CHECK(synth_detail::predictor_inverse(var, v) ==
            doctest::Approx(mu).epsilon(1e-12));
    }
  }
  CHECK(synth_detail::latent_squash(0.0) == 0.0);
  CHECK(synth_detail::latent_squash(1e9) == doctest::Approx(1.0));
  // softplus-based rainfall is positive and increasing
  CHECK(synth_detail::tp_from_mu(-1.0) > 0.0);
  CHECK(synth_detail::tp_from_mu(0.5) > synth_detail::tp_from_mu(-0.5));
}

TEST_CASE("generated data survives the CSV pipeline") {
  const fs::path path = fs::temp_directory_path() /
                        ("gridcast_synth_" + std::to_string(::getpid()) +
                         ".csv");
  for (SynthDynamics dyn :
       {SynthDynamics::Advection, SynthDynamics::CorrelatedNoise}) {
    SynthConfig cfg;
    cfg.seed = 23;
    cfg.hours = 48;
    cfg.dynamics = dyn;
    const GridSeriesDataset ds = gen_dataset(cfg);
    save_csv(ds, path.string());
    const GridSeriesDataset back = load_csv(path.string());
    CHECK(same_dataset(ds, back));
  }
  std::error_code ec;
  fs::remove(path, ec);
}

TEST_CASE("gen_correlated_pair endpoints and determinism") {
  const auto [x1, y1] = gen_correlated_pair(5, 1.0, 500);
  CHECK(pearson_cc(x1, y1) == 1.0);
  CHECK(x1 == y1);

  const auto [x2, y2] = gen_correlated_pair(5, -1.0, 500);
  CHECK(pearson_cc(x2, y2) == -1.0);

  const auto [x3, y3] = gen_correlated_pair(5, 0.0, 10000);
  CHECK(std::abs(pearson_cc(x3, y3)) < 0.03);

  const auto [x4, y4] = gen_correlated_pair(5, 0.43, 40000);
  CHECK(std::abs(pearson_cc(x4, y4) - 0.43) < 0.02);

  const auto again = gen_correlated_pair(5, 0.43, 40000);
  CHECK(again.first == x4);
  CHECK(again.second == y4);

  CHECK_THROWS_AS(gen_correlated_pair(1, 1.5, 100), ValueError);
  CHECK_THROWS_AS(gen_correlated_pair(1, 0.5, 1), ValueError);
}

TEST_CASE("correlated noise plants every default correlation") {
  SynthConfig cfg;
  cfg.seed = 29;
  cfg.hours = 20000;
  cfg.dynamics = SynthDynamics::CorrelatedNoise;
  const GridSeriesDataset ds = gen_correlated_noise(cfg);
  CHECK(ds.hours == 20000);
  const CorrelationMatrix m = correlation_matrix(ds);
  for (int var = 0; var < kNumPredictors; ++var) {
    REQUIRE(m.is_defined(var, kTpIndex));
    CHECK(std::abs(m.at(var, kTpIndex) - cfg.planted_correlations[var]) <
          0.03);
  }
  // rainfall stays non-negative
  for (std::int64_t h = 0; h < ds.hours; ++h)
    for (int r = 0; r < kGridRows; ++r)
      for (int c = 0; c < kGridCols; ++c)
        CHECK(ds.at(h, kTpIndex, r, c) >= 0.0);
}

TEST_CASE("custom planted correlations are honored") {
  SynthConfig cfg;
  cfg.seed = 31;
  cfg.hours = 20000;
  cfg.dynamics = SynthDynamics::CorrelatedNoise;
  cfg.planted_correlations = {0.9, -0.5, 0.0, 0.2, -0.2, 0.6,
                              0.1, -0.7, 0.0, 0.5, -0.9};
  const GridSeriesDataset ds = gen_correlated_noise(cfg);
  const CorrelationMatrix m = correlation_matrix(ds);
  for (int var = 0; var < kNumPredictors; ++var)
    CHECK(std::abs(m.at(var, kTpIndex) - cfg.planted_correlations[var]) <
          0.03);
}
