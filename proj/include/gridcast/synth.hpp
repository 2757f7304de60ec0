#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "gridcast/datapipe.hpp"

namespace gridcast {

enum class SynthDynamics {
  Advection,        // latent torus field; predictors carry lead-time signal
  CorrelatedNoise,  // planted per-variable correlations against rainfall
};

const char* dynamics_name(SynthDynamics d);
SynthDynamics dynamics_from_name(const std::string& name);

struct SynthConfig {
  std::uint64_t seed = 0;
  std::int64_t hours = 1024;  // at least 48
  SynthDynamics dynamics = SynthDynamics::Advection;
  // Predictor noise level for advection dynamics; 0 (or +inf) means
  // noiseless, in which case rainfall at t+lead is an exact function of the
  // predictors at t.
  double signal_to_noise = 0.0;
  int lead_hours = 6;  // lead at which the predictors encode rainfall
  EpochHour start_hour = 438288;  // 2020-01-01T00:00:00Z
  // Target Pearson correlation of each predictor with rainfall
  // (correlated-noise dynamics only).
  std::array<double, kNumPredictors> planted_correlations = {
      0.10, 0.15, 0.20, 0.30, 0.43, 0.35, 0.05, 0.08, 0.25, 0.20, -0.36};
};

// Latent smooth field on the 2x2 torus evolved by a seeded shift-and-mix rule
// with sinusoidal forcing; the 11 predictors are lagged monotone transforms
// of it in plausible physical ranges, and rainfall is a shifted softplus of
// the field lead_hours ahead of what the predictors encode.
GridSeriesDataset gen_advection(const SynthConfig& cfg);

// Per-hour Gaussian base drives rainfall affinely; each predictor is
// rho*base + sqrt(1-rho^2)*noise scaled affinely, so the planted correlations
// survive exactly in expectation.
GridSeriesDataset gen_correlated_noise(const SynthConfig& cfg);

// Dispatch on cfg.dynamics.
GridSeriesDataset gen_dataset(const SynthConfig& cfg);

// x standard normal, y = rho*x + sqrt(1-rho^2)*z; sample correlation
// approaches rho as n grows.
std::pair<std::vector<double>, std::vector<double>> gen_correlated_pair(
    std::uint64_t seed, double rho, std::size_t n);

// The advection construction, exposed so tests can verify the planted
// structure (rainfall recoverable from any lag-0 predictor).
namespace synth_detail {

double latent_squash(double lambda);              // tanh(lambda / 2)
int predictor_lag(int var);                       // hours behind the field
double predictor_value(int var, double mu);       // monotone map from squash
double predictor_inverse(int var, double value);  // its inverse
double tp_from_mu(double mu);                     // shifted softplus, > 0

}  // namespace synth_detail

}  // namespace gridcast
