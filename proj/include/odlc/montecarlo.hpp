#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odlc/qp_engine.hpp"
#include "odlc/stochastic_models.hpp"
#include "odlc/valley_engine.hpp"

namespace odlc {

enum class Engine { kValley, kQp };

std::string_view to_string(Engine engine);
/// Accepts "valley" or "qp"; throws ConfigError otherwise.
Engine parse_engine(std::string_view name);

/// How the QP engine turns a scenario's arrivals into devices.
struct FleetOptions {
  int devices_per_slot = 1;
  double p_max = 1e6;
};

/// Everything one seeded run needs.
struct SimulationSetup {
  BaseloadModel baseload;
  ArrivalModel arrivals;
  FleetOptions fleet;
  SolverOptions solver;
  std::string config_digest;

  int horizon() const noexcept { return baseload.horizon(); }
};

struct RunOutcome {
  ScenarioDraw scenario;
  AggregateTrajectory trajectory;
};

/// One seeded run through the chosen engine.
RunOutcome run_single(const SimulationSetup& setup, std::uint64_t seed,
                      Engine engine);

struct EnsembleResult {
  std::vector<double> samples;  // V of run i
  std::vector<std::uint64_t> seeds;
  Engine engine = Engine::kValley;
  std::string config_digest;
  long negative_deferrable_slots = 0;  // summed over runs
};

/// `count` runs with seeds derive_seed(base_seed, i). Runs are split into
/// contiguous seed ranges over `threads` workers (0 = hardware concurrency);
/// results are identical for every thread count. An engine failure is
/// rethrown as RunError carrying the seed of the lowest failing run.
EnsembleResult run_ensemble(const SimulationSetup& setup, int count,
                            std::uint64_t base_seed, Engine engine,
                            int threads = 1);

/// Right-continuous empirical CDF; tied samples collapse into one step.
struct CdfTable {
  std::vector<double> values;
  std::vector<double> probabilities;

  /// Fraction of samples <= x.
  double at(double x) const;
};

CdfTable empirical_cdf(std::span<const double> samples);
inline CdfTable empirical_cdf(const EnsembleResult& result) {
  return empirical_cdf(result.samples);
}

/// ⌈η·M⌉-th smallest sample (lower order statistic, no interpolation).
double empirical_percentile(std::span<const double> samples, double eta);
inline double empirical_percentile(const EnsembleResult& result, double eta) {
  return empirical_percentile(result.samples, eta);
}

struct SampleSummary {
  double mean = 0.0;
  double std_error = 0.0;           // of the mean
  double variance = 0.0;            // unbiased sample variance
  double variance_std_error = 0.0;  // sqrt((m4 - v²)/M) estimate
  double max = 0.0;
};

SampleSummary summarize(std::span<const double> samples);

/// Fraction of samples strictly greater than `threshold`.
double exceedance_fraction(std::span<const double> samples, double threshold);

}  // namespace odlc
