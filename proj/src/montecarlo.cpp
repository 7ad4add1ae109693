#include "odlc/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "odlc/errors.hpp"
#include "odlc/numeric.hpp"

namespace odlc {

std::string_view to_string(Engine engine) {
  return engine == Engine::kQp ? "qp" : "valley";
}

Engine parse_engine(std::string_view name) {
  if (name == "valley") return Engine::kValley;
  if (name == "qp") return Engine::kQp;
  throw ConfigError("unknown engine '" + std::string(name) +
                    "' (expected valley or qp)");
}

RunOutcome run_single(const SimulationSetup& setup, std::uint64_t seed,
                      Engine engine) {
  RunOutcome out;
  out.scenario =
      sample_scenario(setup.baseload, setup.arrivals, setup.horizon(), seed);
  if (engine == Engine::kValley) {
    out.trajectory = run_valley_mpc(out.scenario, setup.baseload, setup.arrivals);
  } else {
    const auto loads = loads_from_arrivals(out.scenario, setup.fleet.devices_per_slot,
                                           setup.fleet.p_max);
    out.trajectory =
        run_mpc(loads, out.scenario, setup.baseload, setup.arrivals, setup.solver)
            .trajectory;
  }
  return out;
}

EnsembleResult run_ensemble(const SimulationSetup& setup, int count,
                            std::uint64_t base_seed, Engine engine, int threads) {
  if (count < 1) throw std::invalid_argument("run_ensemble: count must be >= 1");
  setup.baseload.validate();
  setup.arrivals.validate();

  EnsembleResult result;
  result.engine = engine;
  result.config_digest = setup.config_digest;
  const auto n = static_cast<std::size_t>(count);
  result.samples.resize(n);
  result.seeds.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.seeds[i] = derive_seed(base_seed, i);
  std::vector<int> negatives(n, 0);

  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto workers = static_cast<std::size_t>(std::min(threads, count));

  // failures[w] holds the first error of worker w; its chunk is ordered, so
  // the lowest failing run overall belongs to the lowest failing worker.
  std::vector<std::exception_ptr> failures(workers);
  auto work = [&](std::size_t w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const auto run = run_single(setup, result.seeds[i], engine);
        result.samples[i] = run.trajectory.variance;
        negatives[i] = run.trajectory.negative_deferrable_slots;
      } catch (const Error& e) {
        failures[w] = std::make_exception_ptr(
            RunError(e.category(), result.seeds[i], e.what()));
        return;
      } catch (const std::exception& e) {
        failures[w] = std::make_exception_ptr(
            RunError(ErrorCategory::kInternal, result.seeds[i], e.what()));
        return;
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  for (int k : negatives) result.negative_deferrable_slots += k;
  return result;
}

double CdfTable::at(double x) const {
  const auto it = std::upper_bound(values.begin(), values.end(), x);
  if (it == values.begin()) return 0.0;
  return probabilities[static_cast<std::size_t>(it - values.begin()) - 1];
}

CdfTable empirical_cdf(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("empirical_cdf: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double M = static_cast<double>(sorted.size());
  CdfTable cdf;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.values.push_back(sorted[i]);
    cdf.probabilities.push_back(static_cast<double>(i + 1) / M);
  }
  return cdf;
}

double empirical_percentile(std::span<const double> samples, double eta) {
  if (samples.empty()) throw std::invalid_argument("empirical_percentile: no samples");
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::out_of_range("empirical_percentile: eta must lie in (0, 1)");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  const auto M = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(eta * static_cast<double>(M)));
  rank = std::clamp<std::size_t>(rank, 1, M);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

SampleSummary summarize(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("summarize: no samples");
  const double M = static_cast<double>(samples.size());
  SampleSummary s;
  s.mean = compensated_sum(samples) / M;
  CompensatedSum m2;
  CompensatedSum m4;
  for (double x : samples) {
    const double d2 = (x - s.mean) * (x - s.mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double central2 = m2.value() / M;
  const double central4 = m4.value() / M;
  s.variance = samples.size() > 1 ? m2.value() / (M - 1.0) : 0.0;
  s.std_error = std::sqrt(s.variance / M);
  s.variance_std_error = std::sqrt(std::max(0.0, central4 - central2 * central2) / M);
  s.max = *std::max_element(samples.begin(), samples.end());
  return s;
}

double exceedance_fraction(std::span<const double> samples, double threshold) {
  if (samples.empty()) throw std::invalid_argument("exceedance_fraction: no samples");
  const auto hits = std::count_if(samples.begin(), samples.end(),
                                  [&](double x) { return x > threshold; });
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace odlc
