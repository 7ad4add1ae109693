#include "odlc/valley_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "odlc/analytics.hpp"
#include "odlc/numeric.hpp"

namespace odlc {

double valley_level(int t, double R, double expected_A,
                    std::span<const double> b_t) {
  const int T = static_cast<int>(b_t.size());
  if (t < 1 || t > T) throw std::out_of_range("valley_level: t outside [1, T]");
  CompensatedSum acc;
  acc += R;
  acc += expected_A;
  for (int tau = t; tau <= T; ++tau) acc += b_t[static_cast<std::size_t>(tau - 1)];
  return acc.value() / static_cast<double>(T - t + 1);
}

namespace {

void check_scenario(const ScenarioDraw& scenario, const BaseloadModel& baseload) {
  const auto T = static_cast<std::size_t>(baseload.horizon());
  if (scenario.e.size() != T || scenario.a.size() != T ||
      scenario.realized_baseload.size() != T) {
    throw std::invalid_argument("scenario does not cover the horizon T");
  }
}

// Shared forward pass; `on_step(t, R, d)` observes each slot.
template <typename OnStep>
void valley_pass(const ScenarioDraw& scenario, const BaseloadModel& baseload,
                 const ArrivalModel& arrivals, OnStep&& on_step) {
  check_scenario(scenario, baseload);
  const int T = baseload.horizon();
  // b_t is advanced one observation at a time: b_t = b_{t-1} + e(t) f(· - t).
  std::vector<double> forecast(baseload.mean_profile);
  double R = scenario.a[0];
  for (int t = 1; t <= T; ++t) {
    const double e_t = scenario.e[static_cast<std::size_t>(t - 1)];
    for (int tau = t; tau <= T; ++tau) {
      forecast[static_cast<std::size_t>(tau - 1)] += e_t * baseload.filter.at(tau - t);
    }
    const double d = valley_level(t, R, expected_future_arrivals(arrivals, t, T),
                                  forecast);
    on_step(t, R, d);
    const double b = scenario.realized_baseload[static_cast<std::size_t>(t - 1)];
    R = R - (d - b);
    if (t < T) R += scenario.a[static_cast<std::size_t>(t)];
  }
}

}  // namespace

AggregateTrajectory run_valley_mpc(const ScenarioDraw& scenario,
                                   const BaseloadModel& baseload,
                                   const ArrivalModel& arrivals) {
  AggregateTrajectory out;
  const auto T = static_cast<std::size_t>(baseload.horizon());
  out.d.reserve(T);
  out.levels.reserve(T);
  valley_pass(scenario, baseload, arrivals, [&](int t, double, double d) {
    out.d.push_back(d);
    out.levels.push_back(d);
    if (d < scenario.realized_baseload[static_cast<std::size_t>(t - 1)]) {
      ++out.negative_deferrable_slots;
    }
  });
  out.variance = load_variance(out.d);
  return out;
}

std::vector<double> remaining_energy_trace(const ScenarioDraw& scenario,
                                           const BaseloadModel& baseload,
                                           const ArrivalModel& arrivals) {
  std::vector<double> R;
  R.reserve(static_cast<std::size_t>(baseload.horizon()));
  valley_pass(scenario, baseload, arrivals,
              [&](int, double r, double) { R.push_back(r); });
  return R;
}

bool check_valley_filling(std::span<const double> aggregate, double tol) {
  if (aggregate.empty()) {
    throw std::invalid_argument("check_valley_filling: empty slice");
  }
  const auto [lo, hi] = std::minmax_element(aggregate.begin(), aggregate.end());
  const double mean =
      compensated_sum(aggregate) / static_cast<double>(aggregate.size());
  return (*hi - *lo) <= tol * (1.0 + std::abs(mean));
}

}  // namespace odlc
