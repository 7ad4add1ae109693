#pragma once

#include <span>
#include <vector>

#include "odlc/stochastic_models.hpp"

namespace odlc {

/// Controlled aggregate load over the horizon. Arrays are 0-based (index k
/// holds slot k+1).
struct AggregateTrajectory {
  std::vector<double> d;       // aggregate load, kW
  std::vector<double> levels;  // flat level C(t) planned at each slot
  double variance = 0.0;       // load_variance(d)
  /// Slots where d(t) < b(t), i.e. the unconstrained aggregate asked the
  /// deferrable fleet for negative power. Reported, never clamped.
  int negative_deferrable_slots = 0;
};

/// Aggregate remaining-energy bookkeeping of the shrinking-horizon MPC.
struct RemainingEnergyState {
  double R = 0.0;  // Σ_{n <= N(t)} P_n(t), kWh
  int t = 1;
};

/// Flat level of a t-valley-filling schedule:
///   d(t) = (R + E[A(t)] + Σ_{τ=t..T} b_t(τ)) / (T - t + 1).
/// `b_t` spans the whole horizon; only slots t..T are read.
double valley_level(int t, double R, double expected_A,
                    std::span<const double> b_t);

/// Runs the MPC at aggregate level assuming a t-valley-filling schedule
/// exists at every slot. R(1) = a(1) and
///   R(t+1) = R(t) - (d(t) - b(t)) + a(t+1).
AggregateTrajectory run_valley_mpc(const ScenarioDraw& scenario,
                                   const BaseloadModel& baseload,
                                   const ArrivalModel& arrivals);

/// Remaining-energy trace R(1..T) of the same recursion.
std::vector<double> remaining_energy_trace(const ScenarioDraw& scenario,
                                           const BaseloadModel& baseload,
                                           const ArrivalModel& arrivals);

inline constexpr double kValleyFillingTol = 1e-6;

/// True iff max - min of the slice is within tol·(1 + |mean|).
bool check_valley_filling(std::span<const double> aggregate,
                          double tol = kValleyFillingTol);

}  // namespace odlc
