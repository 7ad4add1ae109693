#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "odlc/stochastic_models.hpp"
#include "odlc/valley_engine.hpp"

namespace odlc {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One deferrable device. Slots are 1-based; bound arrays have length T and
/// are zero outside [arrival, deadline].
struct DeferrableLoad {
  int arrival = 1;
  int deadline = 1;
  std::vector<double> p_min;  // kW
  std::vector<double> p_max;  // kW
  double energy = 0.0;        // P_n, kWh

  /// Box [lo, hi] on every slot of [arrival, deadline], zero elsewhere.
  static DeferrableLoad windowed(int arrival, int deadline, double energy,
                                 double lo, double hi, int T);

  /// Throws ConfigError when the load is malformed or cannot be served.
  void validate(int T) const;
};

/// Bounds of the pseudo-load q over slots t..T (index 0 is slot t).
struct PseudoLoadBounds {
  std::vector<double> q_min;
  std::vector<double> q_max;
  double total = 0.0;  // E[A(t)]

  /// q(t) = 0, q(τ) ∈ [0, E[A(t)]] for τ > t.
  static PseudoLoadBounds fallback(int t, int T, double expected_A);
};

enum class StepRule {
  kInverseLipschitz,  // fixed step 1/L, L = 2·(active profiles)
};

struct SolverOptions {
  double kkt_tol = 1e-8;
  int max_iters = 50'000;
  StepRule step_rule = StepRule::kInverseLipschitz;
  /// Keep the objective after every iteration in Schedule::objective_trace.
  bool record_objective = false;

  void validate() const;
};

/// Solution of one scheduling QP over slots first_slot..T.
struct Schedule {
  int first_slot = 1;
  RowMatrix p;                     // device × slot
  std::vector<double> q;           // pseudo-load
  std::vector<double> aggregate;   // Σ p + q + forecast baseload
  double objective = 0.0;          // Σ aggregate²
  int iterations = 0;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;
};

/// Initial iterate for solve_odlc_t. Rows cover slots t..T for the first
/// p.size() loads; the remaining loads start from a projected flat profile.
struct WarmStart {
  std::vector<std::vector<double>> p;
  std::vector<double> q;
};

/// Euclidean projection of v onto {x : lower <= x <= upper, Σx = total},
/// computed as clip(v + μ, lower, upper) with μ found by bisection; the
/// final rounding residual is spread over interior coordinates so that the
/// sum matches `total` to machine precision.
/// Throws SolverError(kInfeasible) when Σlower <= total <= Σupper fails and
/// SolverError(kNonConvergence) if the bracket cannot be closed.
std::vector<double> project_box_sum(std::span<const double> v,
                                    std::span<const double> lower,
                                    std::span<const double> upper,
                                    double total);

/// Solves the shrinking-horizon problem at slot t:
///   min Σ_{τ=t..T} (Σ_n p_n(τ) + q(τ) + b_t(τ))²
/// subject to each load's box and remaining energy `remaining[n]`, and the
/// pseudo-load box with Σq = E[A(t)]. Projected gradient on the stacked
/// profiles; t = T is solved by direct assignment.
Schedule solve_odlc_t(std::span<const double> b_t, double expected_A,
                      std::span<const DeferrableLoad> loads,
                      std::span<const double> remaining,
                      const PseudoLoadBounds& pseudo, int t,
                      const SolverOptions& opts,
                      const WarmStart* warm = nullptr);

/// Full-information problem over the whole horizon for realized baseload b.
Schedule solve_odlc_offline(std::span<const DeferrableLoad> loads,
                            std::span<const double> b,
                            const SolverOptions& opts);

struct MpcRun {
  AggregateTrajectory trajectory;
  std::vector<Schedule> history;  // one solve per slot
};

/// Device-level shrinking-horizon MPC: at each slot update the forecast,
/// solve over loads that have arrived, commit p_n(t), and carry
/// P_n(t+1) = P_n(t) - p_n(t). Loads arriving at slot t must carry a total
/// energy equal to scenario.a(t).
MpcRun run_mpc(std::span<const DeferrableLoad> loads,
               const ScenarioDraw& scenario, const BaseloadModel& baseload,
               const ArrivalModel& arrivals, const SolverOptions& opts);

/// Splits each slot's arriving energy a(t) evenly over `devices_per_slot`
/// loads with window [t, T] and box [0, p_max].
std::vector<DeferrableLoad> loads_from_arrivals(const ScenarioDraw& scenario,
                                                int devices_per_slot,
                                                double p_max);

}  // namespace odlc
