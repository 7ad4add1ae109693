#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "odlc/stochastic_models.hpp"

namespace odlc {

struct ErrorBounds {
  double eps1 = 0.0;  // arrival deviation bound
  double eps2 = 0.0;  // baseload error bound

  double eps() const noexcept { return eps1 > eps2 ? eps1 : eps2; }
};

/// V = (1/T) Σ_t (d(t) - mean(d))². Throws std::invalid_argument when empty.
double load_variance(std::span<const double> d);

/// B_{tτ} = (τ-1)/(T(T-τ+1)) for τ <= t, -1/T for τ > t (1-based).
Eigen::MatrixXd arrival_error_matrix(int T);

/// C_{tτ} = B_{tτ} · F(T-τ).
Eigen::MatrixXd baseload_error_matrix(int T, const CausalFilter& filter);

/// Split of the aggregate load variance into its error sources.
///
/// With x = a - λ, v1 = ‖Bx‖²/T and v2 = ‖Ce‖²/T. The valley recursion
/// produces d - mean(d) = Bx + Ce exactly, so the realized variance is
/// v1 + v2 + cross with cross = (2/T)(Bx)·(Ce); cross vanishes in
/// expectation and whenever either error source is silent.
struct VDecomposition {
  double v1 = 0.0;
  double v2 = 0.0;
  double cross = 0.0;

  double total() const noexcept { return v1 + v2 + cross; }
};

VDecomposition v_decomposition(const ScenarioDraw& scenario,
                               const CausalFilter& filter, double lambda,
                               int T);

/// E[V] = (s²/T) Σ_{t=2..T} 1/t + (σ²/T²) Σ_{t=0..T-1} F²(t)(T-t-1)/(t+1).
double expected_variance(int T, double s, double sigma,
                         const CausalFilter& filter);

/// Closed-form worst-case variance:
///   ε₁²(1 - H_T/T) + (ε₂²/T²) Σ_{τ,s} (T/(τ∨s+1) - 1)|F(τ)F(s)|.
/// It is the sum of the separate suprema of v1 and v2.
double worst_case_variance(int T, const ErrorBounds& bounds,
                           const CausalFilter& filter);

/// Supremum of the variance the recursion actually realizes when both
/// error sources are bounded, (1/T²) Σ_{τ,s} (A_{τs} - 1) w(τ) w(s) with
/// w(τ) = ε₁ + ε₂|F(T-τ)|. Equals worst_case_variance plus the coupling
/// term 2ε₁ε₂(1/T²) Σ (A - 1)|F|, hence the two agree when ε₁ε₂ = 0.
double coupled_worst_case_variance(int T, const ErrorBounds& bounds,
                                   const CausalFilter& filter);

/// Concentration rate as stated with the tail bound:
///   max(ln T / T, (1/T²) Σ_{t=0..T-1} F²(t)(T-t+1)/(t+1)).  Requires T >= 2.
double lambda1(int T, const CausalFilter& filter);

/// Same maximum with the trace factor (T-t-1)/(t+1) that falls out of
/// tr(CCᵀ)/T. Never larger than lambda1().
double lambda1_trace(int T, const CausalFilter& filter);

/// exp(-dev² / (16 ε² λ₁ (2 E[V] + dev))). Returns 1 at dev = 0 and 0 when
/// ε or λ₁ vanish with dev > 0.
double bernstein_tail(double dev, double expected_v, const ErrorBounds& bounds,
                      double lambda1);

/// Smallest c with bernstein_tail(c - E[V]) <= 1 - η, in closed form.
double percentile_bound(double eta, double expected_v,
                        const ErrorBounds& bounds, double lambda1);

/// (4ε₁ s ln T / T)² + (4ε₂σ/T² Σ F²(t)(T-t+1)/(t+1))².  Requires T >= 2.
double variance_upper_bound(int T, const ErrorBounds& bounds, double s,
                            double sigma, const CausalFilter& filter);

/// min(1, variance_bound / dev²); dev must be positive.
double chebyshev_tail(double dev, double variance_bound);

struct TailPoint {
  double deviation = 0.0;
  double bound = 0.0;
};

struct AnalyticReport {
  double expected_v = 0.0;
  double worst_case_v = 0.0;
  double coupled_worst_case_v = 0.0;
  double lambda1 = 0.0;        // (T-t+1)/(t+1) weights, used by the bounds
  double lambda1_trace = 0.0;  // trace form, reported alongside
  double variance_bound = 0.0;
  double percentile_bound_90 = 0.0;
  std::vector<TailPoint> tail_curve;
};

/// Evaluates every closed form for one environment. The tail curve samples
/// `points` deviations evenly on [0, percentile_bound(0.999) - E[V]].
AnalyticReport make_analytic_report(const BaseloadModel& baseload,
                                    const ArrivalModel& arrivals,
                                    int points = 21);

}  // namespace odlc
