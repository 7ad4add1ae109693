#include "odlc/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "odlc/errors.hpp"
#include "odlc/numeric.hpp"

namespace odlc {

namespace {

void require_horizon(int T, int minimum, const char* who) {
  if (T < minimum) {
    throw std::invalid_argument(std::string(who) + ": T must be >= " +
                                std::to_string(minimum));
  }
}

// (1/T²) Σ_{t=0..T-1} F²(t) (T - t + shift)/(t + 1).
double filter_energy(int T, const CausalFilter& filter, int shift) {
  CompensatedSum acc;
  for (int t = 0; t < T; ++t) {
    const double F = filter.cumulative(t);
    acc += F * F * static_cast<double>(T - t + shift) / static_cast<double>(t + 1);
  }
  const double TT = static_cast<double>(T);
  return acc.value() / (TT * TT);
}

}  // namespace

double load_variance(std::span<const double> d) {
  if (d.empty()) throw std::invalid_argument("load_variance: empty load profile");
  const double n = static_cast<double>(d.size());
  const double mean = compensated_sum(d) / n;
  CompensatedSum acc;
  for (double x : d) acc += (x - mean) * (x - mean);
  return acc.value() / n;
}

Eigen::MatrixXd arrival_error_matrix(int T) {
  require_horizon(T, 1, "arrival_error_matrix");
  const double TT = static_cast<double>(T);
  Eigen::MatrixXd B(T, T);
  for (int t = 1; t <= T; ++t) {
    for (int tau = 1; tau <= T; ++tau) {
      B(t - 1, tau - 1) = tau <= t ? (tau - 1) / (TT * (T - tau + 1)) : -1.0 / TT;
    }
  }
  return B;
}

Eigen::MatrixXd baseload_error_matrix(int T, const CausalFilter& filter) {
  Eigen::MatrixXd C = arrival_error_matrix(T);
  for (int tau = 1; tau <= T; ++tau) C.col(tau - 1) *= filter.cumulative(T - tau);
  return C;
}

VDecomposition v_decomposition(const ScenarioDraw& scenario,
                               const CausalFilter& filter, double lambda,
                               int T) {
  require_horizon(T, 1, "v_decomposition");
  if (scenario.horizon() != T || static_cast<int>(scenario.a.size()) != T) {
    throw std::invalid_argument("v_decomposition: scenario length != T");
  }
  Eigen::VectorXd x(T);
  Eigen::VectorXd e(T);
  for (int k = 0; k < T; ++k) {
    x(k) = scenario.a[static_cast<std::size_t>(k)] - lambda;
    e(k) = scenario.e[static_cast<std::size_t>(k)];
  }
  const Eigen::VectorXd Bx = arrival_error_matrix(T) * x;
  const Eigen::VectorXd Ce = baseload_error_matrix(T, filter) * e;
  const double TT = static_cast<double>(T);
  return {Bx.squaredNorm() / TT, Ce.squaredNorm() / TT, 2.0 * Bx.dot(Ce) / TT};
}

double expected_variance(int T, double s, double sigma,
                         const CausalFilter& filter) {
  require_horizon(T, 1, "expected_variance");
  const double TT = static_cast<double>(T);
  const double arrival_part = s * s / TT * (harmonic_number(T) - 1.0);
  return arrival_part + sigma * sigma * filter_energy(T, filter, -1);
}

double worst_case_variance(int T, const ErrorBounds& bounds,
                           const CausalFilter& filter) {
  require_horizon(T, 1, "worst_case_variance");
  const double TT = static_cast<double>(T);
  const double arrival_part =
      bounds.eps1 * bounds.eps1 * (1.0 - harmonic_number(T) / TT);

  // Σ_{τ,s} w(τ∨s)|F(τ)||F(s)| grouped by k = τ∨s:
  //   Σ_k w(k) (|F(k)|² + 2|F(k)| Σ_{j<k}|F(j)|),  w(k) = T/(k+1) - 1.
  CompensatedSum pair_sum;
  CompensatedSum prefix;
  for (int k = 0; k < T; ++k) {
    const double G = std::abs(filter.cumulative(k));
    const double w = TT / (k + 1) - 1.0;
    pair_sum += w * G * (G + 2.0 * prefix.value());
    prefix += G;
  }
  return arrival_part + bounds.eps2 * bounds.eps2 / (TT * TT) * pair_sum.value();
}

double coupled_worst_case_variance(int T, const ErrorBounds& bounds,
                                   const CausalFilter& filter) {
  require_horizon(T, 1, "coupled_worst_case_variance");
  const double TT = static_cast<double>(T);
  // Σ_{τ,s} c(τ∧s) w(τ) w(s) grouped by m = τ∧s, c(m) = (m-1)/(T-m+1).
  std::vector<double> w(static_cast<std::size_t>(T));
  for (int tau = 1; tau <= T; ++tau) {
    w[static_cast<std::size_t>(tau - 1)] =
        bounds.eps1 + bounds.eps2 * std::abs(filter.cumulative(T - tau));
  }
  CompensatedSum total;
  CompensatedSum suffix;
  for (int m = T; m >= 1; --m) {
    const double wm = w[static_cast<std::size_t>(m - 1)];
    const double c = static_cast<double>(m - 1) / (T - m + 1);
    total += c * wm * (wm + 2.0 * suffix.value());
    suffix += wm;
  }
  return total.value() / (TT * TT);
}

double lambda1(int T, const CausalFilter& filter) {
  require_horizon(T, 2, "lambda1");
  return std::max(std::log(static_cast<double>(T)) / T,
                  filter_energy(T, filter, +1));
}

double lambda1_trace(int T, const CausalFilter& filter) {
  require_horizon(T, 2, "lambda1_trace");
  return std::max(std::log(static_cast<double>(T)) / T,
                  filter_energy(T, filter, -1));
}

double bernstein_tail(double dev, double expected_v, const ErrorBounds& bounds,
                      double lambda1) {
  if (!(dev >= 0.0)) throw std::invalid_argument("bernstein_tail: dev must be >= 0");
  if (dev == 0.0) return 1.0;
  const double eps = bounds.eps();
  const double scale = 16.0 * eps * eps * lambda1;
  if (scale <= 0.0) return 0.0;
  return std::exp(-dev * dev / (scale * (2.0 * expected_v + dev)));
}

double percentile_bound(double eta, double expected_v,
                        const ErrorBounds& bounds, double lambda1) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("percentile_bound: eta must lie in (0, 1)");
  }
  const double eps = bounds.eps();
  const double beta = 16.0 * eps * eps * lambda1 * -std::log1p(-eta);
  const double dev = 0.5 * (beta + std::sqrt(beta * beta + 8.0 * beta * expected_v));
  return expected_v + dev;
}

double variance_upper_bound(int T, const ErrorBounds& bounds, double s,
                            double sigma, const CausalFilter& filter) {
  require_horizon(T, 2, "variance_upper_bound");
  const double arrival_term =
      4.0 * bounds.eps1 * s * std::log(static_cast<double>(T)) / T;
  const double baseload_term =
      4.0 * bounds.eps2 * sigma * filter_energy(T, filter, +1);
  return arrival_term * arrival_term + baseload_term * baseload_term;
}

double chebyshev_tail(double dev, double variance_bound) {
  if (!(dev > 0.0)) throw std::invalid_argument("chebyshev_tail: dev must be > 0");
  return std::min(1.0, variance_bound / (dev * dev));
}

AnalyticReport make_analytic_report(const BaseloadModel& baseload,
                                    const ArrivalModel& arrivals, int points) {
  const int T = baseload.horizon();
  if (T < 2) throw ConfigError("analytic bounds require T >= 2");
  if (points < 2) throw std::invalid_argument("tail curve needs >= 2 points");
  const ErrorBounds bounds{arrivals.eps1, baseload.eps2};
  const CausalFilter& f = baseload.filter;

  AnalyticReport r;
  r.expected_v = expected_variance(T, arrivals.s, baseload.sigma, f);
  r.worst_case_v = worst_case_variance(T, bounds, f);
  r.coupled_worst_case_v = coupled_worst_case_variance(T, bounds, f);
  r.lambda1 = lambda1(T, f);
  r.lambda1_trace = lambda1_trace(T, f);
  r.variance_bound =
      variance_upper_bound(T, bounds, arrivals.s, baseload.sigma, f);
  r.percentile_bound_90 = percentile_bound(0.9, r.expected_v, bounds, r.lambda1);

  const double span =
      percentile_bound(0.999, r.expected_v, bounds, r.lambda1) - r.expected_v;
  r.tail_curve.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double dev = span * i / (points - 1);
    r.tail_curve.push_back(
        {dev, bernstein_tail(dev, r.expected_v, bounds, r.lambda1)});
  }
  return r;
}

}  // namespace odlc
