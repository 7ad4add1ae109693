#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "odlc/rng.hpp"

namespace odlc {

struct HorizonConfig {
  int T = 1;
  double slot_minutes = 60.0;  // metadata only

  void validate() const;
};

/// Impulse response f(0..L-1) of the causal filter shaping baseload
/// prediction errors. Lags outside the stored support read as zero.
class CausalFilter {
 public:
  CausalFilter() = default;
  explicit CausalFilter(std::vector<double> coefficients);

  static CausalFilter identity() { return CausalFilter({1.0}); }

  /// f(lag); zero for lag < 0 or lag >= length().
  double at(long lag) const noexcept {
    return lag < 0 || lag >= static_cast<long>(coefficients_.size())
               ? 0.0
               : coefficients_[static_cast<std::size_t>(lag)];
  }

  /// F(t) = f(0) + ... + f(t). Throws std::invalid_argument for t < 0.
  double cumulative(long t) const;

  /// F(0..n-1) as a table.
  std::vector<double> cumulative_table(int n) const;

  std::size_t length() const noexcept { return coefficients_.size(); }
  const std::vector<double>& coefficients() const noexcept {
    return coefficients_;
  }

  /// Non-fatal diagnostics (currently: f(0) == 0).
  std::vector<std::string> warnings() const;

 private:
  std::vector<double> coefficients_;
  std::vector<double> prefix_;  // prefix_[k] = F(k)
};

double cumulative_filter(const CausalFilter& filter, long t);

struct BaseloadModel {
  std::vector<double> mean_profile;  // b̄(1..T), kW
  CausalFilter filter;
  double sigma = 0.0;  // std. dev. of e(t)
  double eps2 = 0.0;   // |e(t)| <= eps2

  int horizon() const noexcept { return static_cast<int>(mean_profile.size()); }
  void validate() const;
};

struct ArrivalModel {
  double lambda = 0.0;  // mean of a(t), kWh per slot
  double s = 0.0;       // std. dev. of a(t)
  double eps1 = 0.0;    // |a(t) - lambda| <= eps1
  bool allow_negative = false;

  void validate() const;
};

/// One realized sample path. Arrays are 0-based: index k holds slot k+1.
struct ScenarioDraw {
  std::vector<double> e;
  std::vector<double> a;
  std::vector<double> realized_baseload;
  std::uint64_t seed = 0;

  int horizon() const noexcept { return static_cast<int>(e.size()); }
};

/// b(τ) = b̄(τ) + Σ_{m=1..T} e(m) f(τ-m).
std::vector<double> realized_baseload(const BaseloadModel& model,
                                      std::span<const double> e);

/// b_t(τ) = b̄(τ) + Σ_{m=1..t} e(m) f(τ-m): the forecast after observing
/// e(1..t). t = 0 returns b̄, t = T the realized baseload.
std::vector<double> predict_baseload(const BaseloadModel& model,
                                     std::span<const double> e, int t);

/// E[A(t)] = (T - t) λ for the i.i.d. arrival model, 1 <= t <= T.
double expected_future_arrivals(const ArrivalModel& model, int t, int T);

/// Mean-zero symmetric law on [-bound, bound] with the requested standard
/// deviation: a scaled Beta(α, α) with α = (bound²/sd² - 1)/2, which is the
/// uniform law at sd = bound/√3. sd = bound is the two-point limit (α → 0);
/// sd = 0 is the point mass at zero.
class BoundedSymmetricNoise {
 public:
  BoundedSymmetricNoise(double sd, double bound);

  double sample(Philox4x32& rng) const;

  double sd() const noexcept { return sd_; }
  double bound() const noexcept { return bound_; }
  /// Beta shape α; 0 for the degenerate and two-point cases.
  double shape() const noexcept { return alpha_; }

 private:
  enum class Kind { kZero, kTwoPoint, kUniform, kBeta };
  double sd_;
  double bound_;
  double alpha_ = 0.0;
  Kind kind_;
};

/// Draws e (stream 0) and a (stream 1) from Philox keyed by `seed`.
/// Throws ConfigError when a (sd, bound) pair is unachievable.
ScenarioDraw sample_scenario(const BaseloadModel& baseload,
                             const ArrivalModel& arrivals, int T,
                             std::uint64_t seed);

/// Worst-case path: a(t) = λ + ε₁, e(t) = ε₂·sgn(F(T-t)).
ScenarioDraw adversarial_scenario(const BaseloadModel& baseload,
                                  const ArrivalModel& arrivals, int T);

}  // namespace odlc
