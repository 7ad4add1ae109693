#include "odlc/stochastic_models.hpp"

#include <algorithm>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>
#include <stdexcept>

#include "odlc/errors.hpp"
#include "odlc/numeric.hpp"

namespace odlc {

namespace {

constexpr double kRelSlack = 1e-12;

bool at_most(double lhs, double rhs) {
  return lhs <= rhs * (1.0 + kRelSlack);
}

void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) {
    throw ConfigError(std::string(name) + " must be finite");
  }
}

}  // namespace

void HorizonConfig::validate() const {
  if (T < 1) throw ConfigError("horizon T must be >= 1");
  if (!(slot_minutes > 0.0)) throw ConfigError("slot_minutes must be > 0");
}

CausalFilter::CausalFilter(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {
  prefix_.reserve(coefficients_.size());
  CompensatedSum acc;
  for (double c : coefficients_) {
    require_finite(c, "filter coefficient");
    acc += c;
    prefix_.push_back(acc.value());
  }
}

double CausalFilter::cumulative(long t) const {
  if (t < 0) throw std::invalid_argument("cumulative_filter: t must be >= 0");
  if (prefix_.empty()) return 0.0;
  const auto last = static_cast<long>(prefix_.size()) - 1;
  return prefix_[static_cast<std::size_t>(std::min(t, last))];
}

std::vector<double> CausalFilter::cumulative_table(int n) const {
  std::vector<double> table(static_cast<std::size_t>(std::max(n, 0)));
  for (int k = 0; k < n; ++k) table[static_cast<std::size_t>(k)] = cumulative(k);
  return table;
}

std::vector<std::string> CausalFilter::warnings() const {
  std::vector<std::string> out;
  if (at(0) == 0.0) {
    out.emplace_back(
        "filter f(0) is zero: a baseload error first shows up one slot after "
        "it is observed");
  }
  return out;
}

double cumulative_filter(const CausalFilter& filter, long t) {
  return filter.cumulative(t);
}

void BaseloadModel::validate() const {
  if (mean_profile.empty()) throw ConfigError("baseload mean profile is empty");
  for (double b : mean_profile) require_finite(b, "baseload mean");
  require_finite(sigma, "sigma");
  require_finite(eps2, "eps2");
  if (sigma < 0.0 || eps2 < 0.0) {
    throw ConfigError("sigma and eps2 must be non-negative");
  }
  if (!at_most(sigma, eps2)) {
    throw ConfigError("sigma must not exceed eps2 (a variable bounded by eps2 "
                      "has std. dev. <= eps2)");
  }
}

void ArrivalModel::validate() const {
  require_finite(lambda, "lambda");
  require_finite(s, "s");
  require_finite(eps1, "eps1");
  if (lambda < 0.0 || s < 0.0 || eps1 < 0.0) {
    throw ConfigError("lambda, s and eps1 must be non-negative");
  }
  if (!at_most(s, eps1)) throw ConfigError("s must not exceed eps1");
  if (eps1 > lambda && !allow_negative) {
    throw ConfigError(
        "eps1 > lambda permits negative arrivals; set allow_negative to "
        "accept them");
  }
}

std::vector<double> realized_baseload(const BaseloadModel& model,
                                      std::span<const double> e) {
  return predict_baseload(model, e, model.horizon());
}

std::vector<double> predict_baseload(const BaseloadModel& model,
                                     std::span<const double> e, int t) {
  const int T = model.horizon();
  if (static_cast<int>(e.size()) != T) {
    throw std::invalid_argument("predict_baseload: error vector length " +
                                std::to_string(e.size()) + " != T " +
                                std::to_string(T));
  }
  if (t < 0 || t > T) {
    throw std::out_of_range("predict_baseload: t outside [0, T]");
  }
  std::vector<double> b(model.mean_profile);
  // Slot τ (1-based) receives e(m) f(τ-m) for m <= min(t, τ).
  for (int tau = 1; tau <= T; ++tau) {
    CompensatedSum acc;
    acc += b[static_cast<std::size_t>(tau - 1)];
    const int upto = std::min(t, tau);
    for (int m = 1; m <= upto; ++m) {
      acc += e[static_cast<std::size_t>(m - 1)] * model.filter.at(tau - m);
    }
    b[static_cast<std::size_t>(tau - 1)] = acc.value();
  }
  return b;
}

double expected_future_arrivals(const ArrivalModel& model, int t, int T) {
  if (T < 1 || t < 1 || t > T) {
    throw std::out_of_range("expected_future_arrivals: t outside [1, T]");
  }
  return static_cast<double>(T - t) * model.lambda;
}

BoundedSymmetricNoise::BoundedSymmetricNoise(double sd, double bound)
    : sd_(sd), bound_(bound) {
  if (!(sd >= 0.0) || !(bound >= 0.0) || !std::isfinite(sd) ||
      !std::isfinite(bound)) {
    throw ConfigError("noise sd and bound must be finite and non-negative");
  }
  if (sd == 0.0) {
    kind_ = Kind::kZero;
    return;
  }
  if (!at_most(sd, bound)) {
    throw ConfigError("std. dev. " + std::to_string(sd) +
                      " unachievable with support bound " +
                      std::to_string(bound));
  }
  const double ratio = bound / sd;
  alpha_ = 0.5 * (ratio * ratio - 1.0);
  if (alpha_ <= 1e-12) {
    alpha_ = 0.0;
    kind_ = Kind::kTwoPoint;
  } else if (std::abs(alpha_ - 1.0) <= 1e-12) {
    alpha_ = 1.0;
    kind_ = Kind::kUniform;
  } else {
    kind_ = Kind::kBeta;
  }
}

double BoundedSymmetricNoise::sample(Philox4x32& rng) const {
  switch (kind_) {
    case Kind::kZero:
      return 0.0;
    case Kind::kTwoPoint:
      return (rng() >> 63) != 0 ? bound_ : -bound_;
    case Kind::kUniform: {
      boost::random::uniform_real_distribution<double> u(-bound_, bound_);
      return u(rng);
    }
    case Kind::kBeta: {
      boost::random::beta_distribution<double> beta(alpha_, alpha_);
      const double x = bound_ * (2.0 * beta(rng) - 1.0);
      return std::clamp(x, -bound_, bound_);
    }
  }
  return 0.0;
}

ScenarioDraw sample_scenario(const BaseloadModel& baseload,
                             const ArrivalModel& arrivals, int T,
                             std::uint64_t seed) {
  baseload.validate();
  arrivals.validate();
  if (baseload.horizon() != T) {
    throw ConfigError("baseload profile length does not match T");
  }
  const BoundedSymmetricNoise e_law(baseload.sigma, baseload.eps2);
  const BoundedSymmetricNoise a_law(arrivals.s, arrivals.eps1);

  ScenarioDraw draw;
  draw.seed = seed;
  draw.e.resize(static_cast<std::size_t>(T));
  draw.a.resize(static_cast<std::size_t>(T));
  Philox4x32 e_rng(seed, 0);
  Philox4x32 a_rng(seed, 1);
  for (auto& x : draw.e) x = e_law.sample(e_rng);
  for (auto& x : draw.a) x = arrivals.lambda + a_law.sample(a_rng);
  draw.realized_baseload = realized_baseload(baseload, draw.e);
  return draw;
}

ScenarioDraw adversarial_scenario(const BaseloadModel& baseload,
                                  const ArrivalModel& arrivals, int T) {
  if (baseload.horizon() != T) {
    throw ConfigError("baseload profile length does not match T");
  }
  ScenarioDraw draw;
  draw.e.resize(static_cast<std::size_t>(T));
  draw.a.assign(static_cast<std::size_t>(T), arrivals.lambda + arrivals.eps1);
  for (int t = 1; t <= T; ++t) {
    const double F = baseload.filter.cumulative(T - t);
    const double sign = F > 0.0 ? 1.0 : (F < 0.0 ? -1.0 : 0.0);
    draw.e[static_cast<std::size_t>(t - 1)] = baseload.eps2 * sign;
  }
  draw.realized_baseload = realized_baseload(baseload, draw.e);
  return draw;
}

}  // namespace odlc
