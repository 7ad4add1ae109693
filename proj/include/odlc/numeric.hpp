#pragma once

#include <cmath>
#include <span>

namespace odlc {

/// Neumaier-compensated accumulator. Used for every horizon-length sum so
/// that O(T^2) closed forms stay accurate for T up to 1e5.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) acc += x;
  return acc.value();
}

/// H_n = 1 + 1/2 + ... + 1/n (H_0 = 0).
inline double harmonic_number(int n) noexcept {
  CompensatedSum acc;
  for (int k = n; k >= 1; --k) acc += 1.0 / k;
  return acc.value();
}

}  // namespace odlc
