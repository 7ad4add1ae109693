#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace odlc {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The output is a pure function of (key, counter), so a stream is fully
/// identified by its seed and stream id and can be replayed on any platform.
/// Satisfies UniformRandomBitGenerator with 64-bit results; each counter
/// block yields two 64-bit words.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (lane_ == 0) {
      block_ = generate({static_cast<std::uint32_t>(position_),
                         static_cast<std::uint32_t>(position_ >> 32),
                         static_cast<std::uint32_t>(stream_),
                         static_cast<std::uint32_t>(stream_ >> 32)},
                        key_);
      ++position_;
    }
    const auto hi = block_[2 * lane_ + 1];
    const auto lo = block_[2 * lane_];
    lane_ ^= 1;
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
  }

  /// The raw 10-round bijection; exposed for known-answer tests.
  static Block generate(Block counter, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * counter[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * counter[2];
      counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1],
                 static_cast<std::uint32_t>(p0)};
    }
    return counter;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  Key key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  Block block_{};
  int lane_ = 0;
};

/// Seed of run `index` in an ensemble rooted at `base_seed` (SplitMix64 mix).
inline std::uint64_t derive_seed(std::uint64_t base_seed,
                                 std::uint64_t index) noexcept {
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace odlc
