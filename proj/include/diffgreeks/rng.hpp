#pragma once

#include <cstdint>

namespace diffgreeks {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: draw number `index` of stream `key` is a pure
/// function of (key, index), so any (path, step, asset) triple can be
/// generated independently of every other.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

  std::uint64_t bits(std::uint64_t index) const noexcept {
    return mix64(key_ ^ mix64(index));
  }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t index) const noexcept {
    return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the inverse CDF.
  double normal(std::uint64_t index) const noexcept;

  /// Key for an independent sub-stream (e.g. one training epoch).
  CounterRng substream(std::uint64_t id) const noexcept {
    CounterRng r(0);
    r.key_ = mix64(key_ + mix64(id ^ 0xBB67AE8584CAA73BULL));
    return r;
  }

 private:
  std::uint64_t key_;
};

}  // namespace diffgreeks
