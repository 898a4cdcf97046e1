#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace diffgreeks {

/// Pairwise (cascade) summation. Error grows as O(log n) instead of O(n).
inline double pairwise_sum(std::span<const double> x) noexcept {
  constexpr std::size_t kLeaf = 64;
  if (x.size() <= kLeaf) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct SampleStats {
  double mean = 0.0;
  double std_err = 0.0;
};

/// Mean and standard error (sample stdev / sqrt(n)) of per-path contributions.
inline SampleStats sample_stats(std::span<const double> x) {
  SampleStats out;
  const std::size_t n = x.size();
  if (n == 0) return out;
  out.mean = pairwise_sum(x) / static_cast<double>(n);
  if (n < 2) return out;
  // Second pass over squared deviations; the temporary is avoided by
  // summing in fixed-size blocks.
  constexpr std::size_t kBlock = 4096;
  double acc = 0.0;
  double block[kBlock];
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t len = std::min(kBlock, n - start);
    for (std::size_t i = 0; i < len; ++i) {
      const double d = x[start + i] - out.mean;
      block[i] = d * d;
    }
    acc += pairwise_sum(std::span<const double>(block, len));
  }
  const double var = acc / static_cast<double>(n - 1);
  out.std_err = std::sqrt(var / static_cast<double>(n));
  return out;
}

}  // namespace diffgreeks
