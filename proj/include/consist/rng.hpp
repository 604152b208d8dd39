#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace consist::rng {

// 53-bit uniform in [0,1). mt19937_64 output is fully specified, so every
// draw is reproducible across platforms; std::uniform_real_distribution is not.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Unbiased integer in [0, n) via rejection.
inline std::uint64_t below(std::mt19937_64& g, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

// Inverse-CDF draw from an (approximately normalized) probability vector.
// Entries with zero mass are never selected.
inline std::size_t categorical(std::span<const double> probs, double u) {
  double acc = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;  // float-edge fallback: probs.size() iff all mass zero
}

}  // namespace consist::rng
