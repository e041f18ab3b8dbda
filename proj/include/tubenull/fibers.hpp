#pragma once

// Covering curve ∩ A_n by arclength intervals of a fixed length.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "tubenull/gauge.hpp"
#include "tubenull/intersection.hpp"

namespace tubenull {

inline constexpr double kCoverTolerance = 1e-12;

/// Minimum number of closed intervals of length r covering a union of
/// sorted, disjoint intervals: place each new interval at the leftmost
/// uncovered point. Remainders shorter than kCoverTolerance are ignored.
inline std::size_t greedy_cover_count(const Intervals& iv, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("cover length must be positive");
  std::size_t count = 0;
  double covered = -INFINITY;
  for (auto [a, b] : iv) {
    if (b - std::max(a, covered) <= kCoverTolerance) continue;
    double start = std::max(a, covered);
    while (b - start > kCoverTolerance) {
      ++count;
      covered = start + r;
      start = covered;
    }
  }
  return count;
}

struct FiberCover {
  std::size_t count;
  double ratio;  // count h(r) / r
};

template <int D>
FiberCover fiber_cover_count(const Realization<D>& r, int n, const Line<D>& line, double len, const GaugeSpec& h) {
  if (!(len >= std::ldexp(1.0, -n) && len <= 1.0)) throw std::invalid_argument("cover length must lie in [2^-n, 1]");
  const std::size_t c = greedy_cover_count(intersection_intervals<D>(line, r, n), len);
  return {c, static_cast<double>(c) * h(len) / len};
}

inline FiberCover fiber_cover_count(const Realization<2>& r, int n, const Curve& curve, double len, const GaugeSpec& h) {
  if (!(len >= std::ldexp(1.0, -n) && len <= 1.0)) throw std::invalid_argument("cover length must lie in [2^-n, 1]");
  const std::size_t c = greedy_cover_count(intersection_intervals(curve, r, n), len);
  return {c, static_cast<double>(c) * h(len) / len};
}

}  // namespace tubenull
