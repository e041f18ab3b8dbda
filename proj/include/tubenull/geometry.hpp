#pragma once

// Lines in R^D, exact line/box clipping, and the shadow profile of a square.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>

#include "tubenull/dyadic.hpp"

namespace tubenull {

/// Closed: the box is closed on every face. HalfOpen: each axis is
/// [lo, hi), except that hi = 1 is included so the unit cube stays closed.
/// Only lines lying inside a face see the difference.
enum class BoundaryRule { closed, half_open };

/// Direction components below this magnitude are treated as exact zeros, so
/// that angle-parametrized axis-parallel lines behave like axis-parallel lines.
inline constexpr double kAxisSnap = 1e-15;

template <int D>
class Line {
 public:
  Line(const Point<D>& point, const Point<D>& direction) : point_(point), dir_(direction) {
    double norm = 0.0;
    for (double c : dir_) norm += c * c;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw std::invalid_argument("line direction must be non-zero");
    for (double& c : dir_) {
      c /= norm;
      if (std::abs(c) < kAxisSnap) c = 0.0;
    }
  }

  /// The line {x : x·(cos θ, sin θ) = ρ}.
  static Line from_normal(double theta, double rho) requires(D == 2) {
    double c = std::cos(theta), s = std::sin(theta);
    if (std::abs(c) < kAxisSnap) c = 0.0;
    if (std::abs(s) < kAxisSnap) s = 0.0;
    return Line({rho * c, rho * s}, {-s, c});
  }

  static Line horizontal(double y) requires(D == 2) { return Line({0.0, y}, {1.0, 0.0}); }
  static Line vertical(double x) requires(D == 2) { return Line({x, 0.0}, {0.0, 1.0}); }

  const Point<D>& point() const noexcept { return point_; }
  const Point<D>& direction() const noexcept { return dir_; }

  Point<D> at(double t) const {
    Point<D> p;
    for (int i = 0; i < D; ++i) p[i] = point_[i] + t * dir_[i];
    return p;
  }

  /// Normal angle θ in [0, π) and offset ρ with x·(cos θ, sin θ) = ρ.
  std::pair<double, double> normal_form() const requires(D == 2) {
    double nx = -dir_[1], ny = dir_[0];
    if (ny < 0.0 || (ny == 0.0 && nx < 0.0)) {
      nx = -nx;
      ny = -ny;
    }
    double theta = std::atan2(ny, nx);
    if (theta >= std::numbers::pi) theta -= std::numbers::pi;
    return {theta, point_[0] * nx + point_[1] * ny};
  }

 private:
  Point<D> point_;
  Point<D> dir_;
};

/// Parameter interval of line ∩ box (unit-speed parameter), if non-empty.
template <int D>
std::optional<std::pair<double, double>> clip_line(const Line<D>& line, const Box<D>& box,
                                                   BoundaryRule rule = BoundaryRule::closed) {
  double t0 = -INFINITY, t1 = INFINITY;
  const auto& p = line.point();
  const auto& u = line.direction();
  for (int i = 0; i < D; ++i) {
    if (u[i] == 0.0) {
      const bool below = p[i] < box.lo[i];
      const bool above = rule == BoundaryRule::closed || box.hi[i] == 1.0 ? p[i] > box.hi[i] : p[i] >= box.hi[i];
      if (below || above) return std::nullopt;
      continue;
    }
    double a = (box.lo[i] - p[i]) / u[i];
    double b = (box.hi[i] - p[i]) / u[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

/// H^1(line ∩ box) by parametric (Liang–Barsky style) clipping.
template <int D>
double line_box_length(const Line<D>& line, const Box<D>& box, BoundaryRule rule = BoundaryRule::closed) {
  if (box.degenerate()) throw std::invalid_argument("line_box_length needs a non-degenerate box");
  const auto seg = clip_line(line, box, rule);
  return seg ? std::max(0.0, seg->second - seg->first) : 0.0;
}

/// True when the line lies in a hyperplane x_j = k 2^-m with m <= max_level.
template <int D>
bool is_dyadic(const Line<D>& line, int max_level) {
  for (int j = 0; j < D; ++j) {
    if (line.direction()[j] != 0.0) continue;
    const double scaled = std::ldexp(line.point()[j], max_level);
    if (scaled == std::floor(scaled)) return true;
  }
  return false;
}

/// Fraction of the area of an axis-aligned square lying on the side
/// x·n <= m + offset of a line with unit normal n, where m is the projected
/// centre. `a` and `b` are side*|n_x| and side*|n_y|: the projection is the
/// sum of two independent uniforms of those widths (a trapezoid law).
inline double shadow_cdf(double offset, double a, double b) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (hi <= 0.0) return offset >= 0.0 ? 1.0 : 0.0;
  const double x = offset + 0.5 * (lo + hi);
  if (x <= 0.0) return 0.0;
  if (x >= lo + hi) return 1.0;
  if (lo <= 0.0) return x / hi;
  if (x <= lo) return x * x / (2.0 * lo * hi);
  if (x <= hi) return (x - 0.5 * lo) / hi;
  const double r = lo + hi - x;
  return 1.0 - r * r / (2.0 * lo * hi);
}

}  // namespace tubenull
