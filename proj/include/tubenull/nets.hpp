#pragma once

// Finite line and polynomial-graph families whose maximum Y_n controls the
// supremum over all curves of the family, up to an additive slack.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubenull/curves.hpp"
#include "tubenull/errors.hpp"
#include "tubenull/geometry.hpp"

namespace tubenull {

enum class NetComponent : std::uint8_t { dense = 0, near_horizontal = 1, near_vertical = 2 };

struct LineNet {
  int level = 0;
  double c0 = 1.0;
  std::vector<Line<2>> lines;
  std::vector<NetComponent> component;
  std::vector<bool> perturbed;  // moved off the dyadic grid by 2^-(2n+7)

  std::size_t size() const noexcept { return lines.size(); }
  std::size_t count(NetComponent c) const { return static_cast<std::size_t>(std::count(component.begin(), component.end(), c)); }
};

inline constexpr double kDefaultNetCap = 5e7;

/// Number of lines of each near-axis family: (8^n + 1)(2^n + 1) crossing points, two angles.
inline double near_axis_family_size(int n) {
  return (std::exp2(3.0 * n) + 1.0) * (std::exp2(n) + 1.0) * 2.0;
}

/// Grid spacing of the dense family.
inline double dense_spacing(int n, double c0) { return c0 * std::pow(64.0, -n); }

inline double dense_family_estimate(int n, double c0) {
  const double s = dense_spacing(n, c0);
  return (std::numbers::pi / s + 1.0) * (2.0 * std::numbers::sqrt2 / s + 2.0);
}

inline double line_net_size_estimate(int n, double c0) {
  return dense_family_estimate(n, c0) + 2.0 * near_axis_family_size(n);
}

/// Level-n line net in the plane:
///  - dense: the (θ, ρ) grid with spacing c0·64^-n over lines meeting [0,1]²;
///  - near-horizontal: lines at angle ±8^-n through (m 8^-n, k 2^-n),
///    0 <= m <= 8^n, 0 <= k <= 2^n;
///  - near-vertical: the same construction rotated by 90 degrees.
/// Axis-parallel dense members sitting on the level-(2n+6) dyadic grid are
/// shifted by 2^-(2n+7) and flagged.
inline LineNet line_net(int n, double c0, double cap = kDefaultNetCap) {
  if (n < 0 || n > 8) throw std::invalid_argument("line_net supports levels 0..8");
  if (!(c0 > 0.0)) throw std::invalid_argument("line_net density constant must be positive");
  const double estimate = line_net_size_estimate(n, c0);
  if (estimate > cap)
    throw cardinality_exceeded("line net of level " + std::to_string(n) + " would hold about " +
                                   std::to_string(estimate) + " lines (cap " + std::to_string(cap) + ")",
                               estimate);
  LineNet net;
  net.level = n;
  net.c0 = c0;
  const int dyadic_depth = 2 * n + 6;
  const double shift = std::exp2(-(2 * n + 7));

  const double s = dense_spacing(n, c0);
  for (long i = 0; i * s < std::numbers::pi; ++i) {
    const double theta = static_cast<double>(i) * s;
    const double c = std::cos(theta), sn = std::sin(theta);
    const double corners[] = {0.0, c, sn, c + sn};
    const double lo = *std::min_element(std::begin(corners), std::end(corners));
    const double hi = *std::max_element(std::begin(corners), std::end(corners));
    for (long j = static_cast<long>(std::ceil(lo / s)); static_cast<double>(j) * s <= hi; ++j) {
      Line<2> line = Line<2>::from_normal(theta, static_cast<double>(j) * s);
      bool moved = false;
      if (is_dyadic(line, dyadic_depth)) {
        line = Line<2>::from_normal(theta, static_cast<double>(j) * s + shift);
        moved = true;
      }
      net.lines.push_back(line);
      net.component.push_back(NetComponent::dense);
      net.perturbed.push_back(moved);
    }
  }

  const double alpha = std::pow(8.0, -n);
  const long m_max = static_cast<long>(std::llround(std::pow(8.0, n)));
  const long k_max = 1L << n;
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  for (int family = 0; family < 2; ++family) {
    for (long k = 0; k <= k_max; ++k) {
      for (long m = 0; m <= m_max; ++m) {
        const double along = static_cast<double>(m) * alpha;
        const double across = static_cast<double>(k) * std::exp2(-n);
        for (int sign : {+1, -1}) {
          if (family == 0) {
            net.lines.emplace_back(Point<2>{along, across}, Point<2>{ca, sign * sa});
            net.component.push_back(NetComponent::near_horizontal);
          } else {
            net.lines.emplace_back(Point<2>{across, along}, Point<2>{sign * sa, ca});
            net.component.push_back(NetComponent::near_vertical);
          }
          net.perturbed.push_back(false);
        }
      }
    }
  }
  return net;
}

/// Uniform random line meeting [0,1]²: θ uniform on [0, π), ρ uniform over
/// the square's projection onto the normal.
template <typename Rng>
Line<2> random_line(Rng& rng) {
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double c = std::cos(theta), s = std::sin(theta);
  const double corners[] = {0.0, c, s, c + s};
  const double lo = *std::min_element(std::begin(corners), std::end(corners));
  const double hi = *std::max_element(std::begin(corners), std::end(corners));
  return Line<2>::from_normal(theta, rng.uniform(lo, hi));
}

/// Random line through the unit cube in any dimension: a uniform point of the
/// cube and a uniform direction on the sphere.
template <int D, typename Rng>
Line<D> random_line_nd(Rng& rng) {
  Point<D> p, u;
  for (int i = 0; i < D; ++i) p[i] = rng.uniform();
  double norm = 0.0;
  do {
    norm = 0.0;
    for (int i = 0; i < D; ++i) {
      u[i] = rng.uniform(-1.0, 1.0);
      norm += u[i] * u[i];
    }
  } while (norm > 1.0 || norm < 1e-6);
  return Line<D>(p, u);
}

/// Polynomial graphs of degree <= k on a coefficient grid of spacing δ/(k+1)
/// over [lo, hi]^(k+1), keeping members whose graph meets [0,1]². Rounding
/// each coefficient moves a graph by at most Σ|Δc_i| <= δ in sup norm on [0,1].
inline std::vector<PolyGraph> poly_graph_net(int k, double delta, double lo = 0.0, double hi = 1.0,
                                             double cap = 1e7) {
  if (k < 0 || k > 4) throw std::invalid_argument("poly_graph_net supports degree 0..4");
  if (delta < std::exp2(-12) || delta > 1.0) throw std::invalid_argument("poly_graph_net needs 2^-12 <= δ <= 1");
  if (!(hi >= lo)) throw std::invalid_argument("empty coefficient range");
  const double spacing = delta / (k + 1);
  const long per_axis = static_cast<long>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
  const double estimate = std::pow(static_cast<double>(per_axis), k + 1);
  if (estimate > cap)
    throw cardinality_exceeded("polynomial net would hold about " + std::to_string(estimate) + " members", estimate);
  std::vector<PolyGraph> out;
  std::vector<long> idx(static_cast<std::size_t>(k) + 1, 0);
  for (;;) {
    PolyGraph g;
    for (long i : idx) g.coeffs.push_back(lo + static_cast<double>(i) * spacing);
    const GraphView view(g);
    bool meets = false;
    for (int s = 0; s <= 256 && !meets; ++s) {
      const double y = view.value(s / 256.0);
      meets = y >= 0.0 && y <= 1.0;
    }
    if (meets) out.push_back(std::move(g));
    std::size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == per_axis) idx[pos++] = 0;
    if (pos == idx.size()) break;
  }
  return out;
}

}  // namespace tubenull
