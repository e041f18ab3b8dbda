#pragma once

// Curve ∩ A_n by descending the cube tree: a cube is only opened when the
// curve meets it in positive length, so the work is proportional to the
// number of surviving cubes the curve actually crosses at each level.
// Cubes are half-open per axis so shared faces are counted once.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "tubenull/curves.hpp"
#include "tubenull/fractal.hpp"
#include "tubenull/geometry.hpp"
#include "tubenull/parallel.hpp"

namespace tubenull {

/// One surviving cube of A_n met by a curve.
template <int D>
struct CubeHit {
  std::size_t index;  // position in A_n
  DyadicCube<D> cube;
  double length;
};

namespace detail {

/// Calls visit(level, index, cube, length) for every surviving cube with
/// positive intersection length, levels 0..n, in depth-first order.
template <int D, typename LengthFn, typename Visit>
void descend(const Realization<D>& r, int n, LengthFn&& length_in, Visit&& visit) {
  if (n > r.depth()) throw std::invalid_argument("requested level beyond the realization depth");
  struct Node {
    int level;
    std::size_t index;
    DyadicCube<D> cube;
  };
  std::vector<Node> stack{{0, 0, DyadicCube<D>{0, {}}}};
  constexpr unsigned full = 1u << D;
  while (!stack.empty()) {
    const Node node = stack.back();
    stack.pop_back();
    const double len = length_in(node.cube.box());
    if (!(len > 0.0)) continue;
    visit(node.level, node.index, node.cube, len);
    if (node.level >= n) continue;
    const auto [first, last] = r.children(node.level, node.index);
    const auto& next = r.level(node.level + 1);
    // Push in reverse so children are visited in key order.
    for (std::size_t c = last; c-- > first;) {
      const unsigned offset = static_cast<unsigned>(next.key(c) & (full - 1));
      stack.push_back({node.level + 1, c, node.cube.child(offset)});
    }
  }
}

template <int D>
auto line_length_fn(const Line<D>& line) {
  return [&line](const Box<D>& b) { return line_box_length(line, b, BoundaryRule::half_open); };
}

inline auto graph_length_fn(const GraphView& g) {
  return [&g](const Box<2>& b) { return graph_box_length(g, b); };
}

template <typename F>
decltype(auto) with_curve(const Curve& c, F&& f) {
  return std::visit(
      [&](const auto& alt) -> decltype(auto) {
        using T = std::decay_t<decltype(alt)>;
        if constexpr (std::is_same_v<T, Line<2>>)
          return f(line_length_fn<2>(alt));
        else {
          const GraphView g(alt);
          return f(graph_length_fn(g));
        }
      },
      c);
}

}  // namespace detail

/// H^1(curve ∩ A_m) for every m = 0..n.
template <int D>
std::vector<double> levelset_lengths(const Line<D>& line, const Realization<D>& r, int n) {
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(n) + 1);
  detail::descend<D>(r, n, detail::line_length_fn<D>(line),
                     [&](int m, std::size_t, const DyadicCube<D>&, double len) { acc[static_cast<std::size_t>(m)].add(len); });
  std::vector<double> out;
  for (auto& a : acc) out.push_back(a.value());
  return out;
}

inline std::vector<double> levelset_lengths(const Curve& curve, const Realization<2>& r, int n) {
  return detail::with_curve(curve, [&](auto length_fn) {
    std::vector<CompensatedSum> acc(static_cast<std::size_t>(n) + 1);
    detail::descend<2>(r, n, length_fn,
                       [&](int m, std::size_t, const DyadicCube<2>&, double len) { acc[static_cast<std::size_t>(m)].add(len); });
    std::vector<double> out;
    for (auto& a : acc) out.push_back(a.value());
    return out;
  });
}

/// H^1(A_n ∩ curve).
template <int D>
double curve_levelset_length(const Line<D>& line, const Realization<D>& r, int n) {
  return levelset_lengths<D>(line, r, n).back();
}

inline double curve_levelset_length(const Curve& curve, const Realization<2>& r, int n) {
  return levelset_lengths(curve, r, n).back();
}

/// Cubes of A_n met by the curve, with the length inside each.
template <int D>
std::vector<CubeHit<D>> cube_hits(const Line<D>& line, const Realization<D>& r, int n) {
  std::vector<CubeHit<D>> hits;
  detail::descend<D>(r, n, detail::line_length_fn<D>(line), [&](int m, std::size_t i, const DyadicCube<D>& c, double len) {
    if (m == n) hits.push_back({i, c, len});
  });
  return hits;
}

inline std::vector<CubeHit<2>> cube_hits(const Curve& curve, const Realization<2>& r, int n) {
  return detail::with_curve(curve, [&](auto length_fn) {
    std::vector<CubeHit<2>> hits;
    detail::descend<2>(r, n, length_fn, [&](int m, std::size_t i, const DyadicCube<2>& c, double len) {
      if (m == n) hits.push_back({i, c, len});
    });
    return hits;
  });
}

/// Sorted, merged arclength intervals of curve ∩ A_n (positive-length pieces only).
using Intervals = std::vector<std::pair<double, double>>;

inline Intervals merge_intervals(Intervals iv, double touch_tol = 1e-12) {
  std::sort(iv.begin(), iv.end());
  Intervals out;
  for (auto [a, b] : iv) {
    if (!(b > a)) continue;
    if (!out.empty() && a <= out.back().second + touch_tol)
      out.back().second = std::max(out.back().second, b);
    else
      out.emplace_back(a, b);
  }
  return out;
}

template <int D>
Intervals intersection_intervals(const Line<D>& line, const Realization<D>& r, int n) {
  Intervals iv;
  for (const auto& hit : cube_hits<D>(line, r, n)) {
    const auto seg = clip_line(line, hit.cube.box(), BoundaryRule::half_open);
    if (seg) iv.push_back(*seg);
  }
  return merge_intervals(std::move(iv));
}

inline Intervals intersection_intervals(const Curve& curve, const Realization<2>& r, int n) {
  if (const auto* line = std::get_if<Line<2>>(&curve)) return intersection_intervals<2>(*line, r, n);
  return std::visit(
      [&](const auto& alt) -> Intervals {
        using T = std::decay_t<decltype(alt)>;
        if constexpr (std::is_same_v<T, Line<2>>) {
          return {};
        } else {
          const GraphView g(alt);
          Intervals iv;
          for (const auto& hit : cube_hits(curve, r, n))
            for (auto [u, v] : graph_box_xintervals(g, hit.cube.box()))
              iv.emplace_back(g.arc_length(g.lo(), u), g.arc_length(g.lo(), v));
          return merge_intervals(std::move(iv));
        }
      },
      curve);
}

}  // namespace tubenull
