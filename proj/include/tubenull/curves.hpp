#pragma once

// Planar curves: lines, polynomial graphs, piecewise-linear graphs and convex
// graphs given by evaluators. Graph curves are handled in their canonical
// frame y = f(x); a PolyGraph may carry an axis swap and/or reflection that
// places the canonical graph in the unit square.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "tubenull/dyadic.hpp"
#include "tubenull/errors.hpp"
#include "tubenull/geometry.hpp"
#include "tubenull/quadrature.hpp"

namespace tubenull {

/// y = c_0 + c_1 x + ... + c_k x^k on [x_lo, x_hi]. `reflect` maps x -> 1 - x,
/// then `swap` exchanges the axes.
struct PolyGraph {
  std::vector<double> coeffs;
  bool swap = false;
  bool reflect = false;
  double x_lo = 0.0;
  double x_hi = 1.0;
};

/// Piecewise-linear graph through pts (x strictly increasing, y non-decreasing).
struct PLGraph {
  std::vector<std::pair<double, double>> pts;
};

/// Graph of f on [a, b] given by evaluators for f and its right derivative.
struct ConvexGraph {
  std::function<double(double)> f;
  std::function<double(double)> slope;
  double a = 0.0;
  double b = 1.0;
};

using Curve = std::variant<Line<2>, PolyGraph, PLGraph, ConvexGraph>;

inline void validate(const PLGraph& g) {
  if (g.pts.size() < 2) throw invalid_curve("piecewise-linear graph needs at least two points");
  for (std::size_t i = 1; i < g.pts.size(); ++i) {
    if (!(g.pts[i].first > g.pts[i - 1].first)) throw invalid_curve("piecewise-linear x must increase");
    if (g.pts[i].second < g.pts[i - 1].second) throw invalid_curve("piecewise-linear y must not decrease");
  }
}

/// Uniform read access to a graph curve in its canonical frame.
class GraphView {
 public:
  explicit GraphView(const PolyGraph& g) : poly_(&g), a_(g.x_lo), b_(g.x_hi) {
    if (g.coeffs.empty()) throw invalid_curve("polynomial graph needs coefficients");
    if (!(b_ > a_)) throw invalid_curve("polynomial graph domain is empty");
    for (std::size_t i = 1; i < g.coeffs.size(); ++i) dcoeffs_.push_back(static_cast<double>(i) * g.coeffs[i]);
    if (dcoeffs_.empty()) dcoeffs_.push_back(0.0);
    find_monotone_pieces();
  }
  explicit GraphView(const PLGraph& g) : pl_(&g) {
    validate(g);
    a_ = g.pts.front().first;
    b_ = g.pts.back().first;
    pieces_.push_back({a_, b_, +1});
  }
  explicit GraphView(const ConvexGraph& g) : convex_(&g), a_(g.a), b_(g.b) {
    if (!g.f || !g.slope) throw invalid_curve("convex graph needs value and slope evaluators");
    if (!(b_ > a_)) throw invalid_curve("convex graph domain is empty");
    pieces_.push_back({a_, b_, +1});
  }

  struct Piece {
    double lo, hi;
    int direction;  // +1 non-decreasing, -1 non-increasing
  };

  double lo() const noexcept { return a_; }
  double hi() const noexcept { return b_; }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  bool piecewise_linear() const noexcept { return pl_ != nullptr; }
  const PLGraph* pl() const noexcept { return pl_; }
  bool swapped() const noexcept { return poly_ && poly_->swap; }
  bool reflected() const noexcept { return poly_ && poly_->reflect; }

  /// f(x) inside the domain; continued linearly outside it.
  double value(double x) const {
    if (x < a_) return value_in(a_) + (x - a_) * slope_in(a_);
    if (x > b_) return value_in(b_) + (x - b_) * left_slope_at_end();
    return value_in(x);
  }

  /// Right derivative inside the domain.
  double slope(double x) const { return slope_in(std::clamp(x, a_, b_)); }

  double arc_length(double u, double v) const {
    if (u > v) std::swap(u, v);
    if (u < a_ - 1e-12 || v > b_ + 1e-12) throw std::invalid_argument("arc length interval outside the domain");
    u = std::max(u, a_);
    v = std::min(v, b_);
    if (u >= v) return 0.0;
    if (pl_) return pl_arc_length(u, v);
    return adaptive_simpson([this](double x) { const double s = slope_in(x); return std::sqrt(1.0 + s * s); }, u, v);
  }

  /// The box expressed in this graph's canonical frame.
  Box<2> to_canonical(Box<2> b) const {
    if (swapped()) {
      std::swap(b.lo[0], b.lo[1]);
      std::swap(b.hi[0], b.hi[1]);
    }
    if (reflected()) {
      const double lo = 1.0 - b.hi[0], hi = 1.0 - b.lo[0];
      b.lo[0] = lo;
      b.hi[0] = hi;
    }
    return b;
  }

 private:
  double value_in(double x) const {
    if (poly_) {
      double y = 0.0;
      for (auto it = poly_->coeffs.rbegin(); it != poly_->coeffs.rend(); ++it) y = y * x + *it;
      return y;
    }
    if (pl_) {
      const auto& p = pl_->pts;
      auto it = std::upper_bound(p.begin(), p.end(), x, [](double v, const auto& q) { return v < q.first; });
      if (it == p.begin()) return p.front().second;
      if (it == p.end()) return p.back().second;
      const auto& [x1, y1] = *it;
      const auto& [x0, y0] = *(it - 1);
      return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
    return convex_->f(x);
  }

  double slope_in(double x) const {
    if (poly_) {
      double y = 0.0;
      for (auto it = dcoeffs_.rbegin(); it != dcoeffs_.rend(); ++it) y = y * x + *it;
      return y;
    }
    if (pl_) {
      const auto& p = pl_->pts;
      auto it = std::upper_bound(p.begin(), p.end(), x, [](double v, const auto& q) { return v < q.first; });
      if (it == p.end()) --it;
      if (it == p.begin()) ++it;
      const auto& [x1, y1] = *it;
      const auto& [x0, y0] = *(it - 1);
      return (y1 - y0) / (x1 - x0);
    }
    return convex_->slope(x);
  }

  double left_slope_at_end() const {
    if (pl_) {
      const auto& p = pl_->pts;
      const auto& [x1, y1] = p[p.size() - 1];
      const auto& [x0, y0] = p[p.size() - 2];
      return (y1 - y0) / (x1 - x0);
    }
    return slope_in(b_);
  }

  double pl_arc_length(double u, double v) const {
    const auto& p = pl_->pts;
    double total = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) {
      const double x0 = std::max(u, p[i - 1].first), x1 = std::min(v, p[i].first);
      if (x1 <= x0) continue;
      const double s = (p[i].second - p[i - 1].second) / (p[i].first - p[i - 1].first);
      total += (x1 - x0) * std::sqrt(1.0 + s * s);
    }
    return total;
  }

  // Critical points of the polynomial split [a, b] into monotone pieces.
  void find_monotone_pieces() {
    constexpr int kSamples = 1024;
    std::vector<double> cuts{a_};
    double prev_x = a_, prev_s = slope_in(a_);
    for (int i = 1; i <= kSamples; ++i) {
      const double x = a_ + (b_ - a_) * i / kSamples;
      const double s = slope_in(x);
      if ((prev_s < 0.0 && s > 0.0) || (prev_s > 0.0 && s < 0.0)) {
        double lo = prev_x, hi = x;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
          const double mid = 0.5 * (lo + hi);
          ((slope_in(mid) < 0.0) == (prev_s < 0.0) ? lo : hi) = mid;
        }
        cuts.push_back(0.5 * (lo + hi));
      }
      if (s != 0.0) {
        prev_s = s;
        prev_x = x;
      }
    }
    cuts.push_back(b_);
    for (std::size_t i = 1; i < cuts.size(); ++i) {
      const double mid = 0.5 * (cuts[i - 1] + cuts[i]);
      const int dir = value_in(cuts[i]) >= value_in(cuts[i - 1]) && slope_in(mid) >= 0.0 ? +1 : -1;
      pieces_.push_back({cuts[i - 1], cuts[i], dir});
    }
  }

  const PolyGraph* poly_ = nullptr;
  const PLGraph* pl_ = nullptr;
  const ConvexGraph* convex_ = nullptr;
  double a_ = 0.0, b_ = 1.0;
  std::vector<double> dcoeffs_;
  std::vector<Piece> pieces_;
};

/// Length of the graph over [u, v]: exact for PLGraph, adaptive Simpson on
/// sqrt(1 + f'^2) otherwise (absolute tolerance 1e-10).
template <typename G>
double graph_arc_length(const G& g, double u, double v) {
  return GraphView(g).arc_length(u, v);
}

inline double graph_arc_length(const Curve& c, double u, double v) {
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Line<2>>)
          throw std::invalid_argument("graph_arc_length expects a graph curve");
        else
          return graph_arc_length(g, u, v);
      },
      c);
}

/// Smallest x in [lo, hi] with pred(x) true, for pred monotone false -> true.
/// Returns hi + 1 if pred(hi) is false.
template <typename Pred>
double first_true(Pred&& pred, double lo, double hi) {
  if (pred(lo)) return lo;
  if (!pred(hi)) return hi + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// x-intervals of the graph lying in the half-open box (top face at 1 closed).
inline std::vector<std::pair<double, double>> graph_box_xintervals(const GraphView& g, const Box<2>& world_box) {
  const Box<2> b = g.to_canonical(world_box);
  const double y0 = b.lo[1], y1 = b.hi[1];
  const bool top_closed = y1 >= 1.0;
  std::vector<std::pair<double, double>> out;
  for (const auto& piece : g.pieces()) {
    const double lo = std::max(piece.lo, b.lo[0]);
    const double hi = std::min(piece.hi, b.hi[0]);
    if (!(hi > lo)) continue;
    auto below_top = [&](double y) { return top_closed ? y <= y1 : y < y1; };
    double s, e;
    if (piece.direction > 0) {
      s = first_true([&](double x) { return g.value(x) >= y0; }, lo, hi);
      e = first_true([&](double x) { return !below_top(g.value(x)); }, lo, hi);
    } else {
      s = first_true([&](double x) { return below_top(g.value(x)); }, lo, hi);
      e = first_true([&](double x) { return g.value(x) < y0; }, lo, hi);
    }
    s = std::min(s, hi);
    e = std::min(e, hi);
    if (e > s) out.emplace_back(s, e);
  }
  return out;
}

inline double graph_box_length(const GraphView& g, const Box<2>& box) {
  double total = 0.0;
  for (auto [u, v] : graph_box_xintervals(g, box)) total += g.arc_length(u, v);
  return total;
}

/// sup_x |f(x) - g(x)| over the union of the two domains, each graph continued
/// linearly outside its own domain. Dense grid plus golden-section refinement
/// around the best grid points; PL breakpoints are always sampled.
inline double sup_distance(const GraphView& f, const GraphView& g) {
  const double lo = std::min(f.lo(), g.lo()), hi = std::max(f.hi(), g.hi());
  auto diff = [&](double x) { return std::abs(f.value(x) - g.value(x)); };
  constexpr int kGrid = 4096;
  std::vector<double> xs;
  xs.reserve(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) xs.push_back(lo + (hi - lo) * i / kGrid);
  for (const GraphView* v : {&f, &g})
    if (v->pl())
      for (auto [x, y] : v->pl()->pts) xs.push_back(x);
  double best = 0.0;
  std::vector<std::pair<double, double>> scored;
  scored.reserve(xs.size());
  for (double x : xs) {
    const double dv = diff(x);
    best = std::max(best, dv);
    scored.emplace_back(dv, x);
  }
  const std::size_t keep = std::min<std::size_t>(16, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const auto& p, const auto& q) { return p.first > q.first; });
  const double h = (hi - lo) / kGrid;
  constexpr double kInvPhi = 0.6180339887498949;
  for (std::size_t k = 0; k < keep; ++k) {
    double a = std::max(lo, scored[k].second - h), b = std::min(hi, scored[k].second + h);
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = diff(c), fd = diff(d);
    for (int it = 0; it < 60; ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - kInvPhi * (b - a);
        fc = diff(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + kInvPhi * (b - a);
        fd = diff(d);
      }
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

template <typename F, typename G>
double sup_distance(const F& f, const G& g) {
  return sup_distance(GraphView(f), GraphView(g));
}

}  // namespace tubenull
