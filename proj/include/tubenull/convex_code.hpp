#pragma once

// Coding of monotone convex graphs with slope in [0, 1] at resolution N:
// breakpoints on the grid X = {j/N²}, values quantized down to X. Two graphs
// with the same code are O(N^-2) apart in sup norm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubenull/curves.hpp"
#include "tubenull/errors.hpp"
#include "tubenull/parallel.hpp"
#include "tubenull/rng.hpp"

namespace tubenull {

/// Breakpoints j/N² and quantized values q/N², both as grid indices.
struct ConvexCode {
  int N = 0;
  std::vector<std::int64_t> breaks;
  std::vector<std::int64_t> values;

  std::int64_t grid() const noexcept { return static_cast<std::int64_t>(N) * N; }
  std::size_t size() const noexcept { return breaks.size(); }
  double x(std::size_t i) const { return static_cast<double>(breaks[i]) / static_cast<double>(grid()); }
  double p(std::size_t i) const { return static_cast<double>(values[i]) / static_cast<double>(grid()); }
  bool operator==(const ConvexCode&) const = default;
  auto operator<=>(const ConvexCode&) const = default;
};

inline constexpr double kSlopeTolerance = 1e-12;
inline constexpr double kGridSnap = 1e-9;

namespace detail {

inline double checked_slope(const GraphView& f, double x) {
  const double s = f.slope(x);
  if (!(s >= -kSlopeTolerance && s <= 1.0 + kSlopeTolerance))
    throw invalid_curve("right derivative " + std::to_string(s) + " at x=" + std::to_string(x) + " outside [0,1]");
  return s;
}

}  // namespace detail

/// Grid indices j (x = j/N²) of the breakpoints: x_0 = 0 and
/// x_{k+1} = min{1, x_k + 1/N, first grid x > x_k with f'(x⁺) >= f'(x_k⁺) + 1/N}.
inline std::vector<std::int64_t> convex_breakpoint_indices(const GraphView& f, int N) {
  if (N < 1) throw std::invalid_argument("resolution N must be positive");
  const std::int64_t grid = static_cast<std::int64_t>(N) * N;
  const double inv = 1.0 / static_cast<double>(grid);
  std::vector<std::int64_t> out{0};
  std::int64_t j = 0;
  while (j < grid) {
    const double threshold = detail::checked_slope(f, j * inv) + 1.0 / N;
    std::int64_t next = std::min(grid, j + N);
    for (std::int64_t c = j + 1; c < next; ++c) {
      if (detail::checked_slope(f, c * inv) >= threshold) {
        next = c;
        break;
      }
    }
    out.push_back(next);
    j = next;
  }
  return out;
}

template <typename G>
std::vector<double> convex_breakpoints(const G& f, int N) {
  const GraphView view(f);
  const double grid = static_cast<double>(N) * N;
  std::vector<double> xs;
  for (auto j : convex_breakpoint_indices(view, N)) xs.push_back(static_cast<double>(j) / grid);
  return xs;
}

/// floor(v) unless v is within kGridSnap of an integer, which is then kept.
inline std::int64_t quantize_down(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) <= kGridSnap * std::max(1.0, std::abs(v))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(v));
}

template <typename G>
ConvexCode convex_code(const G& f, int N) {
  const GraphView view(f);
  ConvexCode code;
  code.N = N;
  code.breaks = convex_breakpoint_indices(view, N);
  const double grid = static_cast<double>(code.grid());
  for (auto j : code.breaks) code.values.push_back(quantize_down(view.value(static_cast<double>(j) / grid) * grid));
  for (std::size_t i = 1; i < code.values.size(); ++i)
    if (code.values[i] < code.values[i - 1]) throw invalid_curve("graph is not non-decreasing on the breakpoints");
  return code;
}

/// Piecewise-linear interpolation of the code values.
inline PLGraph code_reconstruct(const ConvexCode& code) {
  PLGraph g;
  for (std::size_t i = 0; i < code.size(); ++i) g.pts.emplace_back(code.x(i), code.p(i));
  return g;
}

/// Exact sup |f − g| on [0,1] for two piecewise-linear graphs: the difference
/// is piecewise linear, so the maximum sits at a breakpoint of either.
inline double pl_sup_distance(const PLGraph& f, const PLGraph& g) {
  const GraphView a(f), b(g);
  double best = 0.0;
  for (const PLGraph* p : {&f, &g})
    for (auto [x, y] : p->pts)
      if (x >= 0.0 && x <= 1.0) best = std::max(best, std::abs(a.value(x) - b.value(x)));
  for (double x : {0.0, 1.0}) best = std::max(best, std::abs(a.value(x) - b.value(x)));
  return best;
}

/// Random member of the class: `pieces` equal pieces with sorted uniform
/// slopes in [0,1], started at a uniform height that keeps f(1) <= 1.
inline PLGraph random_convex_member(RngStream& rng, int pieces) {
  if (pieces < 1) throw std::invalid_argument("need at least one piece");
  std::vector<double> slopes(static_cast<std::size_t>(pieces));
  for (double& s : slopes) s = rng.uniform();
  std::sort(slopes.begin(), slopes.end());
  const double rise = std::accumulate(slopes.begin(), slopes.end(), 0.0) / pieces;
  PLGraph g;
  double y = rng.uniform() * std::max(0.0, 1.0 - rise);
  g.pts.emplace_back(0.0, y);
  for (int i = 0; i < pieces; ++i) {
    y += slopes[static_cast<std::size_t>(i)] / pieces;
    g.pts.emplace_back(static_cast<double>(i + 1) / pieces, y);
  }
  return g;
}

/// log of (N²+1)^(2N+1) · Σ_{i <= 2N+1} C(N²+1, i), a bound on the number of codes.
inline double log_code_count_bound(int N) {
  const double m = static_cast<double>(N) * N + 1.0;
  const int kmax = 2 * N + 1;
  double acc = -INFINITY;
  for (int i = 0; i <= kmax && i <= m; ++i) {
    const double term = std::lgamma(m + 1.0) - std::lgamma(i + 1.0) - std::lgamma(m - i + 1.0);
    acc = std::max(acc, term) + std::log1p(std::exp(-std::abs(acc - term)));
  }
  return kmax * std::log(m) + acc;
}

struct ConvexNet {
  int N = 0;
  std::vector<PLGraph> samples;
  std::vector<std::size_t> code_of_sample;  // index into `codes`
  std::vector<ConvexCode> codes;            // sorted
  std::vector<std::size_t> representative;  // first sample with each code

  std::size_t code_count() const noexcept { return codes.size(); }
  double log_bound() const { return log_code_count_bound(N); }
};

/// Sampled net: M random members (4N pieces each), grouped by code.
inline ConvexNet convex_net(int N, std::size_t M, std::uint64_t seed) {
  if (N < 2) throw std::invalid_argument("convex_net needs N >= 2");
  ConvexNet net;
  net.N = N;
  net.samples.resize(M);
  std::vector<ConvexCode> per_sample(M);
  parallel_for(M, [&](std::size_t i) {
    RngStream rng(derive(seed, static_cast<std::uint64_t>(N)), i);
    net.samples[i] = random_convex_member(rng, 4 * N);
    per_sample[i] = convex_code(net.samples[i], N);
  });
  std::map<ConvexCode, std::size_t> first;
  for (std::size_t i = 0; i < M; ++i) first.emplace(per_sample[i], i);
  std::map<ConvexCode, std::size_t> slot;
  for (const auto& [code, idx] : first) {
    slot.emplace(code, net.codes.size());
    net.codes.push_back(code);
    net.representative.push_back(idx);
  }
  net.code_of_sample.reserve(M);
  for (std::size_t i = 0; i < M; ++i) net.code_of_sample.push_back(slot.at(per_sample[i]));
  for (std::size_t c = 0; c < net.codes.size(); ++c)
    for (std::size_t i = 0; i < M; ++i)
      if (net.code_of_sample[i] == c) {
        net.representative[c] = i;
        break;
      }
  return net;
}

/// All non-decreasing slope sequences s_1 <= ... <= s_N in {0..N}; member
/// L_s has slope s_i/N on ((i-1)/N, i/N) and L_s(0) = 0.
struct StaircaseFamily {
  int N = 0;
  std::vector<std::vector<int>> slopes;

  std::size_t size() const noexcept { return slopes.size(); }

  /// N²·L_s(i/N) = s_1 + ... + s_i.
  std::vector<std::int64_t> scaled_heights(std::size_t m) const {
    std::vector<std::int64_t> h{0};
    for (int s : slopes[m]) h.push_back(h.back() + s);
    return h;
  }

  PLGraph member(std::size_t m) const {
    PLGraph g;
    const auto h = scaled_heights(m);
    const double n2 = static_cast<double>(N) * N;
    for (std::size_t i = 0; i < h.size(); ++i) g.pts.emplace_back(static_cast<double>(i) / N, static_cast<double>(h[i]) / n2);
    return g;
  }

  /// N² times the smallest pairwise sup distance, exact: members share
  /// breakpoints, so the distance is attained at some i/N.
  std::int64_t min_scaled_distance() const {
    std::vector<std::vector<std::int64_t>> h;
    h.reserve(size());
    for (std::size_t m = 0; m < size(); ++m) h.push_back(scaled_heights(m));
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (std::size_t a = 0; a < h.size(); ++a)
      for (std::size_t b = a + 1; b < h.size(); ++b) {
        std::int64_t d = 0;
        for (std::size_t i = 0; i < h[a].size(); ++i) d = std::max(d, std::abs(h[a][i] - h[b][i]));
        best = std::min(best, d);
      }
    return best;
  }
};

inline double binomial(int n, int k) {
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

inline StaircaseFamily staircase_family(int N) {
  if (N < 1) throw std::invalid_argument("staircase family needs N >= 1");
  if (N > 10)
    throw cardinality_exceeded("staircase family for N=" + std::to_string(N) + " has " +
                                   std::to_string(binomial(2 * N, N)) + " members (limit N <= 10)",
                               binomial(2 * N, N));
  StaircaseFamily fam;
  fam.N = N;
  std::vector<int> s(static_cast<std::size_t>(N), 0);
  for (;;) {
    fam.slopes.push_back(s);
    int pos = N - 1;
    while (pos >= 0 && s[static_cast<std::size_t>(pos)] == N) --pos;
    if (pos < 0) break;
    const int v = s[static_cast<std::size_t>(pos)] + 1;
    for (int i = pos; i < N; ++i) s[static_cast<std::size_t>(i)] = v;
  }
  return fam;
}

/// One added translate: base member `base`, dyadic height k·2^-n crossed at x.
struct Translate {
  std::size_t base;
  std::int64_t k;
  double x;
  double shift;
};

struct AugmentedNet {
  std::vector<Curve> members;  // the base members first, then translates
  std::vector<Translate> translates;
};

namespace detail {

inline Curve shifted(const Curve& c, double dy) {
  return std::visit(
      [&](const auto& g) -> Curve {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, PLGraph>) {
          PLGraph out = g;
          for (auto& p : out.pts) p.second += dy;
          return out;
        } else if constexpr (std::is_same_v<T, ConvexGraph>) {
          ConvexGraph out = g;
          out.f = [f = g.f, dy](double x) { return f(x) + dy; };
          return out;
        } else if constexpr (std::is_same_v<T, PolyGraph>) {
          PolyGraph out = g;
          out.coeffs.at(0) += dy;
          return out;
        } else {
          throw invalid_curve("dyadic_augment needs graph members");
        }
      },
      c);
}

}  // namespace detail

/// Adds translates of each base graph across the dyadic heights k·2^-n that
/// its flat part [a, b] (slope < 2^-(n+1)) comes within 2^(1-ηn) of, crossing
/// y = k·2^-n at every x_i = i·2^-ηn in [a, b].
inline AugmentedNet dyadic_augment(const std::vector<Curve>& base, int n, double eta) {
  if (!(eta > 1.0 && eta < 4.0)) throw std::invalid_argument("η must lie in (1, 4)");
  if (n < 0) throw std::invalid_argument("level must be non-negative");
  AugmentedNet out;
  out.members = base;
  const double flat = std::exp2(-(n + 1));
  const double near = std::exp2(1.0 - eta * n);
  const double step = std::exp2(-eta * n);
  const double height = std::exp2(-n);
  for (std::size_t m = 0; m < base.size(); ++m) {
    if (std::holds_alternative<Line<2>>(base[m])) throw invalid_curve("dyadic_augment needs graph members");
    const auto& c = base[m];
    std::visit(
        [&](const auto& g) {
          using T = std::decay_t<decltype(g)>;
          if constexpr (!std::is_same_v<T, Line<2>>) {
            const GraphView f(g);
            const double a = f.lo();
            if (!(f.slope(a) < flat)) return;
            const double b = f.slope(f.hi()) < flat ? f.hi() : first_true([&](double x) { return f.slope(x) >= flat; }, a, f.hi());
            const double ya = f.value(a), yb = f.value(b);
            const auto k_lo = static_cast<std::int64_t>(std::ceil((ya - near) / height));
            const auto k_hi = static_cast<std::int64_t>(std::floor((yb + near) / height));
            for (std::int64_t k = k_lo; k <= k_hi; ++k) {
              const double level = static_cast<double>(k) * height;
              const double dist = level < ya ? ya - level : (level > yb ? level - yb : 0.0);
              if (!(dist < near)) continue;
              for (auto i = static_cast<std::int64_t>(std::ceil(a / step)); static_cast<double>(i) * step <= b; ++i) {
                const double x = static_cast<double>(i) * step;
                const double dy = level - f.value(x);
                out.translates.push_back({m, k, x, dy});
                out.members.push_back(detail::shifted(c, dy));
              }
            }
          }
        },
        c);
  }
  return out;
}

}  // namespace tubenull
