#pragma once

// Y_n values, one-step resampling experiments, and maxima over finite nets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubenull/fractal.hpp"
#include "tubenull/gauge.hpp"
#include "tubenull/intersection.hpp"
#include "tubenull/parallel.hpp"
#include "tubenull/rng.hpp"

namespace tubenull {

/// 2^{dn} / P_n.
template <int D>
double level_scale(const Realization<D>& r, int n) {
  return std::ldexp(1.0, D * n) / static_cast<double>(r.P(n));
}

/// Y_n = 2^{dn} P_n^{-1} H^1(curve ∩ A_n).
template <int D>
double y_value(const Realization<D>& r, int n, const Line<D>& line) {
  return level_scale(r, n) * curve_levelset_length<D>(line, r, n);
}

inline double y_value(const Realization<2>& r, int n, const Curve& curve) {
  return level_scale(r, n) * curve_levelset_length(curve, r, n);
}

/// Y_0..Y_n in one descent.
template <int D>
std::vector<double> y_series(const Realization<D>& r, int n, const Line<D>& line) {
  auto out = levelset_lengths<D>(line, r, n);
  for (int m = 0; m <= n; ++m) out[static_cast<std::size_t>(m)] *= level_scale(r, m);
  return out;
}

inline std::vector<double> y_series(const Realization<2>& r, int n, const Curve& curve) {
  auto out = levelset_lengths(curve, r, n);
  for (int m = 0; m <= n; ++m) out[static_cast<std::size_t>(m)] *= level_scale(r, m);
  return out;
}

struct BoxCover {
  std::uint64_t count;
  double ratio;  // P_n h(2^-n)
};

inline BoxCover box_cover_count(const Schedule& s, const GaugeSpec& h, int n) {
  return {s.P(n), static_cast<double>(s.P(n)) * h(std::ldexp(1.0, -n))};
}

// ---------------------------------------------------------------------------
// One-step resampling

struct TailReport {
  int n = 0;
  double y_n = 0.0;
  double scale = 0.0;  // 2^{(1-d)n} P_n
  std::vector<double> kappa;
  std::vector<std::size_t> exceed;  // #{|ΔY| > κ sqrt(Y_n)}
  std::vector<double> freq;
  bool fitted = false;
  double A = 1.0;
  double c = 0.0;
  std::size_t fit_points = 0;

  double envelope(double k) const { return A * std::exp(-c * k * k * scale); }

  bool monotone() const {
    for (std::size_t i = 1; i < freq.size(); ++i)
      if (freq[i] > freq[i - 1]) return false;
    return true;
  }

  /// Grid indices with freq(κ) > envelope(κ/2). Without a fit there is no
  /// envelope, so every grid point with a positive frequency is reported.
  std::vector<std::size_t> envelope_violations() const {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < kappa.size(); ++i) {
      if (freq[i] == 0.0) continue;
      if (!fitted || freq[i] > envelope(0.5 * kappa[i])) bad.push_back(i);
    }
    return bad;
  }
};

struct MartingaleReport {
  int n = 0;
  bool deterministic = false;  // a_{n+1} = 2^d, so ΔY = 0
  std::size_t trials = 0;
  double y_n = 0.0;
  double mean = 0.0;
  double se = 0.0;
  std::vector<double> increments;
  TailReport tail;

  bool mean_within(double sigmas) const { return std::abs(mean) <= sigmas * se; }
};

inline constexpr std::size_t kMinFitExceedances = 10;

/// Least-squares fit of log freq against κ²·scale on grid points with at
/// least kMinFitExceedances exceedances.
inline void fit_envelope(TailReport& t) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.kappa.size(); ++i) {
    if (t.exceed[i] < kMinFitExceedances) continue;
    xs.push_back(t.kappa[i] * t.kappa[i] * t.scale);
    ys.push_back(std::log(t.freq[i]));
  }
  t.fit_points = xs.size();
  t.fitted = false;
  if (xs.empty()) return;
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  t.c = -slope;
  t.A = std::exp(my - slope * mx);
  t.fitted = true;
}

/// Exceedance table of |ΔY| / sqrt(Y_n) on `kappa` (or a default 24-point
/// grid up to the largest observed ratio) plus the envelope fit.
inline TailReport tail_report(int n, double y_n, double scale, const std::vector<double>& increments,
                              std::vector<double> kappa = {}) {
  TailReport t;
  t.n = n;
  t.y_n = y_n;
  t.scale = scale;
  const double root = std::sqrt(y_n);
  std::vector<double> ratio;
  ratio.reserve(increments.size());
  for (double dy : increments) ratio.push_back(root > 0.0 ? std::abs(dy) / root : 0.0);
  std::sort(ratio.begin(), ratio.end());
  if (kappa.empty()) {
    const double top = ratio.empty() ? 0.0 : ratio.back();
    constexpr int kPoints = 24;
    for (int i = 1; i <= kPoints; ++i) kappa.push_back(top > 0.0 ? top * i / kPoints : static_cast<double>(i) / kPoints);
  }
  std::sort(kappa.begin(), kappa.end());
  t.kappa = kappa;
  for (double k : kappa) {
    const auto above = static_cast<std::size_t>(ratio.end() - std::upper_bound(ratio.begin(), ratio.end(), k));
    t.exceed.push_back(above);
    t.freq.push_back(increments.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(increments.size()));
  }
  fit_envelope(t);
  return t;
}

/// Resamples the step n -> n+1 `trials` times with A_n frozen and reports
/// the increments ΔY = Y_{n+1} - Y_n of the given line.
template <int D>
MartingaleReport martingale_ensemble(const Realization<D>& r, int n, const Line<D>& line, std::size_t trials,
                                     std::uint64_t seed, std::vector<double> kappa = {}) {
  if (n < 0 || n >= r.schedule().n_max()) throw std::invalid_argument("martingale step beyond the schedule");
  if (n > r.depth()) throw std::invalid_argument("martingale level beyond the realization depth");
  if (trials < 2) throw std::invalid_argument("martingale_ensemble needs at least two trials");
  MartingaleReport rep;
  rep.n = n;
  rep.trials = trials;
  const auto hits = cube_hits<D>(line, r, n);
  CompensatedSum len;
  for (const auto& h : hits) len.add(h.length);
  rep.y_n = level_scale(r, n) * len.value();
  const double scale_tail = std::ldexp(1.0, (1 - D) * n) * static_cast<double>(r.P(n));

  if (r.schedule().step_keeps_all(n)) {
    rep.deterministic = true;
    rep.increments.assign(trials, 0.0);
    rep.tail = tail_report(n, rep.y_n, scale_tail, rep.increments, std::move(kappa));
    return rep;
  }

  constexpr unsigned full = 1u << D;
  std::vector<double> child_len(hits.size() * full);
  for (std::size_t i = 0; i < hits.size(); ++i)
    for (unsigned c = 0; c < full; ++c)
      child_len[i * full + c] = line_box_length(line, hits[i].cube.child(c).box(), BoundaryRule::half_open);

  const double next_scale = std::ldexp(1.0, D * (n + 1)) / static_cast<double>(r.P(n + 1));
  rep.increments.resize(trials);
  parallel_for(trials, [&](std::size_t t) {
    const std::uint64_t stream = RngStream(seed, t).key();
    CompensatedSum s;
    for (std::size_t i = 0; i < hits.size(); ++i)
      s.add(child_len[i * full + child_draw<D>(stream, n + 1, hits[i].cube.key())]);
    rep.increments[t] = next_scale * s.value() - rep.y_n;
  });
  CompensatedSum sum;
  for (double dy : rep.increments) sum.add(dy);
  rep.mean = sum.value() / static_cast<double>(trials);
  CompensatedSum var;
  for (double dy : rep.increments) var.add((dy - rep.mean) * (dy - rep.mean));
  rep.se = std::sqrt(var.value() / static_cast<double>(trials - 1) / static_cast<double>(trials));
  rep.tail = tail_report(n, rep.y_n, scale_tail, rep.increments, std::move(kappa));
  return rep;
}

// ---------------------------------------------------------------------------
// Maxima over finite nets

struct NetTrend {
  std::vector<double> M;             // M[m] = max over the net of Y_m
  std::vector<std::size_t> argmax;  // first member attaining it
};

/// Per-level maxima of Y_m, m = 0..n, over the members of `net`.
template <typename Net, typename SeriesFn>
NetTrend sup_over_net_with(const Net& net, int n, SeriesFn&& series) {
  if (net.empty()) throw std::invalid_argument("sup_over_net needs a non-empty net");
  NetTrend out;
  out.M.assign(static_cast<std::size_t>(n) + 1, -1.0);
  out.argmax.assign(static_cast<std::size_t>(n) + 1, 0);
  constexpr std::size_t kChunk = 1 << 15;
  std::vector<std::vector<double>> chunk;
  for (std::size_t base = 0; base < net.size(); base += kChunk) {
    const std::size_t len = std::min(kChunk, net.size() - base);
    chunk.assign(len, {});
    parallel_for(len, [&](std::size_t i) { chunk[i] = series(net[base + i]); });
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t m = 0; m < out.M.size(); ++m)
        if (chunk[i][m] > out.M[m]) {
          out.M[m] = chunk[i][m];
          out.argmax[m] = base + i;
        }
  }
  return out;
}

template <int D>
NetTrend sup_over_net(const Realization<D>& r, int n, const std::vector<Line<D>>& net) {
  return sup_over_net_with(net, n, [&](const Line<D>& l) { return y_series<D>(r, n, l); });
}

inline NetTrend sup_over_net(const Realization<2>& r, int n, const std::vector<Curve>& net) {
  return sup_over_net_with(net, n, [&](const Curve& c) { return y_series(r, n, c); });
}

struct DominationViolation {
  std::size_t probe;
  double y;
  double bound;
};

struct DominationReport {
  int n = 0;
  double net_max = 0.0;
  double c_net = 0.0;
  double bound = 0.0;  // net_max + c_net 2^-n
  double worst_slack = INFINITY;
  std::size_t worst_probe = 0;
  double max_scaled_excess = -INFINITY;  // max (Y_probe - net_max) 2^n
  std::vector<DominationViolation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Checks Y_n(probe) <= max_net Y_n + c_net 2^-n for every probe.
template <typename Curves, typename Probes, typename YFn>
DominationReport verify_domination_with(int n, const Curves& net, const Probes& probes, double c_net, YFn&& y_of) {
  DominationReport rep;
  rep.n = n;
  rep.c_net = c_net;
  std::vector<double> ys(net.size());
  parallel_for(net.size(), [&](std::size_t i) { ys[i] = y_of(net[i]); });
  rep.net_max = ys.empty() ? 0.0 : *std::max_element(ys.begin(), ys.end());
  rep.bound = rep.net_max + c_net * std::ldexp(1.0, -n);
  std::vector<double> yp(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) { yp[i] = y_of(probes[i]); });
  for (std::size_t i = 0; i < yp.size(); ++i) {
    const double slack = rep.bound - yp[i];
    if (slack < rep.worst_slack) {
      rep.worst_slack = slack;
      rep.worst_probe = i;
    }
    rep.max_scaled_excess = std::max(rep.max_scaled_excess, std::ldexp(yp[i] - rep.net_max, n));
    if (slack < 0.0) rep.violations.push_back({i, yp[i], rep.bound});
  }
  return rep;
}

template <int D>
DominationReport verify_line_net_domination(const Realization<D>& r, int n, const std::vector<Line<D>>& net,
                                            const std::vector<Line<D>>& probes, double c_net) {
  for (const auto& p : probes)
    if (is_dyadic(p, kMaxLevel<D>)) throw std::invalid_argument("domination probes must be non-dyadic");
  return verify_domination_with(n, net, probes, c_net, [&](const Line<D>& l) { return y_value<D>(r, n, l); });
}

}  // namespace tubenull
