#pragma once

// Gauge functions h and the branching schedule a_n / P_n derived from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tubenull/errors.hpp"

namespace tubenull {

enum class GaugeFamily { power, power_log_cubed, table };

inline const char* to_string(GaugeFamily f) {
  switch (f) {
    case GaugeFamily::power: return "power";
    case GaugeFamily::power_log_cubed: return "power_log_cubed";
    case GaugeFamily::table: return "table";
  }
  return "?";
}

/// Below this point power_log_cubed follows c*t^beta*|log t * log|log t||^-3;
/// above it, the pure power t^beta. c makes the two pieces agree at the splice.
/// 1/128 is the largest dyadic splice for which beta = d-1 stays doubling in
/// d = 2 and d = 3 (the log-log factor moves too fast closer to 1/e).
inline constexpr double kLogCubedSplice = 1.0 / 128.0;

/// A gauge h: (0,1] -> (0,1], non-decreasing, normalized so h(1) = 1.
class GaugeSpec {
 public:
  static GaugeSpec power(double beta, int d) {
    GaugeSpec g(GaugeFamily::power, beta, d);
    return g;
  }

  static GaugeSpec power_log_cubed(double beta, int d) {
    GaugeSpec g(GaugeFamily::power_log_cubed, beta, d);
    g.splice_scale_ = 1.0 / log_factor(kLogCubedSplice);
    return g;
  }

  /// Samples (t, h(t)) with t in (0,1]; interpolated linearly in log-log
  /// coordinates and rescaled so that h(1) = 1. The largest sample must be t=1.
  static GaugeSpec table(std::vector<std::pair<double, double>> samples, int d) {
    if (samples.size() < 2) throw invalid_gauge("table gauge needs at least two samples");
    std::sort(samples.begin(), samples.end());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto [t, h] = samples[i];
      if (!(t > 0.0 && t <= 1.0)) throw invalid_gauge("table gauge: t outside (0,1]");
      if (!(h > 0.0)) throw invalid_gauge("table gauge: h must be positive");
      if (i > 0 && samples[i - 1].first == t) throw invalid_gauge("table gauge: duplicate t");
      if (i > 0 && samples[i - 1].second > h) throw invalid_gauge("table gauge: h is decreasing");
    }
    if (samples.back().first != 1.0) throw invalid_gauge("table gauge: last sample must be at t = 1");
    GaugeSpec g(GaugeFamily::table, 0.0, d);
    const double h1 = samples.back().second;
    for (auto [t, h] : samples) {
      g.log_t_.push_back(std::log(t));
      g.log_h_.push_back(std::log(h / h1));
    }
    return g;
  }

  /// Two-column CSV "t,h"; blank lines, '#' comments and a non-numeric header are skipped.
  static GaugeSpec table_from_csv(std::istream& in, int d) {
    std::vector<std::pair<double, double>> samples;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double t = 0.0, h = 0.0;
      if (!(row >> t >> h)) {
        if (samples.empty()) continue;  // header
        throw invalid_gauge("table gauge: malformed CSV row '" + line + "'");
      }
      samples.emplace_back(t, h);
    }
    return table(std::move(samples), d);
  }

  GaugeFamily family() const noexcept { return family_; }
  double beta() const noexcept { return beta_; }
  int dimension() const noexcept { return d_; }

  double operator()(double t) const {
    if (!(t > 0.0 && t <= 1.0)) throw std::domain_error("gauge evaluated outside (0,1]");
    switch (family_) {
      case GaugeFamily::power:
        return std::pow(t, beta_);
      case GaugeFamily::power_log_cubed:
        if (t >= kLogCubedSplice) return std::pow(t, beta_);
        return splice_scale_ * std::pow(t, beta_) * log_factor(t);
      case GaugeFamily::table:
        return std::exp(interpolate_log(std::log(t)));
    }
    return 0.0;
  }

 private:
  GaugeSpec(GaugeFamily family, double beta, int d) : family_(family), beta_(beta), d_(d) {
    if (d < 2) throw std::invalid_argument("gauge dimension must be at least 2");
    if (!(beta >= 0.0) || beta > d) throw invalid_gauge("gauge exponent must lie in [0, d]");
  }

  // |log t * log|log t||^{-3}, valid for t < 1/e.
  static double log_factor(double t) {
    const double lt = std::abs(std::log(t));
    return std::pow(lt * std::log(lt), -3.0);
  }

  double interpolate_log(double lt) const {
    const auto it = std::upper_bound(log_t_.begin(), log_t_.end(), lt);
    std::size_t hi = static_cast<std::size_t>(it - log_t_.begin());
    if (hi == 0) hi = 1;
    if (hi >= log_t_.size()) hi = log_t_.size() - 1;
    const std::size_t lo = hi - 1;
    const double s = (lt - log_t_[lo]) / (log_t_[hi] - log_t_[lo]);
    return log_h_[lo] + s * (log_h_[hi] - log_h_[lo]);
  }

  GaugeFamily family_;
  double beta_;
  int d_;
  double splice_scale_ = 1.0;
  std::vector<double> log_t_, log_h_;
};

inline double eval_gauge(const GaugeSpec& spec, double t) { return spec(t); }

enum class GrowthVariant { linear, polynomial };

struct GaugeDiagnostic {
  bool doubling_ok = true;
  double worst_doubling_ratio = 0.0;  // max h(2t)/h(t) over the sampled grid
  double worst_doubling_t = 0.0;
  std::vector<double> terms;          // dyadic terms, j = 1..m
  std::vector<double> partial_sums;
  double tail_shrink = 0.0;           // geometric mean term ratio per octave over the last quarter
  bool apparently_convergent = false;
};

/// Tail increments must shrink at least this much per octave to call the
/// integral condition apparently convergent.
inline constexpr double kConvergenceShrink = 1.05;

namespace detail {

inline void check_doubling(const GaugeSpec& spec, int depth, GaugeDiagnostic& out) {
  const double limit = std::ldexp(1.0, spec.dimension()) * (1.0 + 1e-12);
  constexpr int kPerOctave = 8;
  for (int j = 1; j <= depth; ++j) {
    for (int k = 0; k < kPerOctave; ++k) {
      const double t = std::exp2(-j - static_cast<double>(k) / kPerOctave);
      const double ratio = spec(2.0 * t) / spec(t);
      if (ratio > out.worst_doubling_ratio) {
        out.worst_doubling_ratio = ratio;
        out.worst_doubling_t = t;
      }
      if (ratio > limit) out.doubling_ok = false;
    }
  }
}

}  // namespace detail

/// Doubling check over dyadic octaves down to 2^-m and a partial-sum
/// diagnostic for the integrability condition. Evidence only, not proof.
inline GaugeDiagnostic verify_gauge_conditions(const GaugeSpec& spec, GrowthVariant variant, int m) {
  if (m < 4) throw std::invalid_argument("verify_gauge_conditions needs depth m >= 4");
  GaugeDiagnostic out;
  detail::check_doubling(spec, m, out);
  const int d = spec.dimension();
  double sum = 0.0;
  for (int j = 1; j <= m; ++j) {
    const double scaled = std::exp2(j * (d - 1.0)) * spec(std::exp2(-j));
    const double term = variant == GrowthVariant::linear ? std::sqrt(j * scaled) : j * std::sqrt(scaled);
    out.terms.push_back(term);
    sum += term;
    out.partial_sums.push_back(sum);
  }
  const int j0 = m - std::max(2, m / 4);
  const double first = out.terms[static_cast<std::size_t>(j0 - 1)];
  const double last = out.terms.back();
  out.tail_shrink = last > 0.0 ? std::pow(first / last, 1.0 / (m - j0)) : INFINITY;
  out.apparently_convergent = out.tail_shrink >= kConvergenceShrink;
  return out;
}

/// a_1..a_N in {1, 2^d} and P_0..P_N. a_{n+1} governs the step A_n -> A_{n+1},
/// so |A_n| = P_n.
class Schedule {
 public:
  Schedule(int d, std::vector<std::uint64_t> a) : d_(d), a_(std::move(a)) {
    if (d < 2) throw std::invalid_argument("schedule dimension must be at least 2");
    const std::uint64_t full = std::uint64_t{1} << d;
    if (a_.size() * static_cast<std::size_t>(d) > 63)
      throw std::invalid_argument("schedule too long for 64-bit cube counts");
    P_.assign(1, 1);
    for (auto ai : a_) {
      if (ai != 1 && ai != full) throw std::invalid_argument("schedule entries must be 1 or 2^d");
      P_.push_back(P_.back() * ai);
    }
  }

  int dimension() const noexcept { return d_; }
  int n_max() const noexcept { return static_cast<int>(a_.size()); }
  /// a_i for 1 <= i <= n_max.
  std::uint64_t a(int i) const { return a_.at(static_cast<std::size_t>(i - 1)); }
  std::uint64_t P(int n) const { return P_.at(static_cast<std::size_t>(n)); }
  const std::vector<std::uint64_t>& entries() const noexcept { return a_; }
  const std::vector<std::uint64_t>& products() const noexcept { return P_; }
  /// True when the step n -> n+1 keeps every child.
  bool step_keeps_all(int n) const { return a(n + 1) == (std::uint64_t{1} << d_); }

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  int d_;
  std::vector<std::uint64_t> a_;
  std::vector<std::uint64_t> P_;
};

/// Greedy schedule: keep all 2^d children while P_n < 1/h(2^-(n+1)).
/// Under doubling this keeps P_n h(2^-n) in [1, 2^d].
inline Schedule build_schedule(const GaugeSpec& spec, int n_max) {
  if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
  const int d = spec.dimension();
  if (spec(1.0) != 1.0) throw invalid_gauge("gauge is not normalized: h(1) != 1");
  GaugeDiagnostic diag;
  detail::check_doubling(spec, std::max(n_max, 1), diag);
  if (!diag.doubling_ok)
    throw invalid_gauge("gauge violates h(2t) <= 2^d h(t) near t = " + std::to_string(diag.worst_doubling_t));
  const std::uint64_t full = std::uint64_t{1} << d;
  std::vector<std::uint64_t> a;
  double P = 1.0;
  for (int n = 0; n < n_max; ++n) {
    const double target = 1.0 / spec(std::exp2(-(n + 1)));
    const std::uint64_t step = P < target ? full : 1;
    a.push_back(step);
    P *= static_cast<double>(step);
  }
  return Schedule(d, std::move(a));
}

/// P_n * h(2^-n); lies in [2^-d, 2^d] for every schedule built from a doubling gauge.
inline double tracking_ratio(const Schedule& s, const GaugeSpec& spec, int n) {
  return static_cast<double>(s.P(n)) * spec(std::exp2(-n));
}

}  // namespace tubenull
