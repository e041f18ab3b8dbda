#pragma once

// Experiment configuration, the batch pipelines behind the command-line tool,
// and the markdown report.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "tubenull/convex_code.hpp"
#include "tubenull/fibers.hpp"
#include "tubenull/gauge.hpp"
#include "tubenull/io.hpp"
#include "tubenull/nets.hpp"
#include "tubenull/projection.hpp"
#include "tubenull/stats.hpp"

namespace tubenull {

/// Malformed or out-of-range configuration.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { build, lines, convex, tubes, fibers, report };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::build: return "build";
    case ExperimentKind::lines: return "lines";
    case ExperimentKind::convex: return "convex";
    case ExperimentKind::tubes: return "tubes";
    case ExperimentKind::fibers: return "fibers";
    case ExperimentKind::report: return "report";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::build, ExperimentKind::lines, ExperimentKind::convex, ExperimentKind::tubes,
                 ExperimentKind::fibers, ExperimentKind::report})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct GaugeConfig {
  GaugeFamily family = GaugeFamily::power;
  double beta = 1.5;
  std::vector<std::pair<double, double>> table;
};

struct BuildParams {
  double max_cubes = 4194304;  // levels with more cubes are counted but not written
};

struct LinesParams {
  int level = 8;
  int net_level = 2;
  double net_c0 = 32.0;
  double c_net = 0.0;  // calibrated: net maxima dominated every probe in pilots
  std::size_t probes = 200;
  std::vector<int> martingale_levels{3, 7};
  std::size_t trials = 10000;
  std::vector<double> kappa;
  std::optional<std::pair<double, double>> probe;  // (theta, rho)
};

struct ConvexParams {
  std::vector<int> N{5, 10, 20, 40};
  std::size_t ensemble = 1000;
};

struct TubeEntry {
  double theta, rho, w;
};

struct TubeParams {
  int level = 10;
  int directions = 360;
  double w = 1.0 / 256.0;
  std::vector<TubeEntry> tubes;
  double m0 = 1.0;
  std::optional<double> C;
};

struct FiberParams {
  int level = 12;
  std::size_t lines = 100;
  std::vector<int> r_exponents{4, 5, 6, 7, 8, 9, 10, 11, 12};
};

struct ExperimentConfig {
  int d = 2;
  GaugeConfig gauge;
  int n_max = 10;
  std::uint64_t seed = 1;
  ExperimentKind kind = ExperimentKind::build;
  std::string out = "runs";
  BuildParams build;
  LinesParams lines;
  ConvexParams convex;
  TubeParams tubes;
  FiberParams fibers;

  GaugeSpec gauge_spec() const {
    switch (gauge.family) {
      case GaugeFamily::power: return GaugeSpec::power(gauge.beta, d);
      case GaugeFamily::power_log_cubed: return GaugeSpec::power_log_cubed(gauge.beta, d);
      case GaugeFamily::table: return GaugeSpec::table(gauge.table, d);
    }
    throw config_error("gauge.family: unknown family");
  }

  /// Deepest level that can be materialized for this dimension.
  int n_effective() const { return std::min(n_max, d == 2 ? kMaxLevel<2> : kMaxLevel<3>); }

  /// Every field, keys sorted; the output directory is not part of the experiment.
  json canonical() const {
    json g{{"family", to_string(gauge.family)}, {"beta", gauge.beta}};
    if (gauge.family == GaugeFamily::table) {
      json t = json::array();
      for (auto [x, y] : gauge.table) t.push_back({x, y});
      g["table"] = t;
    }
    json lp{{"level", lines.level},       {"net_level", lines.net_level},
            {"net_c0", lines.net_c0},     {"c_net", lines.c_net},
            {"probes", lines.probes},     {"martingale_levels", lines.martingale_levels},
            {"trials", lines.trials},     {"kappa", lines.kappa}};
    if (lines.probe) lp["probe"] = {{"theta", lines.probe->first}, {"rho", lines.probe->second}};
    json tl = json::array();
    for (const auto& t : tubes.tubes) tl.push_back({{"theta", t.theta}, {"rho", t.rho}, {"w", t.w}});
    json tp{{"level", tubes.level}, {"directions", tubes.directions}, {"w", tubes.w}, {"tubes", tl}, {"m0", tubes.m0}};
    if (tubes.C) tp["C"] = *tubes.C;
    return json{{"d", d},
                {"gauge", g},
                {"n_max", n_max},
                {"seed", seed},
                {"kind", to_string(kind)},
                {"build", {{"max_cubes", build.max_cubes}}},
                {"lines", lp},
                {"convex", {{"N", convex.N}, {"ensemble", convex.ensemble}}},
                {"tubes", tp},
                {"fibers", {{"level", fibers.level}, {"lines", fibers.lines}, {"r_exponents", fibers.r_exponents}}}};
  }

  std::string hash() const { return hex64(fnv1a(canonical().dump())); }
};

struct ValidatedConfig {
  ExperimentConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

/// Typed access to a JSON object that rejects unknown keys and names the
/// offending field in every error.
class Fields {
 public:
  Fields(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw config_error(where("") + ": expected a table/object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(obj_.at(key), where(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string where(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) throw config_error(where(k) + ": unknown field");
  }

  template <typename T>
  static T as(const json& v, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw config_error(name + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw config_error(name + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
          throw config_error(name + ": must be non-negative");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw config_error(name + ": expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw config_error(name + ": expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw config_error(name + ": expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as<typename T::value_type>(v[i], name + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw config_error(field + ": " + msg);
}

inline json parse_raw_config(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw config_error(std::string("parse error (JSON): ") + e.what());
    }
  }
  try {
    const toml::table tbl = toml::parse(text);
    std::ostringstream os;
    os << toml::json_formatter{tbl};
    return json::parse(os.str());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "parse error (TOML) at line " << e.source().begin.line << ": " << e.description();
    throw config_error(os.str());
  }
}

}  // namespace detail

/// Parses a TOML or JSON experiment description (JSON when the first
/// non-blank character is '{'), checks every range, and collects warnings
/// about work that will be refused or clamped at run time.
inline ValidatedConfig validate_config(const std::string& text) {
  const json raw = detail::parse_raw_config(text);
  ValidatedConfig out;
  auto& c = out.config;
  using detail::require;
  detail::Fields top(raw, "");

  c.d = top.get<int>("d", 2);
  require(c.d >= 2, "d", "dimension must be at least 2");
  require(c.d <= 3, "d", "only d = 2 and d = 3 are supported");
  c.n_max = top.get<int>("n_max", 10);
  require(c.n_max >= 0 && c.n_max <= 64, "n_max", "must lie in [0, 64]");
  c.seed = top.get<std::uint64_t>("seed", 1);
  const auto kind = top.get<std::string>("kind", "build");
  const auto parsed_kind = parse_kind(kind);
  require(parsed_kind.has_value(), "kind", "unknown experiment kind '" + kind + "'");
  c.kind = *parsed_kind;
  c.out = top.get<std::string>("out", "runs");

  if (top.has("gauge")) {
    detail::Fields g(top.raw("gauge"), "gauge");
    const auto fam = g.get<std::string>("family", "power");
    if (fam == "power")
      c.gauge.family = GaugeFamily::power;
    else if (fam == "power_log_cubed")
      c.gauge.family = GaugeFamily::power_log_cubed;
    else if (fam == "table")
      c.gauge.family = GaugeFamily::table;
    else
      throw config_error("gauge.family: unknown family '" + fam + "'");
    c.gauge.beta = g.get<double>("beta", c.gauge.family == GaugeFamily::power_log_cubed ? c.d - 1.0 : 1.5);
    require(c.gauge.beta >= 0.0 && c.gauge.beta <= c.d, "gauge.beta", "must lie in [0, d]");
    if (g.has("table")) {
      const auto rows = detail::Fields::as<std::vector<std::vector<double>>>(g.raw("table"), "gauge.table");
      for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == 2, "gauge.table[" + std::to_string(i) + "]", "expected [t, h]");
        c.gauge.table.emplace_back(rows[i][0], rows[i][1]);
      }
    }
    require(c.gauge.family != GaugeFamily::table || !c.gauge.table.empty(), "gauge.table",
            "required for the table family");
    g.finish();
  }
  try {
    (void)build_schedule(c.gauge_spec(), std::min(c.n_effective(), 20));
  } catch (const std::exception& e) {
    throw config_error(std::string("gauge: ") + e.what());
  }

  if (top.has("build")) {
    detail::Fields b(top.raw("build"), "build");
    c.build.max_cubes = b.get<double>("max_cubes", c.build.max_cubes);
    require(c.build.max_cubes >= 1 && c.build.max_cubes <= 1e9, "build.max_cubes", "must lie in [1, 1e9]");
    b.finish();
  }
  if (top.has("lines")) {
    detail::Fields l(top.raw("lines"), "lines");
    auto& p = c.lines;
    p.level = l.get<int>("level", p.level);
    p.net_level = l.get<int>("net_level", p.net_level);
    p.net_c0 = l.get<double>("net_c0", p.net_c0);
    p.c_net = l.get<double>("c_net", p.c_net);
    p.probes = l.get<std::size_t>("probes", p.probes);
    p.martingale_levels = l.get<std::vector<int>>("martingale_levels", p.martingale_levels);
    p.trials = l.get<std::size_t>("trials", p.trials);
    p.kappa = l.get<std::vector<double>>("kappa", p.kappa);
    if (l.has("probe")) {
      detail::Fields pr(l.raw("probe"), "lines.probe");
      p.probe = std::make_pair(pr.get<double>("theta", 0.0), pr.get<double>("rho", 0.0));
      pr.finish();
    }
    l.finish();
    require(p.level >= 0 && p.level <= c.n_max, "lines.level", "must lie in [0, n_max]");
    require(p.net_level >= 0 && p.net_level <= 8, "lines.net_level", "must lie in [0, 8]");
    require(p.net_c0 > 0.0, "lines.net_c0", "must be positive");
    require(p.c_net >= 0.0, "lines.c_net", "must be non-negative");
    require(p.trials >= 1000, "lines.trials", "at least 1000 resamples are required");
    for (int m : p.martingale_levels)
      require(m >= 0 && m < c.n_max, "lines.martingale_levels", "levels must lie in [0, n_max)");
    for (double k : p.kappa) require(k > 0.0, "lines.kappa", "grid values must be positive");
  }
  if (top.has("convex")) {
    detail::Fields v(top.raw("convex"), "convex");
    c.convex.N = v.get<std::vector<int>>("N", c.convex.N);
    c.convex.ensemble = v.get<std::size_t>("ensemble", c.convex.ensemble);
    v.finish();
    require(!c.convex.N.empty(), "convex.N", "needs at least one resolution");
    for (int N : c.convex.N) require(N >= 2 && N <= 200, "convex.N", "resolutions must lie in [2, 200]");
    require(c.convex.ensemble >= 1, "convex.ensemble", "must be positive");
  }
  if (top.has("tubes")) {
    detail::Fields t(top.raw("tubes"), "tubes");
    auto& p = c.tubes;
    p.level = t.get<int>("level", p.level);
    p.directions = t.get<int>("directions", p.directions);
    p.w = t.get<double>("w", p.w);
    p.m0 = t.get<double>("m0", p.m0);
    if (t.has("C")) p.C = detail::Fields::as<double>(t.raw("C"), "tubes.C");
    if (t.has("tubes")) {
      const auto& arr = t.raw("tubes");
      require(arr.is_array(), "tubes.tubes", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        detail::Fields e(arr[i], "tubes.tubes[" + std::to_string(i) + "]");
        TubeEntry te{e.get<double>("theta", 0.0), e.get<double>("rho", 0.0), e.get<double>("w", 0.0)};
        e.finish();
        require(te.w > 0.0, e.where("w"), "must be positive");
        p.tubes.push_back(te);
      }
    }
    t.finish();
    require(p.level >= 0 && p.level <= c.n_max, "tubes.level", "must lie in [0, n_max]");
    require(p.directions >= 1 && p.directions <= 100000, "tubes.directions", "must lie in [1, 100000]");
    require(p.w >= std::ldexp(1.0, -p.level) && p.w <= 2.0, "tubes.w", "must lie in [2^-level, 2]");
    require(p.m0 > 0.0, "tubes.m0", "must be positive");
    require(!p.C || *p.C > 0.0, "tubes.C", "must be positive");
  }
  if (top.has("fibers")) {
    detail::Fields f(top.raw("fibers"), "fibers");
    c.fibers.level = f.get<int>("level", c.fibers.level);
    c.fibers.lines = f.get<std::size_t>("lines", c.fibers.lines);
    c.fibers.r_exponents = f.get<std::vector<int>>("r_exponents", c.fibers.r_exponents);
    f.finish();
    require(c.fibers.level >= 0 && c.fibers.level <= c.n_max, "fibers.level", "must lie in [0, n_max]");
    for (int e : c.fibers.r_exponents)
      require(e >= 0 && e <= c.fibers.level, "fibers.r_exponents", "need 2^-level <= r <= 1");
  }
  top.finish();

  if (c.d != 2 && (c.kind == ExperimentKind::lines || c.kind == ExperimentKind::convex ||
                   c.kind == ExperimentKind::tubes || c.kind == ExperimentKind::fibers))
    throw config_error(std::string("d: the ") + to_string(c.kind) + " experiment is planar (d = 2)");

  const int deepest = c.d == 2 ? kMaxLevel<2> : kMaxLevel<3>;
  if (c.n_max > deepest)
    out.warnings.push_back("n_max: levels beyond " + std::to_string(deepest) + " do not fit 64-bit cube keys in d=" +
                           std::to_string(c.d) + "; runs stop at level " + std::to_string(deepest));
  if (c.kind == ExperimentKind::lines) {
    const double est = line_net_size_estimate(c.lines.net_level, c.lines.net_c0);
    if (est > kDefaultNetCap)
      out.warnings.push_back("lines.net_level: the level-" + std::to_string(c.lines.net_level) +
                             " line net would hold about " + std::to_string(est) + " lines, above the cap of " +
                             std::to_string(kDefaultNetCap) + "; the run will refuse it");
    for (int m : c.lines.martingale_levels)
      if (m >= deepest) out.warnings.push_back("lines.martingale_levels: level " + std::to_string(m) + " is too deep");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
  int status = 0;  // 0 all properties hold, 1 some property failed
  std::filesystem::path dir;
  json summary;
  std::vector<std::string> files;
};

namespace detail {

class RunWriter {
 public:
  RunWriter(std::filesystem::path dir, RunResult& result) : dir_(std::move(dir)), result_(result) {}

  void write(const std::string& name, const std::string& body) {
    write_atomic(dir_ / name, body);
    result_.files.push_back(name);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  RunResult& result_;
};

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <int D>
void run_build(const ExperimentConfig& c, RunWriter& w, json& s) {
  const auto h = c.gauge_spec();
  const int n = c.n_effective();
  const auto sched = build_schedule(h, n);
  Csv table({"n", "a_n", "P_n", "ratio"});
  double lo = INFINITY, hi = 0.0;
  for (int m = 0; m <= n; ++m) {
    const auto bc = box_cover_count(sched, h, m);
    table.row(m, m == 0 ? std::uint64_t{1} : sched.a(m), bc.count, bc.ratio);
    lo = std::min(lo, bc.ratio);
    hi = std::max(hi, bc.ratio);
  }
  w.write("box_cover.csv", table.str());
  int written = 0;
  while (written < n && static_cast<double>(sched.P(written + 1)) <= c.build.max_cubes) ++written;
  const auto r = build_levels<D>(sched, c.seed, written);
  for (int m = 0; m <= written; ++m) {
    std::ostringstream name;
    name << "levels/level_" << std::setw(2) << std::setfill('0') << m << ".txt";
    w.write(name.str(), serialize_level<D>(r.level(m), r.P(m), c.seed));
  }
  const double bound = std::ldexp(1.0, D);
  s["n_effective"] = n;
  s["levels_written"] = written;
  s["ratio_min"] = lo;
  s["ratio_max"] = hi;
  s["properties"]["box_count_tracks_gauge"] = lo >= 1.0 / bound && hi <= bound;
}

inline Line<2> seeded_line(std::uint64_t seed, std::uint64_t label, std::size_t i) {
  RngStream rng(derive(seed, label), i);
  return random_line(rng);
}

inline void run_lines(const ExperimentConfig& c, RunWriter& w, json& s) {
  const auto& p = c.lines;
  const auto h = c.gauge_spec();
  int depth = p.level;
  for (int m : p.martingale_levels) depth = std::max(depth, m);
  const auto sched = build_schedule(h, std::max(depth + 1, 1));
  const auto r = build_levels<2>(sched, c.seed, depth);

  const auto net = line_net(p.net_level, p.net_c0);
  const auto trend = sup_over_net<2>(r, p.level, net.lines);
  Csv tcsv({"n", "M_n", "argmax_theta", "argmax_rho", "slack"});
  for (int m = 0; m <= p.level; ++m) {
    const auto [theta, rho] = net.lines[trend.argmax[static_cast<std::size_t>(m)]].normal_form();
    tcsv.row(m, trend.M[static_cast<std::size_t>(m)], theta, rho, p.c_net * std::ldexp(1.0, -m));
  }
  w.write("trend.csv", tcsv.str());

  std::vector<Line<2>> probes;
  for (std::size_t i = 0; i < p.probes; ++i) probes.push_back(seeded_line(c.seed, 0x70726f6265, i));
  const auto dom = verify_line_net_domination<2>(r, p.level, net.lines, probes, p.c_net);
  Csv dcsv({"probe", "theta", "rho", "y", "bound", "slack"});
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto [theta, rho] = probes[i].normal_form();
    const double y = y_value<2>(r, p.level, probes[i]);
    dcsv.row(i, theta, rho, y, dom.bound, dom.bound - y);
  }
  w.write("domination.csv", dcsv.str());

  const Line<2> probe = p.probe ? Line<2>::from_normal(p.probe->first, p.probe->second) : seeded_line(c.seed, 0x6d617274, 0);
  Csv mcsv({"n", "deterministic", "y_n", "mean", "se", "within_3se"});
  Csv kcsv({"n", "kappa", "exceed", "freq", "envelope", "envelope_half", "A", "c", "fitted"});
  bool means_ok = true, tails_ok = true;
  for (int m : p.martingale_levels) {
    const auto rep = martingale_ensemble<2>(r, m, probe, p.trials, derive(c.seed, 0x656e73, static_cast<std::uint64_t>(m)), p.kappa);
    mcsv.row(m, rep.deterministic ? 1 : 0, rep.y_n, rep.mean, rep.se, rep.mean_within(3.0) ? 1 : 0);
    means_ok = means_ok && rep.mean_within(3.0);
    const auto& t = rep.tail;
    for (std::size_t i = 0; i < t.kappa.size(); ++i)
      kcsv.row(m, t.kappa[i], t.exceed[i], t.freq[i], t.fitted ? t.envelope(t.kappa[i]) : 0.0,
               t.fitted ? t.envelope(0.5 * t.kappa[i]) : 0.0, t.A, t.c, t.fitted ? 1 : 0);
    tails_ok = tails_ok && t.monotone() && t.envelope_violations().empty();
  }
  w.write("martingale.csv", mcsv.str());
  w.write("tail.csv", kcsv.str());

  const auto [pt, pr] = probe.normal_form();
  s["net"] = {{"level", p.net_level}, {"c0", p.net_c0}, {"cardinality", net.size()}};
  s["maxima"] = trend.M;
  s["probe"] = {{"theta", pt}, {"rho", pr}};
  s["domination"] = {{"net_max", dom.net_max},         {"c_net", dom.c_net},
                     {"worst_slack", dom.worst_slack}, {"violations", dom.violations.size()},
                     {"max_scaled_excess", dom.max_scaled_excess}};
  s["properties"]["net_domination"] = dom.ok();
  s["properties"]["martingale_mean"] = means_ok;
  s["properties"]["tail_envelope"] = tails_ok;
}

/// "j/N²" with 0 and 1 written plainly.
inline std::string grid_fraction(std::int64_t j, std::int64_t grid) {
  if (j == 0) return "0";
  if (j == grid) return "1";
  return std::to_string(j) + "/" + std::to_string(grid);
}

inline void run_convex(const ExperimentConfig& c, RunWriter& w, json& s) {
  const ConvexGraph cubic{[](double x) { return x * x * x / 3.0; }, [](double x) { return x * x; }, 0.0, 1.0};
  const auto fig = convex_code(cubic, 5);
  Csv fcsv({"i", "x", "x_value", "p", "p_value"});
  std::string listed;
  for (std::size_t i = 0; i < fig.size(); ++i) {
    fcsv.row(i, grid_fraction(fig.breaks[i], fig.grid()), fig.x(i), grid_fraction(fig.values[i], fig.grid()), fig.p(i));
    listed += (i ? ", " : "") + grid_fraction(fig.breaks[i], fig.grid());
  }
  w.write("breakpoints_cubic_N5.csv", fcsv.str());

  Csv rcsv({"N", "cubic_err", "cubic_scaled", "ensemble_err", "ensemble_scaled", "max_breakpoints", "gap_violations"});
  std::size_t total_violations = 0;
  json per_n = json::array();
  for (int N : c.convex.N) {
    const auto code = convex_code(cubic, N);
    const double cubic_err = sup_distance(GraphView(code_reconstruct(code)), GraphView(cubic));
    std::vector<double> errs(c.convex.ensemble);
    std::vector<std::size_t> sizes(c.convex.ensemble), bad(c.convex.ensemble);
    parallel_for(c.convex.ensemble, [&](std::size_t i) {
      RngStream rng(derive(c.seed, 0x636f6e76, static_cast<std::uint64_t>(N)), i);
      const auto f = random_convex_member(rng, 4 * N);
      const auto k = convex_code(f, N);
      errs[i] = pl_sup_distance(code_reconstruct(k), f);
      sizes[i] = k.size();
      std::size_t v = k.size() > static_cast<std::size_t>(2 * N + 1) ? 1 : 0;
      for (std::size_t j = 1; j < k.size(); ++j) {
        const auto gap = k.breaks[j] - k.breaks[j - 1];
        if (!(gap > 1 && gap <= N)) ++v;
      }
      bad[i] = v;
    });
    const double e = *std::max_element(errs.begin(), errs.end());
    const auto sz = *std::max_element(sizes.begin(), sizes.end());
    std::size_t viol = 0;
    for (auto v : bad) viol += v;
    total_violations += viol;
    const double n2 = static_cast<double>(N) * N;
    rcsv.row(N, cubic_err, cubic_err * n2, e, e * n2, sz, viol);
    per_n.push_back({{"N", N}, {"ensemble_scaled", e * n2}, {"gap_violations", viol}});
  }
  w.write("reconstruction.csv", rcsv.str());
  s["cubic_breakpoints_N5"] = "{" + listed + "}";
  s["resolutions"] = per_n;
  s["properties"]["cubic_breakpoints_N5"] = listed == "0, 5/25, 10/25, 15/25, 19/25, 23/25, 1";
  s["properties"]["breakpoint_gaps"] = total_violations == 0;
}

inline void run_tubes(const ExperimentConfig& c, RunWriter& w, json& s) {
  const auto& p = c.tubes;
  const auto sched = build_schedule(c.gauge_spec(), std::max(p.level, 1));
  const auto r = build_levels<2>(sched, c.seed, p.level);
  const auto& level = r.level(p.level);
  const auto dirs = direction_net(p.directions);
  const auto pd = projection_density_sup(level, r.P(p.level), dirs, p.w);
  Csv pcsv({"direction", "phi", "density"});
  for (std::size_t i = 0; i < dirs.size(); ++i) pcsv.row(i, dirs[i], pd.per_direction[i]);
  w.write("projection.csv", pcsv.str());
  double C = 0.0;
  json sweep = json::array();
  if (p.C) {
    C = *p.C;
  } else {
    const auto bound = refine_density_bound(level, r.P(p.level), dirs, p.w);
    for (auto [bw, sup] : bound.sweep) sweep.push_back({bw, sup});
    C = 2.0 * bound.density;
  }
  std::vector<TubeSpec<2>> tubes;
  Csv tcsv({"tube", "theta", "rho", "w", "mass", "ratio"});
  for (std::size_t i = 0; i < p.tubes.size(); ++i) {
    const auto& t = p.tubes[i];
    tubes.push_back({Line<2>::from_normal(t.theta, t.rho), t.w});
    const auto m = tube_mass_ratio(level, r.P(p.level), tubes.back());
    tcsv.row(i, t.theta, t.rho, t.w, m.mass, m.ratio);
  }
  w.write("tubes.csv", tcsv.str());
  s["projection_density_sup"] = pd.sup;
  s["density_sweep"] = sweep;
  s["C"] = C;
  if (!tubes.empty()) {
    const auto cert = tube_cover_certificate<2>(level, r.P(p.level), tubes, p.m0, C);
    s["certificate"] = {{"sum_w", cert.sum_w},   {"required", cert.required},       {"slack", cert.slack},
                        {"sum_mu", cert.sum_mu}, {"covers_mass", cert.covers_mass}, {"density_ok", cert.density_ok},
                        {"verdict", cert.verdict}};
    s["properties"]["tube_certificate"] = cert.consistent;
  }
}

inline void run_fibers(const ExperimentConfig& c, RunWriter& w, json& s) {
  const auto& p = c.fibers;
  const auto h = c.gauge_spec();
  const auto sched = build_schedule(h, std::max(p.level, 1));
  const auto r = build_levels<2>(sched, c.seed, p.level);
  std::vector<std::vector<FiberCover>> res(p.lines);
  std::vector<Line<2>> lines;
  for (std::size_t i = 0; i < p.lines; ++i) lines.push_back(seeded_line(c.seed, 0x6669626572, i));
  parallel_for(p.lines, [&](std::size_t i) {
    const auto iv = intersection_intervals<2>(lines[i], r, p.level);
    for (int e : p.r_exponents) {
      const double len = std::ldexp(1.0, -e);
      const auto count = greedy_cover_count(iv, len);
      res[i].push_back({count, static_cast<double>(count) * h(len) / len});
    }
  });
  Csv fcsv({"line", "theta", "rho", "r", "count", "ratio"});
  std::vector<double> worst(p.r_exponents.size(), 0.0);
  for (std::size_t i = 0; i < p.lines; ++i) {
    const auto [theta, rho] = lines[i].normal_form();
    for (std::size_t k = 0; k < p.r_exponents.size(); ++k) {
      fcsv.row(i, theta, rho, std::ldexp(1.0, -p.r_exponents[k]), res[i][k].count, res[i][k].ratio);
      worst[k] = std::max(worst[k], res[i][k].ratio);
    }
  }
  w.write("fibers.csv", fcsv.str());
  const double hi = worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
  const double lo = worst.empty() ? 0.0 : *std::min_element(worst.begin(), worst.end());
  s["max_ratio_per_r"] = worst;
  s["band"] = lo > 0.0 ? hi / lo : INFINITY;
  s["properties"]["fiber_band_within_4"] = lo > 0.0 && hi <= 4.0 * lo;
}

}  // namespace detail

/// Human-readable summary of a finished run directory; throws with the list
/// of missing files when the run is incomplete.
inline std::string emit_report(const std::filesystem::path& dir);

/// Runs the configured pipeline into `dir`, writing CSV tables and
/// summary.json. Module errors propagate as exceptions.
inline RunResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& dir) {
  RunResult res;
  res.dir = dir;
  detail::RunWriter w(dir, res);
  if (c.kind == ExperimentKind::report) {
    w.write("report.md", emit_report(dir));
    return res;
  }
  json s{{"kind", to_string(c.kind)}, {"config_hash", c.hash()}, {"seed", c.seed}, {"config", c.canonical()},
         {"created", detail::utc_now()}, {"properties", json::object()}};
  switch (c.kind) {
    case ExperimentKind::build:
      if (c.d == 2)
        detail::run_build<2>(c, w, s);
      else
        detail::run_build<3>(c, w, s);
      break;
    case ExperimentKind::lines: detail::run_lines(c, w, s); break;
    case ExperimentKind::convex: detail::run_convex(c, w, s); break;
    case ExperimentKind::tubes: detail::run_tubes(c, w, s); break;
    case ExperimentKind::fibers: detail::run_fibers(c, w, s); break;
    case ExperimentKind::report: break;
  }
  for (const auto& [name, ok] : s["properties"].items())
    if (!ok.get<bool>()) res.status = 1;
  s["status"] = res.status;
  w.write("summary.json", s.dump(2) + "\n");
  res.summary = std::move(s);
  return res;
}

/// A run directory is missing files the report needs.
class report_error : public std::runtime_error {
 public:
  report_error(const std::string& what, std::vector<std::string> missing)
      : std::runtime_error(what), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

namespace detail {

inline std::vector<std::string> expected_files(const std::string& kind) {
  if (kind == "build") return {"box_cover.csv"};
  if (kind == "lines") return {"trend.csv", "domination.csv", "martingale.csv", "tail.csv"};
  if (kind == "convex") return {"breakpoints_cubic_N5.csv", "reconstruction.csv"};
  if (kind == "tubes") return {"projection.csv", "tubes.csv"};
  if (kind == "fibers") return {"fibers.csv"};
  return {};
}

/// Markdown table of selected CSV columns, in file order.
inline std::string csv_table(const CsvTable& t, const std::vector<std::string>& cols) {
  std::ostringstream os;
  os << "|";
  for (const auto& c : cols) os << ' ' << c << " |";
  os << "\n|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "---|";
  os << '\n';
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(t.column(c));
  for (const auto& row : t.rows) {
    os << "|";
    for (auto i : idx) os << ' ' << (i < row.size() ? row[i] : "") << " |";
    os << '\n';
  }
  return os.str();
}

/// Rows of tail.csv where the observed frequency exceeds the envelope at κ/2.
inline std::vector<std::size_t> tail_violations(const CsvTable& t) {
  const auto f = t.column("freq"), e = t.column("envelope_half"), fit = t.column("fitted");
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double freq = std::stod(t.rows[i].at(f));
    if (freq == 0.0) continue;
    if (t.rows[i].at(fit) != "1" || freq > std::stod(t.rows[i].at(e))) bad.push_back(i);
  }
  return bad;
}

}  // namespace detail

inline std::string emit_report(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir / "summary.json")) throw report_error("run directory is incomplete", {"summary.json"});
  const json s = json::parse(read_file(dir / "summary.json"));
  const std::string kind = s.value("kind", "");
  std::vector<std::string> missing;
  for (const auto& f : detail::expected_files(kind))
    if (!fs::exists(dir / f)) missing.push_back(f);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw report_error("run directory is missing: " + list, missing);
  }
  auto load = [&](const std::string& f) { return parse_csv(read_file(dir / f)); };

  std::ostringstream md;
  md << "# " << kind << " run\n\n";
  md << "- config hash: `" << s.value("config_hash", "") << "`\n";
  md << "- seed: " << s.value("seed", std::uint64_t{0}) << "\n\n";

  json props = s.value("properties", json::object());
  if (kind == "lines") {
    const bool tail_flag = !detail::tail_violations(load("tail.csv")).empty();
    props["tail_envelope"] = !tail_flag;
  }
  md << "## Properties\n\n| property | result |\n|---|---|\n";
  for (const auto& [name, ok] : props.items()) md << "| " << name << " | " << (ok.get<bool>() ? "pass" : "FAIL") << " |\n";
  md << '\n';

  if (kind == "build") {
    md << "## Box counts\n\n" << detail::csv_table(load("box_cover.csv"), {"n", "P_n", "ratio"});
  } else if (kind == "lines") {
    md << "## Net maxima\n\n" << detail::csv_table(load("trend.csv"), {"n", "M_n", "slack"});
    md << "\n## One-step increments\n\n" << detail::csv_table(load("martingale.csv"), {"n", "deterministic", "mean", "se"});
    const auto tail = load("tail.csv");
    const auto bad = detail::tail_violations(tail);
    md << "\n## Tail envelope\n\n";
    if (bad.empty()) {
      md << "All exceedance frequencies lie below the fitted envelope at κ/2.\n";
    } else {
      md << "**Envelope violations** (frequency above the envelope at κ/2):\n\n";
      CsvTable sub{tail.header, {}};
      for (auto i : bad) sub.rows.push_back(tail.rows[i]);
      md << detail::csv_table(sub, {"n", "kappa", "freq", "envelope_half"});
    }
  } else if (kind == "convex") {
    md << "Breakpoints of x³/3 at N=5: " << s.value("cubic_breakpoints_N5", "") << "\n\n";
    md << "## Reconstruction error\n\n"
       << detail::csv_table(load("reconstruction.csv"), {"N", "cubic_scaled", "ensemble_scaled", "gap_violations"});
  } else if (kind == "tubes") {
    md << "- sup projection density: " << s.value("projection_density_sup", 0.0) << "\n";
    md << "- density bound C: " << s.value("C", 0.0) << "\n";
    if (s.contains("certificate")) md << "- certificate: " << s["certificate"].value("verdict", "") << "\n";
    md << "\n## Tubes\n\n" << detail::csv_table(load("tubes.csv"), {"tube", "w", "mass", "ratio"});
  } else if (kind == "fibers") {
    md << "- band (max/min of the per-r maximum ratio): " << s.value("band", 0.0) << "\n";
  }
  md << "\nData files are plain CSV with a header row; columns can be plotted directly (e.g. gnuplot "
        "`set datafile separator ','`).\n";
  return md.str();
}

}  // namespace tubenull
