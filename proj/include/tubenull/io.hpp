#pragma once

// File formats: level sets, curves and nets as JSON, CSV tables, atomic writes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tubenull/curves.hpp"
#include "tubenull/fractal.hpp"
#include "tubenull/nets.hpp"

namespace tubenull {

using json = nlohmann::json;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << body;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Shortest round-trip representation of a double.
inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  double back = 0.0;
  for (int p = 6; p <= 17; ++p) {
    std::ostringstream t;
    t << std::setprecision(p) << v;
    std::istringstream(t.str()) >> back;
    if (back == v) return t.str();
  }
  return os.str();
}

/// Small CSV builder; cells are written as given, numbers via fmt().
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

  template <typename... T>
  void row(const T&... cells) {
    if (sizeof...(T) != cols_) throw std::logic_error("csv row width mismatch");
    bool first = true;
    ((body_ << (first ? "" : ",") << cell(cells), first = false), ...);
    body_ << '\n';
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) body_ << (i ? "," : "") << cells[i];
    body_ << '\n';
  }

  std::string str() const { return body_.str(); }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <typename I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::size_t cols_;
  std::ostringstream body_;
};

/// Reads a CSV with a header row into named string columns.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("missing CSV column '" + name + "'");
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (std::getline(in, line)) t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

// ---------------------------------------------------------------------------
// Level sets: a JSON header line {d, n, P_n, seed}, then one cube per line
// as "n c_1 ... c_d".

template <int D>
std::string serialize_level(const LevelSet<D>& level, std::uint64_t P, std::uint64_t seed) {
  std::ostringstream os;
  os << json{{"d", D}, {"n", level.level()}, {"P_n", P}, {"seed", seed}}.dump() << '\n';
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto cube = level.cube(i);
    os << level.level();
    for (int k = 0; k < D; ++k) os << ' ' << cube.coords[k];
    os << '\n';
  }
  return os.str();
}

struct LevelFileHeader {
  int d = 0;
  int n = 0;
  std::uint64_t P = 0;
  std::uint64_t seed = 0;
};

template <int D>
std::pair<LevelFileHeader, LevelSet<D>> parse_level(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty level file");
  const auto head = json::parse(line);
  LevelFileHeader h{head.at("d").get<int>(), head.at("n").get<int>(), head.at("P_n").get<std::uint64_t>(),
                    head.at("seed").get<std::uint64_t>()};
  if (h.d != D) throw std::runtime_error("level file dimension mismatch");
  std::vector<std::uint64_t> keys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int n = 0;
    Coords<D> c{};
    ls >> n;
    for (int k = 0; k < D; ++k) ls >> c[k];
    if (!ls || n != h.n) throw std::runtime_error("malformed level file line: " + line);
    keys.push_back(morton_encode<D>(c, n));
  }
  std::sort(keys.begin(), keys.end());
  if (keys.size() != h.P) throw std::runtime_error("level file holds a different number of cubes than P_n");
  return {h, LevelSet<D>(h.n, std::move(keys))};
}

// ---------------------------------------------------------------------------
// Curves

inline json curve_to_json(const Curve& c) {
  return std::visit(
      [](const auto& g) -> json {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Line<2>>) {
          const auto [theta, rho] = g.normal_form();
          return {{"line", {{"theta", theta}, {"rho", rho}}}};
        } else if constexpr (std::is_same_v<T, PolyGraph>) {
          return {{"poly", {{"coeffs", g.coeffs}, {"swap", g.swap}, {"reflect", g.reflect}}}};
        } else if constexpr (std::is_same_v<T, PLGraph>) {
          json pts = json::array();
          for (auto [x, y] : g.pts) pts.push_back({x, y});
          return {{"pl", {{"pts", pts}}}};
        } else {
          throw std::invalid_argument("convex graphs given by evaluators cannot be serialized");
        }
      },
      c);
}

inline Curve curve_from_json(const json& j) {
  if (j.contains("line")) {
    const auto& l = j.at("line");
    return Line<2>::from_normal(l.at("theta").get<double>(), l.at("rho").get<double>());
  }
  if (j.contains("poly")) {
    const auto& p = j.at("poly");
    PolyGraph g;
    g.coeffs = p.at("coeffs").get<std::vector<double>>();
    g.swap = p.value("swap", false);
    g.reflect = p.value("reflect", false);
    return g;
  }
  if (j.contains("pl")) {
    PLGraph g;
    for (const auto& pt : j.at("pl").at("pts")) g.pts.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
    validate(g);
    return g;
  }
  throw std::invalid_argument("unknown curve record");
}

/// {"header": {...}, "curves": [...]}.
inline json net_to_json(const std::vector<Curve>& curves, json header) {
  header["cardinality"] = curves.size();
  json arr = json::array();
  for (const auto& c : curves) arr.push_back(curve_to_json(c));
  return {{"header", std::move(header)}, {"curves", std::move(arr)}};
}

inline json line_net_to_json(const LineNet& net) {
  json header{{"kind", "line_net"}, {"n", net.level}, {"c0", net.c0}};
  json arr = json::array();
  for (std::size_t i = 0; i < net.size(); ++i) {
    json rec = curve_to_json(net.lines[i]);
    rec["component"] = static_cast<int>(net.component[i]);
    if (net.perturbed[i]) rec["perturbed"] = true;
    arr.push_back(std::move(rec));
  }
  header["cardinality"] = net.size();
  return {{"header", std::move(header)}, {"curves", std::move(arr)}};
}

}  // namespace tubenull
