#pragma once

// Projections of the level measure mu_n (mass 1/P_n spread uniformly on each
// surviving cube) and tube masses.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubenull/fractal.hpp"
#include "tubenull/geometry.hpp"
#include "tubenull/parallel.hpp"
#include "tubenull/rng.hpp"

namespace tubenull {

/// The w-neighbourhood of a line; w is the radius, the full thickness is 2w.
template <int D>
struct TubeSpec {
  Line<D> core;
  double w;
};

/// Directions φ_i = iπ/count, i < count (the line direction is (cos φ, sin φ)).
inline std::vector<double> direction_net(int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(std::numbers::pi * i / count);
  return out;
}

struct ProjectionDensity {
  double sup = 0.0;
  std::size_t direction = 0;      // index attaining the sup
  std::int64_t bin = 0;           // bin [bin·w, (bin+1)·w) attaining it
  std::vector<double> per_direction;
};

namespace detail {

inline std::vector<Point<2>> cube_centres(const LevelSet<2>& level) {
  const double side = std::ldexp(1.0, -level.level());
  std::vector<Point<2>> out(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto cube = level.cube(i);
    out[i] = {(static_cast<double>(cube.coords[0]) + 0.5) * side, (static_cast<double>(cube.coords[1]) + 0.5) * side};
  }
  return out;
}

/// Mass per bin of the projection of the level measure onto the normal
/// n = (-sin φ, cos φ), bins [k w, (k+1) w); returns (first bin, masses).
inline std::pair<std::int64_t, std::vector<double>> project_2d(const std::vector<Point<2>>& centres, int n,
                                                                std::uint64_t P, double phi, double w) {
  double nx = -std::sin(phi), ny = std::cos(phi);
  if (std::abs(nx) < kAxisSnap) nx = 0.0;
  if (std::abs(ny) < kAxisSnap) ny = 0.0;
  const double side = std::ldexp(1.0, -n);
  const double a = side * std::abs(nx), b = side * std::abs(ny);
  const double half = 0.5 * (a + b);
  const double tlo = std::min(0.0, nx) + std::min(0.0, ny);
  const double thi = std::max(0.0, nx) + std::max(0.0, ny);
  const auto kmin = static_cast<std::int64_t>(std::floor(tlo / w)) - 1;
  const auto kmax = static_cast<std::int64_t>(std::floor(thi / w)) + 1;
  std::vector<double> bins(static_cast<std::size_t>(kmax - kmin + 1), 0.0);
  for (const auto& c : centres) {
    const double m = c[0] * nx + c[1] * ny;
    const auto k0 = static_cast<std::int64_t>(std::floor((m - half) / w));
    const auto k1 = static_cast<std::int64_t>(std::floor((m + half) / w));
    if (k0 == k1) {
      bins[static_cast<std::size_t>(k0 - kmin)] += 1.0;
      continue;
    }
    for (std::int64_t k = k0; k <= k1; ++k) {
      const double lo = static_cast<double>(k) * w - m, hi = static_cast<double>(k + 1) * w - m;
      bins[static_cast<std::size_t>(k - kmin)] += shadow_cdf(hi, a, b) - shadow_cdf(lo, a, b);
    }
  }
  const double inv = 1.0 / static_cast<double>(P);
  for (double& v : bins) v *= inv;
  return {kmin, std::move(bins)};
}

}  // namespace detail

/// max over directions and bins of (bin mass)/w for the projection of the
/// level-n measure of a planar realization. Each square's mass is spread by
/// its exact shadow profile.
inline ProjectionDensity projection_density_sup(const LevelSet<2>& level, std::uint64_t P,
                                                const std::vector<double>& directions, double w) {
  if (!(w >= std::ldexp(1.0, -level.level()))) throw std::invalid_argument("bin width must be at least 2^-n");
  if (directions.empty()) throw std::invalid_argument("projection_density_sup needs directions");
  ProjectionDensity out;
  out.per_direction.assign(directions.size(), 0.0);
  std::vector<std::int64_t> best_bin(directions.size(), 0);
  const auto centres = detail::cube_centres(level);
  parallel_for(
      directions.size(),
      [&](std::size_t d) {
        const auto [kmin, bins] = detail::project_2d(centres, level.level(), P, directions[d], w);
        const auto it = std::max_element(bins.begin(), bins.end());
        out.per_direction[d] = *it / w;
        best_bin[d] = kmin + (it - bins.begin());
      },
      1);
  for (std::size_t d = 0; d < directions.size(); ++d)
    if (out.per_direction[d] > out.sup) {
      out.sup = out.per_direction[d];
      out.direction = d;
      out.bin = best_bin[d];
    }
  return out;
}

/// Three-dimensional version: cube masses are placed at the projected cube
/// centres and binned on a w-by-w grid of the plane orthogonal to each
/// direction, giving (bin mass)/w².
inline ProjectionDensity projection_density_sup(const LevelSet<3>& level, std::uint64_t P,
                                                const std::vector<Point<3>>& directions, double w) {
  if (!(w >= std::ldexp(1.0, -level.level()))) throw std::invalid_argument("bin width must be at least 2^-n");
  if (directions.empty()) throw std::invalid_argument("projection_density_sup needs directions");
  ProjectionDensity out;
  out.per_direction.assign(directions.size(), 0.0);
  const double side = std::ldexp(1.0, -level.level());
  std::vector<Point<3>> centres(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto cube = level.cube(i);
    for (int k = 0; k < 3; ++k) centres[i][k] = (static_cast<double>(cube.coords[k]) + 0.5) * side;
  }
  parallel_for(
      directions.size(),
      [&](std::size_t d) {
        Point<3> v = directions[d];
        const double nv = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        for (double& c : v) c /= nv;
        // Orthonormal basis (e1, e2) of the plane orthogonal to v.
        const Point<3> helper = std::abs(v[0]) < 0.9 ? Point<3>{1, 0, 0} : Point<3>{0, 1, 0};
        Point<3> e1{v[1] * helper[2] - v[2] * helper[1], v[2] * helper[0] - v[0] * helper[2],
                    v[0] * helper[1] - v[1] * helper[0]};
        const double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
        for (double& c : e1) c /= n1;
        const Point<3> e2{v[1] * e1[2] - v[2] * e1[1], v[2] * e1[0] - v[0] * e1[2], v[0] * e1[1] - v[1] * e1[0]};
        constexpr double kReach = 1.8;  // > sqrt(3): every projected point lies in [-kReach, kReach]²
        const auto kmin = static_cast<std::int64_t>(std::floor(-kReach / w));
        const auto width = static_cast<std::size_t>(std::floor(kReach / w) - kmin + 1);
        std::vector<double> bins(width * width, 0.0);
        for (const auto& c : centres) {
          const double u = c[0] * e1[0] + c[1] * e1[1] + c[2] * e1[2];
          const double t = c[0] * e2[0] + c[1] * e2[1] + c[2] * e2[2];
          const auto bu = static_cast<std::size_t>(static_cast<std::int64_t>(std::floor(u / w)) - kmin);
          const auto bt = static_cast<std::size_t>(static_cast<std::int64_t>(std::floor(t / w)) - kmin);
          bins[bu * width + bt] += 1.0;
        }
        out.per_direction[d] = *std::max_element(bins.begin(), bins.end()) / static_cast<double>(P) / (w * w);
      },
      1);
  for (std::size_t d = 0; d < directions.size(); ++d)
    if (out.per_direction[d] > out.sup) {
      out.sup = out.per_direction[d];
      out.direction = d;
    }
  return out;
}

struct DensityBound {
  double density;  // refined sup density
  double w;        // bin width it was measured at
  std::vector<std::pair<double, double>> sweep;  // (w, sup) for each width tried
};

/// Halves w from w0 until the sup density changes by less than `tol`
/// (relative) or w reaches 2^-n; returns the largest value seen.
inline DensityBound refine_density_bound(const LevelSet<2>& level, std::uint64_t P,
                                         const std::vector<double>& directions, double w0, double tol = 0.05) {
  DensityBound out{0.0, w0, {}};
  const double floor_w = std::ldexp(1.0, -level.level());
  double w = std::max(w0, floor_w);
  double prev = -1.0;
  for (;;) {
    const double sup = projection_density_sup(level, P, directions, w).sup;
    out.sweep.emplace_back(w, sup);
    if (sup > out.density) {
      out.density = sup;
      out.w = w;
    }
    if (prev > 0.0 && std::abs(sup - prev) <= tol * prev) break;
    if (w * 0.5 < floor_w) break;
    prev = sup;
    w *= 0.5;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tube masses

struct TubeMass {
  double mass = 0.0;
  double se = 0.0;     // Monte Carlo standard error, 0 when exact
  bool flagged = false;  // se above 1% of the estimate
  double ratio = 0.0;  // mass / w^{d-1}
};

/// Exact mu_n(T) in the plane: the strip |x·n - ρ| <= w meets each square in
/// a fraction given by the square's shadow profile.
inline TubeMass tube_mass_ratio(const LevelSet<2>& level, std::uint64_t P, const TubeSpec<2>& tube) {
  if (!(tube.w > 0.0)) throw std::invalid_argument("tube width must be positive");
  const auto& u = tube.core.direction();
  const double nx = -u[1], ny = u[0];
  const double rho = tube.core.point()[0] * nx + tube.core.point()[1] * ny;
  const double side = std::ldexp(1.0, -level.level());
  const double a = side * std::abs(nx), b = side * std::abs(ny);
  const double reach = tube.w + 0.5 * (a + b);
  CompensatedSum total;
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto cube = level.cube(i);
    const double m = (static_cast<double>(cube.coords[0]) + 0.5) * side * nx +
                     (static_cast<double>(cube.coords[1]) + 0.5) * side * ny;
    if (std::abs(m - rho) >= reach) continue;
    total.add(shadow_cdf(rho + tube.w - m, a, b) - shadow_cdf(rho - tube.w - m, a, b));
  }
  TubeMass out;
  out.mass = total.value() / static_cast<double>(P);
  out.ratio = out.mass / tube.w;
  return out;
}

/// mu_n(T) for many planar tubes. Tubes sharing a direction share one sorted
/// projection of the cube centres, so each tube only visits the squares it can reach.
inline std::vector<double> tube_masses(const LevelSet<2>& level, std::uint64_t P,
                                       const std::vector<TubeSpec<2>>& tubes) {
  std::vector<double> out(tubes.size(), 0.0);
  if (tubes.empty()) return out;
  const auto centres = detail::cube_centres(level);
  const double side = std::ldexp(1.0, -level.level());
  std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    if (!(tubes[i].w > 0.0)) throw std::invalid_argument("tube width must be positive");
    const auto& u = tubes[i].core.direction();
    // u and -u describe the same strip family.
    const bool flip = u[0] < 0.0 || (u[0] == 0.0 && u[1] < 0.0);
    groups[flip ? std::make_pair(-u[0], -u[1]) : std::make_pair(u[0], u[1])].push_back(i);
  }
  std::vector<std::pair<std::pair<double, double>, std::vector<std::size_t>>> work(groups.begin(), groups.end());
  parallel_for(
      work.size(),
      [&](std::size_t g) {
        const auto [ux, uy] = work[g].first;
        const double nx = -uy, ny = ux;
        const double a = side * std::abs(nx), b = side * std::abs(ny);
        std::vector<double> proj(centres.size());
        for (std::size_t i = 0; i < centres.size(); ++i) proj[i] = centres[i][0] * nx + centres[i][1] * ny;
        std::sort(proj.begin(), proj.end());
        for (std::size_t t : work[g].second) {
          const auto& tube = tubes[t];
          const double rho = tube.core.point()[0] * nx + tube.core.point()[1] * ny;
          const double reach = tube.w + 0.5 * (a + b);
          CompensatedSum total;
          for (auto it = std::upper_bound(proj.begin(), proj.end(), rho - reach); it != proj.end() && *it < rho + reach; ++it)
            total.add(shadow_cdf(rho + tube.w - *it, a, b) - shadow_cdf(rho - tube.w - *it, a, b));
          out[t] = total.value() / static_cast<double>(P);
        }
      },
      1);
  return out;
}

inline constexpr std::size_t kMinTubeSamples = 1000000;

/// Stratified Monte Carlo mu_n(T) in R³: each cube near the tube is split
/// into g³ cells with one uniform point per cell, g chosen so the total
/// sample count is at least kMinTubeSamples.
inline TubeMass tube_mass_ratio(const LevelSet<3>& level, std::uint64_t P, const TubeSpec<3>& tube,
                                std::uint64_t seed = 0) {
  if (!(tube.w > 0.0)) throw std::invalid_argument("tube width must be positive");
  const double side = std::ldexp(1.0, -level.level());
  const auto& p = tube.core.point();
  const auto& u = tube.core.direction();
  auto dist2 = [&](const Point<3>& x) {
    Point<3> d{x[0] - p[0], x[1] - p[1], x[2] - p[2]};
    const double t = d[0] * u[0] + d[1] * u[1] + d[2] * u[2];
    return d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - t * t;
  };
  const double reach = tube.w + std::sqrt(3.0) * 0.5 * side;
  std::vector<std::size_t> near;
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto cube = level.cube(i);
    Point<3> c;
    for (int k = 0; k < 3; ++k) c[k] = (static_cast<double>(cube.coords[k]) + 0.5) * side;
    if (dist2(c) < reach * reach) near.push_back(i);
  }
  TubeMass out;
  if (near.empty()) return out;
  const double per_cube = std::ceil(static_cast<double>(kMinTubeSamples) / static_cast<double>(near.size()));
  const int g = std::max(2, static_cast<int>(std::ceil(std::cbrt(per_cube))));
  const double cells = static_cast<double>(g) * g * g;
  std::vector<double> frac(near.size()), var(near.size());
  parallel_for(near.size(), [&](std::size_t j) {
    const auto cube = level.cube(near[j]);
    RngStream rng(seed, cube.key());
    const double cell = side / g;
    std::size_t inside = 0;
    for (int a = 0; a < g; ++a)
      for (int b = 0; b < g; ++b)
        for (int c = 0; c < g; ++c) {
          const Point<3> x{static_cast<double>(cube.coords[0]) * side + (a + rng.uniform()) * cell,
                           static_cast<double>(cube.coords[1]) * side + (b + rng.uniform()) * cell,
                           static_cast<double>(cube.coords[2]) * side + (c + rng.uniform()) * cell};
          if (dist2(x) <= tube.w * tube.w) ++inside;
        }
    frac[j] = static_cast<double>(inside) / cells;
    var[j] = frac[j] * (1.0 - frac[j]) / cells;  // binomial bound on the stratified variance
  });
  CompensatedSum m, v;
  for (std::size_t j = 0; j < near.size(); ++j) {
    m.add(frac[j]);
    v.add(var[j]);
  }
  out.mass = m.value() / static_cast<double>(P);
  out.se = std::sqrt(v.value()) / static_cast<double>(P);
  out.flagged = out.mass > 0.0 && out.se > 0.01 * out.mass;
  out.ratio = out.mass / (tube.w * tube.w);
  return out;
}

struct CoverCertificate {
  double sum_w = 0.0;     // Σ w_j^{d-1}
  double required = 0.0;  // m0 / C
  double slack = 0.0;     // sum_w - required
  double sum_mu = 0.0;    // Σ mu_n(T_j)
  std::vector<double> mu;
  bool covers_mass = false;  // m0 <= Σ mu_n(T_j)
  bool density_ok = false;   // Σ mu_n(T_j) <= C Σ w_j^{d-1}
  bool consistent = false;   // sum_w >= m0 / C
  std::string verdict;
};

inline constexpr double kCertificateRelTol = 1e-12;

/// Checks a tube cover of a set of mass m0 against a density bound C:
/// m0 <= Σ mu(T_j) <= C Σ w_j^{d-1} forces Σ w_j^{d-1} >= m0 / C.
template <int D>
CoverCertificate tube_cover_certificate(const LevelSet<D>& level, std::uint64_t P, const std::vector<TubeSpec<D>>& tubes,
                                        double m0, double C) {
  if (!(C > 0.0)) throw std::invalid_argument("density bound must be positive");
  CoverCertificate out;
  CompensatedSum w_sum, mu_sum;
  if constexpr (D == 2) {
    out.mu = tube_masses(level, P, tubes);
  } else {
    for (const auto& t : tubes) out.mu.push_back(tube_mass_ratio(level, P, t).mass);
  }
  for (std::size_t j = 0; j < tubes.size(); ++j) {
    w_sum.add(std::pow(tubes[j].w, D - 1));
    mu_sum.add(out.mu[j]);
  }
  out.sum_w = w_sum.value();
  out.sum_mu = mu_sum.value();
  out.required = m0 / C;
  out.slack = out.sum_w - out.required;
  const double tol = kCertificateRelTol * std::max(1.0, out.required);
  out.consistent = out.slack >= -tol;
  out.covers_mass = out.sum_mu >= m0 - kCertificateRelTol * std::max(1.0, m0);
  out.density_ok = out.sum_mu <= C * out.sum_w + tol;
  out.verdict = out.consistent ? "cover is consistent with non-tube-nullity bound"
                               : "cover violates claimed density bound";
  return out;
}

}  // namespace tubenull
