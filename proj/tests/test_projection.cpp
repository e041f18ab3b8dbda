#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "tubenull/nets.hpp"
#include "tubenull/projection.hpp"

using namespace tubenull;

namespace {

using Polygon = std::vector<Point<2>>;

// Sutherland–Hodgman: keep the part of poly with x·n <= c.
Polygon clip_half_plane(const Polygon& poly, Point<2> n, double c) {
  Polygon out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    const double fp = p[0] * n[0] + p[1] * n[1] - c, fq = q[0] * n[0] + q[1] * n[1] - c;
    if (fp <= 0) out.push_back(p);
    if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
      const double t = fp / (fp - fq);
      out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
    }
  }
  return out;
}

double area(const Polygon& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(a);
}

double polygon_tube_mass(const LevelSet<2>& level, std::uint64_t P, const TubeSpec<2>& tube) {
  const auto& u = tube.core.direction();
  const Point<2> n{-u[1], u[0]};
  const double rho = tube.core.point()[0] * n[0] + tube.core.point()[1] * n[1];
  const double side = std::ldexp(1.0, -level.level());
  double total = 0.0;
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto b = level.cube(i).box();
    Polygon sq{{b.lo[0], b.lo[1]}, {b.hi[0], b.lo[1]}, {b.hi[0], b.hi[1]}, {b.lo[0], b.hi[1]}};
    sq = clip_half_plane(sq, n, rho + tube.w);
    sq = clip_half_plane(sq, {-n[0], -n[1]}, -(rho - tube.w));
    if (sq.size() >= 3) total += area(sq) / (side * side);
  }
  return total / static_cast<double>(P);
}

Realization<2> sample(int n, std::uint64_t seed) {
  return build_levels<2>(build_schedule(GaugeSpec::power(1.5, 2), n), seed, n);
}

TubeSpec<2> tube_at(double phi, double rho, double w) {
  // core direction (cos φ, sin φ), normal (-sin φ, cos φ), offset ρ
  const Point<2> n{-std::sin(phi), std::cos(phi)};
  return {Line<2>({rho * n[0], rho * n[1]}, {std::cos(phi), std::sin(phi)}), w};
}

}  // namespace

TEST(Projection, LevelZeroIsLebesgue) {
  const auto l0 = level0<2>();
  EXPECT_DOUBLE_EQ(projection_density_sup(l0, 1, {0.0}, 1.0).sup, 1.0);
  EXPECT_DOUBLE_EQ(projection_density_sup(l0, 1, {std::numbers::pi / 2}, 1.0).sup, 1.0);
  EXPECT_THROW(projection_density_sup(l0, 1, {0.0}, 0.5), std::invalid_argument);
  EXPECT_THROW(projection_density_sup(l0, 1, {}, 1.0), std::invalid_argument);
}

TEST(Projection, SingleCube) {
  const LevelSet<2> one(1, {0});
  EXPECT_DOUBLE_EQ(projection_density_sup(one, 1, {0.0}, 0.5).sup, 2.0);
  EXPECT_DOUBLE_EQ(projection_density_sup(one, 1, {std::numbers::pi / 2}, 0.5).sup, 2.0);
}

TEST(Projection, MassIsConserved) {
  const auto r = sample(8, 3);
  const auto& lv = r.level(8);
  for (double phi : direction_net(12)) {
    const auto centres = detail::cube_centres(lv);
    const auto [kmin, bins] = detail::project_2d(centres, 8, r.P(8), phi, 1.0 / 64);
    double total = 0.0;
    for (double b : bins) total += b;
    EXPECT_NEAR(total, 1.0, 1e-12) << "phi=" << phi;
  }
}

TEST(Projection, TransposeSymmetry) {
  // A level set symmetric under x <-> y projects onto the y axis exactly as
  // onto the (negated) x axis.
  const auto r = sample(8, 5);
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i < r.level(8).size(); ++i) {
    auto c = r.level(8).cube(i);
    keys.push_back(c.key());
    std::swap(c.coords[0], c.coords[1]);
    keys.push_back(c.key());
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  const LevelSet<2> sym(8, keys);
  const auto P = static_cast<std::uint64_t>(keys.size());
  for (double w : {1.0 / 256, 1.0 / 32, 0.25}) {
    const double a = projection_density_sup(sym, P, {0.0}, w).sup;
    const double b = projection_density_sup(sym, P, {std::numbers::pi / 2}, w).sup;
    EXPECT_NEAR(a, b, 1e-12 * a);
  }
}

TEST(Projection, RefinementSweep) {
  const auto r = sample(10, 9);
  const auto dirs = direction_net(36);
  const auto bound = refine_density_bound(r.level(10), r.P(10), dirs, 1.0 / 16);
  ASSERT_GE(bound.sweep.size(), 2u);
  EXPECT_DOUBLE_EQ(bound.sweep.front().first, 1.0 / 16);
  for (std::size_t i = 1; i < bound.sweep.size(); ++i)
    EXPECT_DOUBLE_EQ(bound.sweep[i].first, 0.5 * bound.sweep[i - 1].first);
  for (auto [w, s] : bound.sweep) EXPECT_LE(s, bound.density);
  const auto& last = bound.sweep.back();
  const auto& prev = bound.sweep[bound.sweep.size() - 2];
  EXPECT_TRUE(std::abs(last.second - prev.second) <= 0.05 * prev.second || last.first * 0.5 < std::ldexp(1.0, -10));
}

TEST(Projection, ThreeDimensionalLevelZero) {
  const auto l0 = level0<3>();
  EXPECT_DOUBLE_EQ(projection_density_sup(l0, 1, {Point<3>{0, 0, 1}}, 1.0).sup, 1.0);
  const auto full = build_levels<3>(Schedule(3, {8, 8}), 0, 2);
  EXPECT_NEAR(projection_density_sup(full.level(2), 64, {Point<3>{0, 0, 1}}, 0.25).sup, 1.0, 1e-12);
}

TEST(TubeMass, Examples) {
  const auto l0 = level0<2>();
  const auto strip = tube_mass_ratio(l0, 1, TubeSpec<2>{Line<2>::horizontal(0.375), 0.125});
  EXPECT_NEAR(strip.mass, 0.25, 1e-15);
  EXPECT_NEAR(strip.ratio, 2.0, 1e-14);
  EXPECT_EQ(strip.se, 0.0);
  EXPECT_NEAR(tube_mass_ratio(l0, 1, TubeSpec<2>{Line<2>({0.5, 0.5}, {1, 1}), 2.0}).ratio, 0.5, 1e-15);
  EXPECT_EQ(tube_mass_ratio(l0, 1, TubeSpec<2>{Line<2>::horizontal(3.0), 0.5}).mass, 0.0);
}

TEST(TubeMass, MatchesPolygonClipping) {
  const auto r = sample(9, 13);
  const auto& lv = r.level(9);
  RngStream rng(21, 0);
  std::vector<TubeSpec<2>> tubes;
  for (int t = 0; t < 100; ++t) {
    TubeSpec<2> tube{random_line(rng), rng.uniform(0.001, 0.2)};
    tubes.push_back(tube);
    EXPECT_NEAR(tube_mass_ratio(lv, r.P(9), tube).mass, polygon_tube_mass(lv, r.P(9), tube), 1e-12) << t;
  }
  // axis-parallel tubes sharing a direction, including dyadic edges
  for (int k = 0; k <= 8; ++k) tubes.push_back({Line<2>::horizontal(k / 8.0), 1.0 / 16});
  for (int k = 0; k <= 8; ++k) tubes.push_back({Line<2>::vertical(k / 8.0), 1.0 / 32});
  const auto batch = tube_masses(lv, r.P(9), tubes);
  for (std::size_t j = 0; j < tubes.size(); ++j)
    EXPECT_NEAR(batch[j], polygon_tube_mass(lv, r.P(9), tubes[j]), 1e-12) << j;
}

TEST(TubeMass, ProjectionConsistency) {
  const int n = 10;
  const auto r = sample(n, 4);
  const auto& lv = r.level(n);
  RngStream rng(44, 0);
  for (int t = 0; t < 200; ++t) {
    const double phi = rng.uniform(0.0, std::numbers::pi);
    const double w = std::ldexp(1.0, -static_cast<int>(3 + rng.below(5)));
    // A strip of radius w aligned to the bins covers exactly two bins.
    const auto k = static_cast<double>(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(1.0 / w))));
    const auto aligned = tube_at(phi, (k + 1.0) * w, w);
    const double dens = projection_density_sup(lv, r.P(n), {phi}, w).sup;
    EXPECT_LE(tube_mass_ratio(lv, r.P(n), aligned).ratio, 2.0 * dens * (1 + 1e-12));
    const auto loose = tube_at(phi, rng.uniform(-0.5, 1.5), w);
    EXPECT_LE(tube_mass_ratio(lv, r.P(n), loose).ratio, 2.0 * dens * 1.1);
  }
}

TEST(TubeMass, ThreeDimensionalCylinder) {
  const auto l0 = level0<3>();
  const TubeSpec<3> cyl{Line<3>({0.5, 0.5, 0.0}, {0, 0, 1}), 0.25};
  const auto m = tube_mass_ratio(l0, 1, cyl, 7);
  EXPECT_FALSE(m.flagged);
  EXPECT_NEAR(m.mass, std::numbers::pi / 16, 4 * m.se + 1e-4);
  EXPECT_NEAR(m.ratio, std::numbers::pi, 0.01);
  EXPECT_GT(m.se, 0.0);
}

TEST(Certificate, Examples) {
  const auto l0 = level0<2>();
  std::vector<TubeSpec<2>> strips;
  for (int k = 0; k < 4; ++k) strips.push_back({Line<2>::horizontal(0.125 + 0.25 * k), 0.125});
  const auto tight = tube_cover_certificate<2>(l0, 1, strips, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(tight.sum_w, 0.5);
  EXPECT_DOUBLE_EQ(tight.required, 0.5);
  EXPECT_TRUE(tight.consistent);
  EXPECT_TRUE(tight.covers_mass);
  EXPECT_TRUE(tight.density_ok);
  EXPECT_EQ(tight.verdict, "cover is consistent with non-tube-nullity bound");

  const auto whole = tube_cover_certificate<2>(l0, 1, {{Line<2>::horizontal(0.5), 1.0}}, 1.0, 1.0);
  EXPECT_TRUE(whole.consistent);

  const auto empty = tube_cover_certificate<2>(l0, 1, {}, 0.5, 2.0);
  EXPECT_FALSE(empty.consistent);
  EXPECT_FALSE(empty.covers_mass);
  EXPECT_EQ(empty.sum_w, 0.0);
  EXPECT_EQ(empty.verdict, "cover violates claimed density bound");

  // An underestimated C is exposed.
  const auto low = tube_cover_certificate<2>(l0, 1, strips, 1.0, 1.5);
  EXPECT_FALSE(low.consistent);
  EXPECT_THROW(tube_cover_certificate<2>(l0, 1, strips, 1.0, 0.0), std::invalid_argument);
}

TEST(Certificate, ThreeDimensional) {
  const auto l0 = level0<3>();
  std::vector<TubeSpec<3>> cover;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) cover.push_back({Line<3>({0.25 + 0.5 * i, 0.25 + 0.5 * j, 0}, {0, 0, 1}), 0.36});
  const auto cert = tube_cover_certificate<3>(l0, 1, cover, 1.0, 2.0);
  EXPECT_NEAR(cert.sum_w, 4 * 0.36 * 0.36, 1e-15);
  EXPECT_TRUE(cert.consistent);
  EXPECT_TRUE(cert.covers_mass);
}
