#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "tubenull/intersection.hpp"

using namespace tubenull;

namespace {

// Length of line ∩ box from membership queries only: dense sampling locates
// an inside point, bisection then pins the entry and exit parameters.
double sampled_length(const Line<2>& line, const Box<2>& box) {
  auto inside = [&](double t) {
    const auto p = line.at(t);
    return p[0] >= box.lo[0] && p[0] <= box.hi[0] && p[1] >= box.lo[1] && p[1] <= box.hi[1];
  };
  constexpr double T = 4.0;
  constexpr int K = 200000;
  double hit = NAN;
  for (int k = 0; k <= K; ++k) {
    const double t = -T + 2.0 * T * k / K;
    if (inside(t)) {
      hit = t;
      break;
    }
  }
  if (std::isnan(hit)) return 0.0;
  auto edge = [&](double in, double out) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (in + out);
      (inside(mid) ? in : out) = mid;
    }
    return in;
  };
  return edge(hit, T) - edge(hit, -T);
}

Box<2> random_box(RngStream& rng) {
  Box<2> b;
  for (int i = 0; i < 2; ++i) {
    double x = rng.uniform(), y = rng.uniform();
    if (x > y) std::swap(x, y);
    if (y - x < 1e-3) y = x + 1e-3;
    b.lo[i] = x;
    b.hi[i] = y;
  }
  return b;
}

Line<2> random_line(RngStream& rng) {
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double rho = rng.uniform(-0.5, 1.5);
  return Line<2>::from_normal(theta, rho);
}

}  // namespace

TEST(LineBox, Examples) {
  const auto unit = Box<2>::unit();
  EXPECT_NEAR(line_box_length(Line<2>({0, 0}, {1, 1}), unit), std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(line_box_length(Line<2>::horizontal(0.5), unit), 1.0);
  const Line<2> slope_half({0, 0}, {2, 1});
  EXPECT_NEAR(line_box_length(slope_half, unit), std::sqrt(1.25), 1e-15);
  EXPECT_NEAR(sampled_length(slope_half, unit), std::sqrt(1.25), 1e-9);
  EXPECT_DOUBLE_EQ(line_box_length(Line<2>::horizontal(1.5), unit), 0.0);
  EXPECT_THROW(line_box_length(Line<2>::horizontal(0.5), Box<2>{{0, 0}, {0, 1}}), std::invalid_argument);
}

TEST(LineBox, MatchesSamplingOracle) {
  RngStream rng(2718, 0);
  int nonzero = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto line = random_line(rng);
    const auto box = random_box(rng);
    const double exact = line_box_length(line, box);
    EXPECT_NEAR(exact, sampled_length(line, box), 1e-6) << "case " << i;
    nonzero += exact > 0.0;
  }
  EXPECT_GT(nonzero, 200);
}

TEST(LineBox, SquareSymmetries) {
  RngStream rng(31, 0);
  auto map = [](int s, Point<2> p) {
    double x = p[0], y = p[1];
    if (s & 1) x = 1.0 - x;
    if (s & 2) y = 1.0 - y;
    if (s & 4) std::swap(x, y);
    return Point<2>{x, y};
  };
  for (int i = 0; i < 200; ++i) {
    const auto line = random_line(rng);
    const auto box = random_box(rng);
    const double ref = line_box_length(line, box);
    for (int s = 1; s < 8; ++s) {
      const auto p0 = map(s, line.at(0.0)), p1 = map(s, line.at(1.0));
      const Line<2> image(p0, {p1[0] - p0[0], p1[1] - p0[1]});
      const auto c0 = map(s, box.lo), c1 = map(s, box.hi);
      const Box<2> ibox{{std::min(c0[0], c1[0]), std::min(c0[1], c1[1])},
                        {std::max(c0[0], c1[0]), std::max(c0[1], c1[1])}};
      EXPECT_NEAR(line_box_length(image, ibox), ref, 1e-12);
    }
  }
}

TEST(LineBox, HalfOpenCountsSharedEdgeOnce) {
  const auto line = Line<2>::horizontal(0.5);
  const Box<2> lower{{0, 0}, {1, 0.5}}, upper{{0, 0.5}, {1, 1}};
  EXPECT_DOUBLE_EQ(line_box_length(line, lower, BoundaryRule::closed), 1.0);
  EXPECT_DOUBLE_EQ(line_box_length(line, lower, BoundaryRule::half_open), 0.0);
  EXPECT_DOUBLE_EQ(line_box_length(line, upper, BoundaryRule::half_open), 1.0);
  // The top face of the unit square stays closed.
  EXPECT_DOUBLE_EQ(line_box_length(Line<2>::horizontal(1.0), upper, BoundaryRule::half_open), 1.0);
}

TEST(LineBox, ThreeDimensional) {
  const Line<3> diag({0, 0, 0}, {1, 1, 1});
  EXPECT_NEAR(line_box_length(diag, Box<3>::unit()), std::sqrt(3.0), 1e-15);
  const Line<3> axis({0.3, 0.4, 0.0}, {0, 0, 1});
  EXPECT_DOUBLE_EQ(line_box_length(axis, Box<3>{{0, 0, 0.25}, {0.5, 0.5, 0.75}}), 0.5);
}

TEST(Lines, NormalForm) {
  RngStream rng(5, 0);
  for (int i = 0; i < 100; ++i) {
    const double theta = rng.uniform(0.0, std::numbers::pi), rho = rng.uniform(-1, 1);
    const auto [t2, r2] = Line<2>::from_normal(theta, rho).normal_form();
    EXPECT_NEAR(t2, theta, 1e-12);
    EXPECT_NEAR(r2, rho, 1e-12);
  }
}

TEST(Lines, DyadicDetection) {
  EXPECT_TRUE(is_dyadic(Line<2>::horizontal(0.25), 2));
  EXPECT_FALSE(is_dyadic(Line<2>::horizontal(0.25), 1));
  EXPECT_TRUE(is_dyadic(Line<2>::vertical(0.0), 0));
  EXPECT_FALSE(is_dyadic(Line<2>::horizontal(0.3), 30));
  EXPECT_FALSE(is_dyadic(Line<2>({0.5, 0.5}, {1, 1}), 30));
  EXPECT_TRUE(is_dyadic(Line<2>::from_normal(std::numbers::pi / 2, 0.375), 3));
  EXPECT_TRUE(is_dyadic(Line<3>({0.3, 0.5, 0.1}, {1, 0, 1}), 1));
}

TEST(ShadowCdf, MatchesSampledSquare) {
  // Fraction of a unit square below a line, by a 2000^2 midpoint grid.
  RngStream rng(8, 0);
  for (int i = 0; i < 20; ++i) {
    const double phi = rng.uniform(0.0, std::numbers::pi);
    const double nx = -std::sin(phi), ny = std::cos(phi);
    const double off = rng.uniform(-0.8, 0.8);
    const int K = 2000;
    long below = 0;
    for (int a = 0; a < K; ++a)
      for (int b = 0; b < K; ++b) {
        const double x = (a + 0.5) / K - 0.5, y = (b + 0.5) / K - 0.5;
        below += x * nx + y * ny <= off;
      }
    EXPECT_NEAR(shadow_cdf(off, std::abs(nx), std::abs(ny)), static_cast<double>(below) / (K * K), 2e-3);
  }
  EXPECT_DOUBLE_EQ(shadow_cdf(0.0, 1.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(shadow_cdf(-0.6, 1.0, 0.0), 0.0);
}

TEST(ArcLength, Examples) {
  EXPECT_NEAR(graph_arc_length(PolyGraph{{0.0}}, 0, 1), 1.0, 1e-12);
  EXPECT_NEAR(graph_arc_length(PolyGraph{{0.0, 1.0}}, 0, 1), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(graph_arc_length(PLGraph{{{0, 0}, {0.5, 0}, {1, 0.5}}}, 0, 1), 0.5 + std::sqrt(0.5), 1e-15);

  // Composite Simpson in long double with 2^20 panels as the oracle.
  const int K = 1 << 20;
  long double s = 0.0L;
  auto g = [](long double x) { return std::sqrt(1.0L + x * x * x * x); };
  for (int k = 0; k < K; ++k) {
    const long double a = static_cast<long double>(k) / K, b = static_cast<long double>(k + 1) / K;
    s += (b - a) / 6 * (g(a) + 4 * g(0.5L * (a + b)) + g(b));
  }
  const double cubic = graph_arc_length(PolyGraph{{0, 0, 0, 1.0 / 3.0}}, 0, 1);
  EXPECT_NEAR(cubic, static_cast<double>(s), 1e-10);
  EXPECT_NEAR(cubic, 1.089429, 5e-7);
}

TEST(ArcLength, ConvexGraphWithKink) {
  const ConvexGraph kink{[](double x) { return std::max(0.0, x - 0.3); },
                         [](double x) { return x < 0.3 ? 0.0 : 1.0; }, 0, 1};
  EXPECT_NEAR(graph_arc_length(kink, 0, 1), 0.3 + 0.7 * std::sqrt(2.0), 1e-10);
  EXPECT_THROW(graph_arc_length(kink, 0, 1.5), std::invalid_argument);
}

TEST(ArcLength, InvalidCurves) {
  EXPECT_THROW(GraphView(PLGraph{{{0, 0}, {0, 1}}}), invalid_curve);
  EXPECT_THROW(GraphView(PLGraph{{{0, 1}, {1, 0}}}), invalid_curve);
  EXPECT_THROW(GraphView(PolyGraph{{}}), invalid_curve);
}

TEST(SupDistance, Examples) {
  const PolyGraph f{{0.0}}, c{{0.37}};
  EXPECT_DOUBLE_EQ(sup_distance(f, f), 0.0);
  EXPECT_DOUBLE_EQ(sup_distance(f, c), 0.37);
  // peak of x - x^2 at 1/2 is 1/4
  EXPECT_NEAR(sup_distance(PolyGraph{{0, 1}}, PolyGraph{{0, 0, 1}}), 0.25, 1e-14);
  // linear continuation outside a shorter domain
  const PLGraph short_pl{{{0, 0}, {0.5, 0.5}}};
  EXPECT_NEAR(sup_distance(short_pl, PolyGraph{{0, 1}}), 0.0, 1e-15);
}

namespace {

Realization<2> single_cube_level() {
  return Realization<2>(Schedule(2, {1}), 0, {level0<2>(), LevelSet<2>(1, {0})});
}

}  // namespace

TEST(LevelSetLength, Examples) {
  const auto full = build_levels<2>(Schedule(2, {4, 4, 4, 4}), 1, 4);
  EXPECT_NEAR(curve_levelset_length<2>(Line<2>({0, 0}, {1, 1}), full, 4), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(curve_levelset_length<2>(Line<2>::horizontal(0.5), full, 4), 1.0, 1e-15);
  EXPECT_NEAR(curve_levelset_length<2>(Line<2>::horizontal(0.25), single_cube_level(), 1), 0.5, 1e-15);
  EXPECT_NEAR(curve_levelset_length(Curve{PolyGraph{{0.25}}}, single_cube_level(), 1), 0.5, 1e-12);
}

TEST(LevelSetLength, ChildAdditivity) {
  const auto full = build_levels<2>(Schedule(2, {4, 4, 4, 4, 4, 4}), 1, 6);
  RngStream rng(77, 0);
  for (int i = 0; i < 200; ++i) {
    const auto line = random_line(rng);
    const auto lengths = levelset_lengths<2>(line, full, 6);
    for (int m = 1; m <= 6; ++m) EXPECT_NEAR(lengths[m], lengths[0], 1e-12);
  }
  // per-cube additivity on a random realization
  const auto r = build_levels<2>(build_schedule(GaugeSpec::power(1.5, 2), 10), 3, 10);
  for (int i = 0; i < 200; ++i) {
    const auto line = random_line(rng);
    for (int n = 0; n < 10; ++n) {
      if (!r.schedule().step_keeps_all(n)) continue;
      for (const auto& hit : cube_hits<2>(line, r, n)) {
        double sum = 0.0;
        for (unsigned o = 0; o < 4; ++o)
          sum += line_box_length(line, hit.cube.child(o).box(), BoundaryRule::half_open);
        EXPECT_NEAR(sum, hit.length, 1e-12);
      }
    }
  }
}

TEST(LevelSetLength, BoundedByCubeDiameters) {
  const auto s = build_schedule(GaugeSpec::power(1.0, 2), 12);
  const auto r = build_levels<2>(s, 99, 12);
  RngStream rng(4, 0);
  for (int i = 0; i < 100; ++i) {
    const auto line = random_line(rng);
    const double total = line_box_length(line, Box<2>::unit());
    const auto lengths = levelset_lengths<2>(line, r, 12);
    for (int n = 0; n <= 12; ++n) {
      const double cap = std::sqrt(2.0) * std::ldexp(1.0, -n) * static_cast<double>(s.P(n));
      EXPECT_LE(lengths[n], std::min(total, cap) + 1e-12);
    }
  }
}

TEST(LevelSetLength, GraphMatchesPolylineOfLine) {
  // A non-axis line given as a PL graph must give the same lengths as the line.
  const auto r = build_levels<2>(build_schedule(GaugeSpec::power(1.5, 2), 9), 17, 9);
  const Line<2> line({0.0, 0.1234}, {1.0, 0.61});
  const double y1 = 0.1234 + 0.61;
  const Curve pl = PLGraph{{{0.0, 0.1234}, {1.0, y1}}};
  const auto a = levelset_lengths<2>(line, r, 9);
  const auto b = levelset_lengths(pl, r, 9);
  for (int n = 0; n <= 9; ++n) EXPECT_NEAR(a[n], b[n], 1e-9) << n;
}

TEST(Intervals, Merge) {
  const auto m = merge_intervals({{0.5, 0.6}, {0.0, 0.2}, {0.2, 0.3}, {0.7, 0.7}});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (std::pair<double, double>{0.0, 0.3}));
  EXPECT_EQ(m[1], (std::pair<double, double>{0.5, 0.6}));
}
