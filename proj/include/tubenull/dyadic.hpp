#pragma once

// Points, axis-aligned boxes and dyadic cubes with Morton (Z-order) keys.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace tubenull {

template <int D>
using Point = std::array<double, D>;

template <int D>
struct Box {
  Point<D> lo{};
  Point<D> hi{};

  static constexpr Box unit() {
    Box b;
    for (int i = 0; i < D; ++i) {
      b.lo[i] = 0.0;
      b.hi[i] = 1.0;
    }
    return b;
  }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < D; ++i) v *= hi[i] - lo[i];
    return v;
  }

  bool degenerate() const {
    for (int i = 0; i < D; ++i)
      if (!(hi[i] > lo[i])) return true;
    return false;
  }

  bool inside_unit() const {
    for (int i = 0; i < D; ++i)
      if (lo[i] < 0.0 || hi[i] > 1.0 || lo[i] > hi[i]) return false;
    return true;
  }
};

template <int D>
double overlap_volume(const Box<D>& a, const Box<D>& b) {
  double v = 1.0;
  for (int i = 0; i < D; ++i) {
    const double len = std::min(a.hi[i], b.hi[i]) - std::max(a.lo[i], b.lo[i]);
    if (len <= 0.0) return 0.0;
    v *= len;
  }
  return v;
}

/// Deepest level whose Morton keys fit in 63 bits.
template <int D>
inline constexpr int kMaxLevel = 63 / D;

template <int D>
using Coords = std::array<std::uint32_t, D>;

/// Key bit (b*D + axis) is bit b of coordinate `axis`, so the children of a
/// cube with key k have keys (k << D) | offset, offset in [0, 2^D).
template <int D>
constexpr std::uint64_t morton_encode(const Coords<D>& c, int level) {
  std::uint64_t key = 0;
  for (int b = 0; b < level; ++b)
    for (int axis = 0; axis < D; ++axis)
      key |= static_cast<std::uint64_t>((c[axis] >> b) & 1u) << (b * D + axis);
  return key;
}

template <int D>
constexpr Coords<D> morton_decode(std::uint64_t key, int level) {
  Coords<D> c{};
  for (int b = 0; b < level; ++b)
    for (int axis = 0; axis < D; ++axis)
      c[axis] |= static_cast<std::uint32_t>((key >> (b * D + axis)) & 1u) << b;
  return c;
}

/// The closed cube prod_i [c_i 2^-n, (c_i+1) 2^-n].
template <int D>
struct DyadicCube {
  int level = 0;
  Coords<D> coords{};

  double side() const { return std::ldexp(1.0, -level); }

  Box<D> box() const {
    Box<D> b;
    const double s = side();
    for (int i = 0; i < D; ++i) {
      b.lo[i] = coords[i] * s;
      b.hi[i] = (coords[i] + 1.0) * s;
    }
    return b;
  }

  std::uint64_t key() const { return morton_encode<D>(coords, level); }

  /// Child at Morton offset `offset`: bit `axis` picks the upper half on that axis.
  DyadicCube child(unsigned offset) const {
    DyadicCube c{level + 1, {}};
    for (int i = 0; i < D; ++i) c.coords[i] = 2 * coords[i] + ((offset >> i) & 1u);
    return c;
  }

  DyadicCube parent() const {
    if (level == 0) throw std::logic_error("level-0 cube has no parent");
    DyadicCube p{level - 1, {}};
    for (int i = 0; i < D; ++i) p.coords[i] = coords[i] >> 1;
    return p;
  }

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
};

}  // namespace tubenull
