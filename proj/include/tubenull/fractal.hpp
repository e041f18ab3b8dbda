#pragma once

// The random nested sets A_0 ⊃ A_1 ⊃ ... and the normalized measures mu_n.
//
// A level is stored as the sorted Morton keys of its surviving cubes. Because
// every cube of A_n has the same number a_{n+1} of surviving children, and
// children inherit their parent's key prefix, the children of the i-th cube
// of A_n are exactly the entries [i*a, (i+1)*a) of A_{n+1}. Descending the
// tree therefore needs no lookups.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tubenull/dyadic.hpp"
#include "tubenull/gauge.hpp"
#include "tubenull/parallel.hpp"
#include "tubenull/rng.hpp"

namespace tubenull {

template <int D>
class LevelSet {
 public:
  LevelSet() = default;
  LevelSet(int level, std::vector<std::uint64_t> keys) : level_(level), keys_(std::move(keys)) {
    if (level < 0 || level > kMaxLevel<D>) throw std::invalid_argument("level outside supported range");
    if (!std::is_sorted(keys_.begin(), keys_.end()))
      throw std::invalid_argument("level-set keys must be sorted");
  }

  int level() const noexcept { return level_; }
  std::size_t size() const noexcept { return keys_.size(); }
  std::span<const std::uint64_t> keys() const noexcept { return keys_; }
  std::uint64_t key(std::size_t i) const { return keys_[i]; }
  DyadicCube<D> cube(std::size_t i) const { return {level_, morton_decode<D>(keys_[i], level_)}; }

  bool contains(const DyadicCube<D>& c) const {
    return c.level == level_ && std::binary_search(keys_.begin(), keys_.end(), c.key());
  }

  friend bool operator==(const LevelSet&, const LevelSet&) = default;

 private:
  int level_ = 0;
  std::vector<std::uint64_t> keys_;
};

template <int D>
LevelSet<D> level0() {
  return LevelSet<D>(0, {0});
}

/// Child offset drawn for cube `key` of level `level` when a single child survives.
/// The top D bits of a derived 64-bit word are uniform on [0, 2^D).
template <int D>
constexpr unsigned child_draw(std::uint64_t stream_key, int level, std::uint64_t key) {
  return static_cast<unsigned>(derive(stream_key, static_cast<std::uint64_t>(level), key) >> (64 - D));
}

/// One construction step. a = 2^D keeps every child; a = 1 keeps one
/// uniformly chosen child per cube, drawn from (rng identity, level, cube key)
/// so the result does not depend on processing order.
template <int D>
LevelSet<D> subdivide(const LevelSet<D>& level, std::uint64_t a, const RngStream& rng) {
  constexpr std::uint64_t full = std::uint64_t{1} << D;
  if (a != 1 && a != full) throw std::invalid_argument("subdivision factor must be 1 or 2^d");
  if (level.level() + 1 > kMaxLevel<D>) throw std::invalid_argument("level too deep for 64-bit keys");
  const auto keys = level.keys();
  std::vector<std::uint64_t> out(keys.size() * a);
  const std::uint64_t stream = rng.key();
  const int next = level.level() + 1;
  parallel_for(
      keys.size(),
      [&](std::size_t i) {
        const std::uint64_t base = keys[i] << D;
        if (a == full) {
          for (std::uint64_t c = 0; c < full; ++c) out[i * full + c] = base | c;
        } else {
          out[i] = base | child_draw<D>(stream, next, keys[i]);
        }
      },
      4096);
  return LevelSet<D>(next, std::move(out));
}

/// One realization A_0..A_n of the construction.
template <int D>
class Realization {
 public:
  Realization(Schedule schedule, std::uint64_t seed, std::vector<LevelSet<D>> levels)
      : schedule_(std::move(schedule)), seed_(seed), levels_(std::move(levels)) {}

  const Schedule& schedule() const noexcept { return schedule_; }
  std::uint64_t seed() const noexcept { return seed_; }
  int depth() const noexcept { return static_cast<int>(levels_.size()) - 1; }
  const LevelSet<D>& level(int n) const { return levels_.at(static_cast<std::size_t>(n)); }
  const std::vector<LevelSet<D>>& levels() const noexcept { return levels_; }
  std::uint64_t P(int n) const { return schedule_.P(n); }

  /// Number of surviving children per cube for the step n -> n+1.
  std::uint64_t branching(int n) const { return schedule_.a(n + 1); }

  /// Child index range of the i-th cube of A_n inside A_{n+1}.
  std::pair<std::size_t, std::size_t> children(int n, std::size_t i) const {
    const auto a = static_cast<std::size_t>(branching(n));
    return {i * a, (i + 1) * a};
  }

  /// Same schedule and A_0..A_n, with A_{n+1} replaced.
  Realization with_next_level(int n, LevelSet<D> next) const {
    std::vector<LevelSet<D>> lv(levels_.begin(), levels_.begin() + n + 1);
    lv.push_back(std::move(next));
    return Realization(schedule_, seed_, std::move(lv));
  }

 private:
  Schedule schedule_;
  std::uint64_t seed_;
  std::vector<LevelSet<D>> levels_;
};

/// Levels 0..n_max; the step into level n+1 uses RngStream(seed, n+1).
template <int D>
Realization<D> build_levels(const Schedule& schedule, std::uint64_t seed, int n_max) {
  if (schedule.dimension() != D) throw std::invalid_argument("schedule dimension mismatch");
  if (n_max < 0 || n_max > schedule.n_max()) throw std::invalid_argument("n_max exceeds schedule length");
  std::vector<LevelSet<D>> levels;
  levels.reserve(static_cast<std::size_t>(n_max) + 1);
  levels.push_back(level0<D>());
  for (int n = 0; n < n_max; ++n)
    levels.push_back(subdivide<D>(levels.back(), schedule.a(n + 1), RngStream(seed, static_cast<std::uint64_t>(n + 1))));
  return Realization<D>(schedule, seed, std::move(levels));
}

/// mu_n(box) = 2^{dn} P_n^{-1} |box ∩ A_n|, summed cube by cube.
template <int D>
double cell_measure(const LevelSet<D>& level, std::uint64_t P_n, const Box<D>& box) {
  if (!box.inside_unit()) throw std::invalid_argument("cell_measure box must lie in the unit cube");
  const double side = std::ldexp(1.0, -level.level());
  CompensatedSum total;
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto cube = level.cube(i).box();
    double frac = 1.0;
    for (int k = 0; k < D && frac > 0.0; ++k) {
      const double len = std::min(box.hi[k], cube.hi[k]) - std::max(box.lo[k], cube.lo[k]);
      frac = len > 0.0 ? frac * (len / side) : 0.0;
    }
    total.add(frac);
  }
  return total.value() / static_cast<double>(P_n);
}

template <int D>
double cell_measure(const Realization<D>& r, int n, const Box<D>& box) {
  return cell_measure<D>(r.level(n), r.P(n), box);
}

}  // namespace tubenull
