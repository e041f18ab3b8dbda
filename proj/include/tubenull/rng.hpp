#pragma once

// Deterministic random streams.
//
// Every random decision in the library is a pure function of a 64-bit master
// seed and a small tuple of integers (stream index, level, cube key, ...).
// The mixing function is the SplitMix64 finalizer (Steele, Lea & Flood 2014);
// sequences are SplitMix64 streams started from a derived state. Nothing here
// depends on <random> distributions, so draws are bit-identical across
// platforms and standard libraries.

#include <cstdint>

namespace tubenull {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives a child key from a parent key and one integer label.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t label) noexcept {
  return mix64(key ^ mix64(label + kGoldenGamma));
}

template <typename... Labels>
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t label,
                               Labels... rest) noexcept {
  return derive(derive(key, label), static_cast<std::uint64_t>(rest)...);
}

/// A SplitMix64 sequence identified by (master seed, stream index).
class RngStream {
 public:
  constexpr RngStream(std::uint64_t seed, std::uint64_t index) noexcept
      : seed_(seed), index_(index), state_(derive(seed, index)) {}

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t index() const noexcept { return index_; }

  constexpr std::uint64_t next() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, n) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    for (;;) {
      const unsigned __int128 m =
          static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n);
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= (0 - n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  /// Key for deriving further per-item streams from this one's identity.
  constexpr std::uint64_t key() const noexcept { return derive(seed_, index_); }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t state_;
};

}  // namespace tubenull
