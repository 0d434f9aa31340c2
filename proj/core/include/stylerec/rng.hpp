// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace stylerec {

/// Seeded pseudo-random generator used everywhere randomness is needed.
///
/// The algorithm is pinned to xoshiro256** (state expanded from the seed with
/// splitmix64) so that a given seed yields the same draw sequence on every
/// platform. Uniform integers use rejection sampling, doubles take the top 53
/// bits, Gaussians come from Box-Muller; all three are documented transforms
/// of the raw stream, so shuffles and initializations reproduce exactly.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "xoshiro256**";

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (one spare cached).
  double gaussian();

  /// Fisher-Yates in-place shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i + 1));
      if (j != i) std::swap(v[i], v[j]);
    }
  }

  /// Independent generator for a named sub-stream of this seed.
  Rng fork(std::uint64_t salt) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stable 64-bit hash of a label, for deriving sub-stream salts from ids.
std::uint64_t stable_hash(std::string_view label);

}  // namespace stylerec
