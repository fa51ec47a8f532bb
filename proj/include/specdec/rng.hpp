#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * Seeded, stream-splittable PRNG (xoshiro256++ seeded via splitmix64).
 *
 * Reproducibility contract: identical (seed, stream) plus an identical draw
 * sequence yields bit-identical outputs, independent of platform RNG
 * libraries. Streams are the unit of concurrency: one Rng per sequence lane,
 * split by lane index. A draw counter is exposed so tests can audit the
 * one-draw-per-decision accounting the batch path relies on.
 */

#include <array>
#include <cmath>
#include <cstdint>

namespace specdec {

namespace detail {

/// splitmix64 finalizer, used both as a chain step and a stateless mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
    // Distinct (seed, stream) pairs land in unrelated splitmix chains.
    std::uint64_t sm = detail::mix64(seed ^ 0x6a09e667f3bcc909ULL) ^
                       detail::mix64(stream + 0x9e3779b97f4a7c15ULL);
    for (auto& word : state_) word = detail::splitmix64_next(sm);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
      state_[0] = 0x9e3779b97f4a7c15ULL;  // all-zero state is invalid for xoshiro
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  /// One uniform draw in [0, 1) with 53 random bits. Counts as one draw.
  double uniform() {
    ++draws_;
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. Consumes exactly two uniform draws.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    // 1 - u1 keeps the log argument in (0, 1].
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Total uniform draws consumed since construction (audit hook).
  std::uint64_t draws() const { return draws_; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t draws_ = 0;
};

}  // namespace specdec
