// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace shiftreg {

/// SplitMix64 finalizer step. Used for seeding and for deriving sub-streams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent 64-bit seed from a base seed and a list of stream
/// coordinates, e.g. derive_seed(seed, {epoch, batch}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords);

/// xoshiro256** (Blackman & Vigna), seeded via SplitMix64.
///
/// All distributions below are implemented here rather than with <random>
/// so that draw sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  /// Unbiased integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Gamma(shape, 1) via Marsaglia-Tsang, with the u^(1/a) boost for a < 1.
  double gamma(double shape);
  /// Beta(a, b) as X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b).
  double beta(double a, double b);

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace shiftreg
