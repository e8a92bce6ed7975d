// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/common.hpp"
#include "shiftreg/rng.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace shiftreg::augment {

inline constexpr double kStdFloor = 1e-5;

struct MoExConfig {
  double p = 0.20;
  double lambda_alpha = 100.0;
  double lambda_beta = 100.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// partner[i] < 0 marks a pass-through row.
struct MoExPairing {
  std::vector<std::int64_t> partner;
  std::vector<double> lambda;

  std::size_t size() const { return partner.size(); }
  bool augmented(std::size_t i) const { return partner[i] >= 0; }
  std::size_t n_augmented() const;
};

/// Mean and population std across the entries, std floored at 1e-5.
std::pair<double, double> pono_stats(std::span<const double> x);

/// σ_B (x_A − μ_A) / σ_A + μ_B.
std::vector<double> moex_exchange(std::span<const double> xa, std::span<const double> xb);

double sample_lambda(const MoExConfig& config, Rng& rng);

struct AugmentedBatch {
  Matrix features;
  MoExPairing pairing;
  /// Rows that would have been augmented but had no partner (batch of 1).
  std::size_t skipped = 0;
};

/// Each row is augmented independently with probability p, with its moment
/// donor drawn uniformly from the other rows of the batch.
AugmentedBatch augment_batch(const Matrix& batch, const MoExConfig& config, Rng& rng);

}  // namespace shiftreg::augment
