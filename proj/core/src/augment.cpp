// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/augment.hpp"

#include <algorithm>
#include <cmath>

namespace shiftreg::augment {

void MoExConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("moex.p must lie in [0, 1]");
  }
  if (!(lambda_alpha > 0.0) || !(lambda_beta > 0.0)) {
    throw ConfigError("moex lambda parameters must be positive");
  }
}

std::size_t MoExPairing::n_augmented() const {
  return static_cast<std::size_t>(
      std::count_if(partner.begin(), partner.end(), [](std::int64_t j) { return j >= 0; }));
}

std::pair<double, double> pono_stats(std::span<const double> x) {
  if (x.size() < 2) {
    throw DataError("pono_stats: need at least 2 entries");
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  return {mean, std::max(std::sqrt(var), kStdFloor)};
}

std::vector<double> moex_exchange(std::span<const double> xa, std::span<const double> xb) {
  if (xa.size() != xb.size()) {
    throw DataError("moex_exchange: length mismatch");
  }
  const auto [ma, sa] = pono_stats(xa);
  const auto [mb, sb] = pono_stats(xb);
  std::vector<double> out(xa.size());
  for (std::size_t i = 0; i < xa.size(); ++i) {
    out[i] = sb * (xa[i] - ma) / sa + mb;
  }
  return out;
}

double sample_lambda(const MoExConfig& config, Rng& rng) {
  // Beta(100,100) is never exactly 0 or 1 in practice; guard anyway.
  for (;;) {
    const double l = rng.beta(config.lambda_alpha, config.lambda_beta);
    if (l > 0.0 && l < 1.0) return l;
  }
}

AugmentedBatch augment_batch(const Matrix& batch, const MoExConfig& config, Rng& rng) {
  const auto n = static_cast<std::size_t>(batch.rows());
  AugmentedBatch out;
  out.features = batch;
  out.pairing.partner.assign(n, -1);
  out.pairing.lambda.assign(n, 1.0);
  if (config.p <= 0.0) {
    return out;
  }
  const auto d = static_cast<std::size_t>(batch.cols());
  for (std::size_t i = 0; i < n; ++i) {
    if (config.p < 1.0 && rng.uniform() >= config.p) {
      continue;
    }
    if (n < 2) {
      ++out.skipped;
      continue;
    }
    auto j = static_cast<std::size_t>(rng.below(n - 1));
    if (j >= i) ++j;
    const double lambda = sample_lambda(config, rng);
    const std::span<const double> xa(batch.row(static_cast<Eigen::Index>(i)).data(), d);
    const std::span<const double> xb(batch.row(static_cast<Eigen::Index>(j)).data(), d);
    const auto x = moex_exchange(xa, xb);
    for (std::size_t c = 0; c < d; ++c) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = x[c];
    }
    out.pairing.partner[i] = static_cast<std::int64_t>(j);
    out.pairing.lambda[i] = lambda;
  }
  return out;
}

}  // namespace shiftreg::augment
