// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/common.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace shiftreg::calibrate {

inline constexpr double kDegenerateStd = 1e-8;

/// Empirical pool of calibration z-scores.
struct ZPool {
  std::vector<double> z;  // ascending
  std::string source;
  double mean = 0.0;
  double std = 0.0;  // population

  /// Linear interpolation between order statistics, clamped to the extremes.
  double quantile(double p) const;
};

struct FitOptions {
  bool use_total_variance = false;  // z = (y − μ)/sqrt(total) instead of aleatoric
  std::size_t min_points = 10;
};

/// Builds and validates a pool from raw z values (sorted here).
ZPool make_pool(std::vector<double> z, std::string source = {});

ZPool crude_fit(std::span<const PredictiveSummary> preds, std::span<const double> targets,
                std::string source = {}, const FitOptions& options = {});

struct CalibratedSummary {
  double mean = 0.0;
  double std = 1.0;  // calibrated aleatoric std
  double var_epistemic = 0.0;
  double base_mean = 0.0;  // uncalibrated μ and σ, for the quantile map
  double base_std = 1.0;
  const ZPool* pool = nullptr;

  /// μ + σ·Quantile_p(pool).
  double quantile(double p) const;
};

CalibratedSummary crude_apply(const PredictiveSummary& summary, const ZPool& pool,
                              const FitOptions& options = {});
std::vector<CalibratedSummary> crude_apply(std::span<const PredictiveSummary> summaries,
                                           const ZPool& pool, const FitOptions& options = {});

/// Calibrated (mean, aleatoric variance, epistemic) as a plain summary.
PredictiveSummary to_summary(const CalibratedSummary& c);

struct Candidate {
  std::vector<PredictiveSummary> preds;
  std::vector<double> targets;
  std::string name;
};

struct Selection {
  std::size_t index = 0;  // 0-based position in the candidate list
  ZPool pool;
  std::vector<double> nll;  // per candidate; NaN for degenerate ones
};

/// Picks the candidate whose self-calibrated Gaussian NLL is lowest (lowest
/// index on ties). Degenerate candidates are skipped.
Selection robust_select(std::span<const Candidate> candidates, const FitOptions& options = {});

nlohmann::ordered_json to_json(const ZPool& pool);
ZPool pool_from_json(const nlohmann::json& j);

}  // namespace shiftreg::calibrate
