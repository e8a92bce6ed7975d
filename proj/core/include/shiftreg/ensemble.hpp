// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/calibrate.hpp"
#include "shiftreg/common.hpp"

#include <vector>

namespace shiftreg::ensemble {

/// members[m][row]. All member lists must be aligned and of equal length.
using Members = std::vector<std::vector<PredictiveSummary>>;

struct InverseVarianceOptions {
  bool aleatoric_only = false;  // weight by aleatoric instead of total variance
};

/// Precision-weighted mean; variance 1/Σ(1/v) reported as aleatoric.
std::vector<PredictiveSummary> inverse_variance_combine(const Members& members,
                                                        const InverseVarianceOptions& options = {});

/// Combination of calibrated members: precision-weighted means of the
/// calibrated means and of the calibrated stds.
std::vector<PredictiveSummary> inverse_variance_combine_calibrated(
    const std::vector<std::vector<calibrate::CalibratedSummary>>& members);

/// Mean of means, mean of aleatoric variances, population variance of means.
std::vector<PredictiveSummary> seed_aggregate(const Members& members);

}  // namespace shiftreg::ensemble
