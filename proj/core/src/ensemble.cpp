// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/ensemble.hpp"

#include <string>

namespace shiftreg::ensemble {

namespace {

template <typename T>
std::size_t check_aligned(const std::vector<std::vector<T>>& members, const char* what) {
  if (members.empty()) throw DataError(std::string(what) + ": no members");
  const std::size_t n = members.front().size();
  for (const auto& m : members) {
    if (m.size() != n) throw DataError(std::string(what) + ": members have different lengths");
  }
  return n;
}

}  // namespace

std::vector<PredictiveSummary> inverse_variance_combine(const Members& members,
                                                        const InverseVarianceOptions& options) {
  const std::size_t n = check_aligned(members, "inverse_variance_combine");
  if (members.size() == 1) return members.front();
  std::vector<PredictiveSummary> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    double wsum = 0.0;
    double msum = 0.0;
    for (const auto& m : members) {
      const double v = options.aleatoric_only ? m[r].var_aleatoric : m[r].total_variance();
      if (!(v > 0.0)) {
        throw DataError("inverse_variance_combine: nonpositive variance at row " + std::to_string(r + 1));
      }
      wsum += 1.0 / v;
      msum += m[r].mean / v;
    }
    out[r] = {msum / wsum, 1.0 / wsum, 0.0};
  }
  return out;
}

std::vector<PredictiveSummary> inverse_variance_combine_calibrated(
    const std::vector<std::vector<calibrate::CalibratedSummary>>& members) {
  const std::size_t n = check_aligned(members, "inverse_variance_combine_calibrated");
  std::vector<PredictiveSummary> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    double wsum = 0.0;
    double msum = 0.0;
    double ssum = 0.0;
    for (const auto& m : members) {
      const double v = m[r].std * m[r].std + m[r].var_epistemic;
      if (!(v > 0.0)) {
        throw DataError("inverse_variance_combine_calibrated: nonpositive variance at row " +
                        std::to_string(r + 1));
      }
      wsum += 1.0 / v;
      msum += m[r].mean / v;
      ssum += m[r].std / v;
    }
    const double sd = ssum / wsum;
    out[r] = {msum / wsum, sd * sd, 0.0};
  }
  return out;
}

std::vector<PredictiveSummary> seed_aggregate(const Members& members) {
  const std::size_t n = check_aligned(members, "seed_aggregate");
  const auto s = static_cast<double>(members.size());
  std::vector<PredictiveSummary> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    double mean = 0.0;
    double alea = 0.0;
    for (const auto& m : members) {
      mean += m[r].mean;
      alea += m[r].var_aleatoric;
    }
    mean /= s;
    double spread = 0.0;
    for (const auto& m : members) spread += (m[r].mean - mean) * (m[r].mean - mean);
    out[r] = {mean, alea / s, spread / s};
  }
  return out;
}

}  // namespace shiftreg::ensemble
