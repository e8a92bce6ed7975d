// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <utility>
#include <vector>

namespace shiftreg::betamix {

inline constexpr double kParamMin = 1e-3;
inline constexpr double kParamMax = 1e4;
inline constexpr double kTargetClamp = 1e-4;

/// Parameters of one sample's K-component beta mixture.
struct MixtureParams {
  std::vector<double> weights;
  std::vector<double> alphas;
  std::vector<double> betas;

  std::size_t k() const { return weights.size(); }
};

/// Throws DataError if the invariants (simplex weights, parameter bounds) fail.
void validate(const MixtureParams& params);

/// ln Γ(x) for x > 0 (Lanczos, g = 7, 9 terms).
double log_gamma(double x);

/// ψ(x) = d/dx ln Γ(x) for x > 0.
double digamma(double x);

double log_beta_fn(double a, double b);

double log_beta_pdf(double y, double alpha, double beta);

/// −log Σ π_k Beta(y; α_k, β_k) via a max-shifted log-sum-exp.
double mixture_nll(const MixtureParams& params, double y);

/// Same, also writing the posterior component responsibilities r_k.
double mixture_nll(const MixtureParams& params, double y, std::span<double> responsibilities);

/// Mixture mean and variance.
std::pair<double, double> mixture_mean_var(const MixtureParams& params);

/// Clamp a scaled target into the open beta support.
double clamp_target(double y);

}  // namespace shiftreg::betamix
