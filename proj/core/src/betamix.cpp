// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/betamix.hpp"

#include "shiftreg/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace shiftreg::betamix {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

}  // namespace

void validate(const MixtureParams& p) {
  if (p.weights.empty() || p.alphas.size() != p.k() || p.betas.size() != p.k()) {
    throw DataError("mixture: inconsistent component counts");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p.k(); ++k) {
    if (!(p.weights[k] >= 0.0)) {
      throw DataError("mixture: negative or non-finite weight");
    }
    sum += p.weights[k];
    for (double v : {p.alphas[k], p.betas[k]}) {
      if (!(v >= kParamMin && v <= kParamMax)) {
        throw DataError("mixture: parameter " + std::to_string(v) + " outside [1e-3, 1e4]");
      }
    }
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DataError("mixture: weights do not sum to 1");
  }
}

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DataError("log_gamma: argument must be positive and finite");
  }
  if (x < 0.5) {
    // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double a = kLanczos[0];
  const double t = z + kLanczosG + 0.5;
  for (std::size_t i = 1; i < kLanczos.size(); ++i) {
    a += kLanczos[i] / (z + static_cast<double>(i));
  }
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DataError("digamma: argument must be positive and finite");
  }
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  // Asymptotic series in 1/x² (Bernoulli numbers).
  const double series =
      f * (1.0 / 12 -
           f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f * (1.0 / 132 - f * (691.0 / 32760))))));
  return result + std::log(x) - 0.5 / x - series;
}

double log_beta_fn(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

double log_beta_pdf(double y, double alpha, double beta) {
  if (!(y > 0.0 && y < 1.0)) {
    throw DataError("log_beta_pdf: y must lie in (0, 1)");
  }
  return (alpha - 1.0) * std::log(y) + (beta - 1.0) * std::log1p(-y) - log_beta_fn(alpha, beta);
}

double mixture_nll(const MixtureParams& p, double y, std::span<double> resp) {
  const std::size_t k = p.k();
  double mx = -std::numeric_limits<double>::infinity();
  std::array<double, 16> small{};
  std::vector<double> big;
  double* terms = small.data();
  if (k > small.size()) {
    big.resize(k);
    terms = big.data();
  }
  for (std::size_t j = 0; j < k; ++j) {
    terms[j] = p.weights[j] > 0.0 ? std::log(p.weights[j]) + log_beta_pdf(y, p.alphas[j], p.betas[j])
                                  : -std::numeric_limits<double>::infinity();
    mx = std::max(mx, terms[j]);
  }
  if (!std::isfinite(mx)) {
    throw NumericalError("mixture_nll: all components have zero weight");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    terms[j] = std::exp(terms[j] - mx);
    s += terms[j];
  }
  if (!resp.empty()) {
    for (std::size_t j = 0; j < k; ++j) {
      resp[j] = terms[j] / s;
    }
  }
  return -(mx + std::log(s));
}

double mixture_nll(const MixtureParams& p, double y) { return mixture_nll(p, y, {}); }

std::pair<double, double> mixture_mean_var(const MixtureParams& p) {
  double mean = 0.0;
  for (std::size_t j = 0; j < p.k(); ++j) {
    mean += p.weights[j] * p.alphas[j] / (p.alphas[j] + p.betas[j]);
  }
  // Within + between decomposition; avoids cancellation in E[y²] − E[y]².
  double within = 0.0;
  double between = 0.0;
  for (std::size_t j = 0; j < p.k(); ++j) {
    const double a = p.alphas[j];
    const double b = p.betas[j];
    const double s = a + b;
    const double m = a / s;
    within += p.weights[j] * a * b / (s * s * (s + 1.0));
    between += p.weights[j] * (m - mean) * (m - mean);
  }
  return {mean, within + between};
}

double clamp_target(double y) { return std::clamp(y, kTargetClamp, 1.0 - kTargetClamp); }

}  // namespace shiftreg::betamix
