// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/augment.hpp"
#include "shiftreg/betamix.hpp"
#include "shiftreg/common.hpp"
#include "shiftreg/ingest.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shiftreg::network {

struct NetworkConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden = {128, 128};
  std::size_t k = 5;
  double leaky_slope = 0.01;
  double pono_eps = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Dense {
  Matrix weight;  // out x in
  Vector bias;
};

/// LeakyGate(s, c) -> Dense[0] -> lrelu -> PONO(γ, δ) -> {Dense[i] -> lrelu}... -> head.
struct Weights {
  NetworkConfig config;
  Vector gate_scale;
  Vector gate_bias;
  std::vector<Dense> hidden;
  Vector pono_gain;
  Vector pono_shift;
  Dense head;  // 3K x last hidden; rows interleaved (w_k, a_k, b_k)
};

/// A named, mutable view of one parameter tensor.
struct Tensor {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool is_matrix = false;  // dense weight matrices only (gradient centralization)

  Eigen::Map<Matrix> map() const { return {data, rows, cols}; }
  Eigen::Index size() const { return rows * cols; }
};

/// Every parameter tensor in a fixed order.
std::vector<Tensor> tensors(Weights& w);
std::size_t parameter_count(const Weights& w);

Weights init(const NetworkConfig& config);
/// Same shapes as `w`, all zeros.
Weights zeros_like(const Weights& w);

/// Raw head outputs (3K per row) for a batch.
Matrix head_outputs(const Weights& w, const Matrix& x);
betamix::MixtureParams head_to_mixture(std::span<const double> raw, std::size_t k);

betamix::MixtureParams forward(const Weights& w, std::span<const double> x);
std::vector<betamix::MixtureParams> forward(const Weights& w, const Matrix& x);

struct LossAndGradients {
  double loss = 0.0;
  Weights grad;
};

/// Mean mixture NLL over the batch and its exact gradient. With a pairing,
/// augmented row i contributes λ·NLL(y_i) + (1−λ)·NLL(y_partner). Targets
/// must lie strictly inside (0, 1).
LossAndGradients loss_and_gradients(const Weights& w, const Matrix& x, std::span<const double> y,
                                    const augment::MoExPairing* mix = nullptr);

/// Mean NLL only.
double loss(const Weights& w, const Matrix& x, std::span<const double> y,
            const augment::MoExPairing* mix = nullptr);

/// Predictive mean / aleatoric variance in target units.
std::vector<PredictiveSummary> predict(const Weights& w, const Matrix& x,
                                       const ingest::ScalerParams& scalers);

nlohmann::ordered_json to_json(const Weights& w);
Weights weights_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const NetworkConfig& c);

}  // namespace shiftreg::network
