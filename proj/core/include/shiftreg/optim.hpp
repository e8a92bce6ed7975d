// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/augment.hpp"
#include "shiftreg/ingest.hpp"
#include "shiftreg/network.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace shiftreg::optim {

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t cycles = 2;
  std::size_t epochs_per_cycle = 15;
  double lr_max = 1e-3;
  double lr_min = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.0;
  double trust_min = 1e-3;
  double trust_max = 10.0;
  bool gradient_centralization = true;
  bool swa = true;
  std::size_t swa_window = 5;  // last N epochs of every cycle
  std::uint64_t seed = 0;

  void validate() const;
};

/// lr_min + ½(lr_max − lr_min)(1 + cos(π t / T)).
double cosine_lr(double t, double T, double lr_max, double lr_min);

/// Subtracts each weight-matrix row's mean; vectors are left alone.
void centralize_gradients(network::Weights& grads);

struct LambState {
  std::vector<Vector> m;
  std::vector<Vector> v;
  std::uint64_t step = 0;
};

struct LambStats {
  std::size_t clamped = 0;  // tensors whose trust ratio hit a clamp bound
};

/// One LAMB update with per-tensor trust ratios.
LambStats lamb_step(network::Weights& weights, network::Weights& grads, LambState& state, double lr,
                    const TrainConfig& config);

/// Running sum of weight snapshots.
class Swa {
 public:
  void update(const network::Weights& w);
  network::Weights finalize() const;
  std::size_t count() const { return count_; }

 private:
  std::optional<network::Weights> sum_;
  std::size_t count_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // global, 0-based
  std::size_t cycle = 0;
  double train_loss = 0.0;
  double val_nll = 0.0;
  double lr_first = 0.0;
  double lr_last = 0.0;
  double augmented_fraction = 0.0;
  std::size_t trust_clamped = 0;
  std::size_t moex_skipped = 0;
  bool swa_snapshot = false;
  bool best = false;
};

struct TrainResult {
  network::Weights weights;
  std::vector<EpochRecord> log;
  std::string chosen;  // "best" or "swa"
  double best_val_nll = 0.0;
  double swa_val_nll = 0.0;  // NaN when SWA was not evaluated
  double final_val_nll = 0.0;
  std::size_t train_clamped = 0;
  std::size_t val_clamped = 0;
  bool diverged = false;
};

/// Frames must already be scaled. `moex == nullptr` disables augmentation.
TrainResult train(const network::NetworkConfig& net, const ingest::Frame& train_frame,
                  const ingest::Frame& val_frame, const TrainConfig& config,
                  const augment::MoExConfig* moex);

/// Mean beta NLL on a scaled frame, targets clamped into the support.
double validation_nll(const network::Weights& w, const Matrix& x, std::span<const double> y);

nlohmann::ordered_json to_json(const EpochRecord& r);
/// One JSON object per line.
std::string log_jsonl(const std::vector<EpochRecord>& log);

}  // namespace shiftreg::optim
