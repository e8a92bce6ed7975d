// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/augment.hpp"
#include "shiftreg/ingest.hpp"
#include "shiftreg/metrics.hpp"
#include "shiftreg/network.hpp"
#include "shiftreg/optim.hpp"
#include "shiftreg/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace shiftreg::config {

enum class CalibrationMode { None, Crude, Robust };
std::string_view to_string(CalibrationMode m);

struct CsvSource {
  std::filesystem::path train;
  std::filesystem::path val;
  std::filesystem::path test;
  char delimiter = ',';
  ingest::MissingPolicy missing = ingest::MissingPolicy::Drop;
  ingest::TableSchema schema;
};

struct CalibrationConfig {
  CalibrationMode mode = CalibrationMode::Crude;
  bool use_total_variance = false;
  std::size_t min_points = 10;
};

struct EnsembleConfig {
  bool inverse_variance = true;
  bool aleatoric_only = false;
};

struct ExperimentConfig {
  std::optional<synth::SynthConfig> synth;
  std::optional<CsvSource> csv;
  ingest::SplitRule split;
  double target_lo = 0.1;
  double target_hi = 0.9;
  network::NetworkConfig network;  // input_dim is filled in from the data
  optim::TrainConfig train;
  augment::MoExConfig moex;
  CalibrationConfig calibration;
  EnsembleConfig ensemble;
  metrics::MetricsConfig metrics;
  bool train_experts = true;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<double> p_grid = {0.05, 0.20, 0.40, 0.60, 0.80, 1.00};
  std::filesystem::path output_dir = "shiftreg-out";
  std::size_t threads = 1;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the key.
/// Relative CSV paths are resolved against `base_dir`.
ExperimentConfig parse(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load(const std::filesystem::path& path);

/// Canonical JSON rendering of every setting (defaults included).
nlohmann::ordered_json to_json(const ExperimentConfig& c);

/// FNV-1a of the canonical JSON.
std::string config_hash(const ExperimentConfig& c);

/// Strict parse of a stand-alone synth section.
synth::SynthConfig parse_synth(const nlohmann::json& j);

}  // namespace shiftreg::config
