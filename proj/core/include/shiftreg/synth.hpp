// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/ingest.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace shiftreg::synth {

inline constexpr std::size_t kTrainDomains = 6;

/// Six training domains (3 climates x Early/Late) plus one shifted test domain.
struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t n_per_domain = 2000;      // training rows per domain
  std::size_t n_val_per_domain = 500;
  std::size_t n_test = 2000;
  std::size_t n_features = 8;
  double train_offset_scale = 1.0;      // norm of each training-domain mean shift
  double ood_offset_scale = 3.0;        // norm of the test-domain mean shift (along x0)
  double domain_bias_scale = 0.0;       // std of the per-domain additive target bias
  // Observation noise std per domain, training domains first, test domain last.
  std::vector<double> noise_std = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.0};
  double amplitude = 1.0;
  double frequency = 1.0;

  void validate() const;
};

struct DomainTruth {
  std::string label;
  std::vector<double> offset;
  double bias = 0.0;
  double noise_std = 0.0;
};

struct SynthData {
  ingest::Frame train;  // raw (unscaled), with climate / week_of_year meta columns
  ingest::Frame val;
  ingest::Frame test;
  std::vector<double> w;
  std::vector<double> w2;
  std::vector<DomainTruth> domains;  // 6 training domains, then the test domain
  nlohmann::ordered_json manifest;
};

SynthData generate(const SynthConfig& config);

/// The column roles the generated CSVs use.
ingest::TableSchema schema();

/// CSV text in the layout load_table() accepts with schema().
std::string to_csv(const ingest::Frame& frame);

/// Noise-free target for one feature vector of domain `d`.
double mean_function(const SynthData& data, std::size_t d, std::span<const double> x);

nlohmann::ordered_json to_json(const SynthConfig& c);

}  // namespace shiftreg::synth
