// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/calibrate.hpp"
#include "shiftreg/config.hpp"
#include "shiftreg/ingest.hpp"
#include "shiftreg/metrics.hpp"
#include "shiftreg/optim.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shiftreg::experiment {

struct Data {
  ingest::EnvironmentSplit raw;  // meta columns dropped, target units
  ingest::EnvironmentSplit scaled;  // with the T_ALL scalers
  ingest::ScalerParams scalers;     // fitted on T_ALL
  std::vector<ingest::ScalerParams> env_scalers;  // fitted on each T_Ei
  nlohmann::ordered_json split_manifest;
  nlohmann::ordered_json synth_manifest;  // null for CSV sources
  std::size_t dropped_rows = 0;
};

/// Load (or generate), split, drop meta columns, fit scalers on T_ALL and
/// on every T_Ei.
Data prepare(const config::ExperimentConfig& cfg);

struct ModelSpec {
  std::string name;                // "T_E1".."T_Ek" or "T_ALL"
  std::optional<std::size_t> env;  // nullopt for the pooled model
  std::size_t index = 0;           // stable id used for seed derivation
};

std::vector<ModelSpec> model_specs(const config::ExperimentConfig& cfg, std::size_t n_env);

/// Each model sees data scaled with statistics of its own training set.
const ingest::ScalerParams& model_scalers(const Data& data, const ModelSpec& spec);

optim::TrainResult train_model(const config::ExperimentConfig& cfg, const Data& data, const ModelSpec& spec,
                               std::uint64_t seed, double moex_p);

/// Predictions of one model (seed-aggregated when several seeds were used).
struct ModelPredictions {
  std::vector<PredictiveSummary> test;
  std::vector<PredictiveSummary> val_all;
  std::vector<std::vector<PredictiveSummary>> val_env;
};

ModelPredictions predict_all(const network::Weights& w, const Data& data, const ingest::ScalerParams& scalers);
ModelPredictions aggregate_seeds(const std::vector<ModelPredictions>& per_seed);

struct ReportRow {
  std::string cell;
  std::string variant;  // raw, calibrated, robust
  metrics::MetricsReport report;
  nlohmann::ordered_json provenance;
  std::vector<PredictiveSummary> predictions;  // TEST, in target units
};

struct RunResult {
  std::vector<ReportRow> rows;
  nlohmann::ordered_json manifest;
};

/// Full pipeline; writes artifacts under `out_dir` (a FAILED marker on error).
RunResult run_experiment(const config::ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct SweepResult {
  std::vector<double> p_values;
  std::vector<ReportRow> rows;  // three per p
  std::string csv;
};

SweepResult sweep_moex(const config::ExperimentConfig& cfg, std::span<const double> p_grid,
                       const std::filesystem::path& out_dir);

/// Writes the per-environment CSVs and the split manifest.
void write_split(const config::ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Trains every model of the config and writes checkpoints, logs and scalers.
void train_only(const config::ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                const std::optional<std::string>& model = {});

/// Loads a feature CSV with the config's schema, scales it and predicts.
std::string predict_csv(const config::ExperimentConfig& cfg, const std::filesystem::path& weights,
                        const std::filesystem::path& scalers, const std::filesystem::path& data);

/// Runs fn(i) for i in [0, n) on up to `threads` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Header + one line per row.
std::string summary_csv(const std::vector<ReportRow>& rows);

}  // namespace shiftreg::experiment
