// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/common.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shiftreg::ingest {

enum class Role { Meta, Feature, Target, Climate, Timestamp };

std::string_view to_string(Role role);

struct Column {
  std::string name;
  Role role = Role::Feature;
};

/// A tabular dataset. Feature-role columns live in `features`; every column
/// that is neither a feature nor the target (meta, climate, timestamp) is kept
/// verbatim in `meta` until drop_meta() removes it.
struct Frame {
  std::vector<Column> schema;  // file order, target included
  std::vector<std::string> feature_names;
  Matrix features;  // n_rows x n_features
  Vector target;
  std::vector<std::string> domain;  // per-row tag; empty until split
  std::vector<std::string> meta_names;
  std::vector<std::vector<std::string>> meta;  // meta[column][row]
  std::vector<std::size_t> row_ids;            // data-row index in the source file

  std::size_t n_rows() const { return static_cast<std::size_t>(target.size()); }
  std::size_t n_features() const { return feature_names.size(); }

  /// Raw strings of a meta column; throws DataError if absent.
  const std::vector<std::string>& meta_column(std::string_view name) const;

  /// Copy of the listed rows, in the given order.
  Frame select_rows(std::span<const std::size_t> rows) const;
};

/// Concatenates frames that share a schema.
Frame concat(std::span<const Frame> frames);

enum class MissingPolicy { Drop, Fail };

/// Column-role assignment for load_table(). Columns not listed anywhere are
/// features unless `features` is non-empty, in which case they are meta.
struct TableSchema {
  std::string target = "fact_temperature";
  std::vector<std::string> meta;
  std::size_t meta_leading = 0;  // the first N columns are meta
  std::string climate_column;
  std::string time_column;
  std::vector<std::string> features;
};

struct LoadOptions {
  TableSchema schema;
  char delimiter = ',';
  MissingPolicy missing = MissingPolicy::Drop;
};

struct LoadedTable {
  Frame frame;
  std::size_t dropped_rows = 0;
};

LoadedTable load_table(const std::filesystem::path& path, const LoadOptions& options);
LoadedTable parse_table(std::string_view text, const LoadOptions& options,
                        std::string_view source = "<memory>");

/// Removes every non-feature column besides the target. Throws DataError
/// ("no features remain") if the frame has no feature columns.
Frame drop_meta(const Frame& frame);

struct TimeRule {
  enum class Source { WeekOfYear, UnixSeconds };
  Source source = Source::WeekOfYear;
  /// week_of_year >= threshold maps to "Early", anything below to "Late".
  double early_threshold = 27.0;
};

/// Week of year (1..53) of a UTC unix timestamp.
int week_of_year_from_unix(double seconds);

/// "Early" or "Late" for a raw time-column value.
std::string time_bin(double value, const TimeRule& rule);

struct SplitRule {
  std::string climate_column = "climate";
  std::string time_column = "week_of_year";
  TimeRule time;
  std::size_t expected_climates = 3;
};

struct EnvironmentFrames {
  std::vector<std::string> labels;  // "<climate>/<Early|Late>", deterministic order
  std::vector<Frame> envs;
  Frame pooled;
};

/// Partitions rows by (climate, time bin). Climates are ordered
/// lexicographically, Early before Late. When `known_climates` is given the
/// climate set is taken from it (e.g. the training climates when splitting a
/// validation frame) and rows with other climates are rejected.
EnvironmentFrames split_environments(const Frame& frame, const SplitRule& rule,
                                     std::span<const std::string> known_climates = {});

struct EnvironmentSplit {
  std::vector<std::string> labels;
  std::vector<Frame> train;  // T_E1..T_Ek
  std::vector<Frame> val;    // V_E1..V_Ek
  Frame train_all;
  Frame val_all;
  Frame test;
};

EnvironmentSplit make_environment_split(const Frame& train, const Frame& val, Frame test,
                                        const SplitRule& rule);

/// Per-environment row ids and counts.
nlohmann::ordered_json split_manifest(const EnvironmentSplit& split);

struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<double> min;  // of standardized training values
  std::vector<double> max;
  std::vector<bool> constant;
  double a = 1.0;  // scaled target u = a * y + b
  double b = 0.0;
  double lo = 0.1;
  double hi = 0.9;
};

/// Standardize (population std) then min-max each feature; affine target map
/// sending the training min to `lo` and max to `hi`.
ScalerParams fit_scalers(const Frame& train, double lo = 0.1, double hi = 0.9);

Frame transform(const Frame& frame, const ScalerParams& scalers);
double transform_feature(double x, std::size_t column, const ScalerParams& scalers);
double transform_target(double y, const ScalerParams& scalers);
double invert_target(double u, const ScalerParams& scalers);
/// Multiplier taking a variance in scaled target space to target units².
double variance_scale(const ScalerParams& scalers);

nlohmann::ordered_json to_json(const ScalerParams& scalers);
ScalerParams scalers_from_json(const nlohmann::json& j);

/// Prediction file: pred_mean, pred_std_aleatoric, [pred_std_epistemic],
/// target, [domain].
struct ExternalPredictions {
  std::vector<PredictiveSummary> summaries;
  std::vector<double> targets;
  std::vector<std::string> domains;
};

ExternalPredictions load_external_predictions(const std::filesystem::path& path,
                                              char delimiter = ',');
ExternalPredictions parse_external_predictions(std::string_view text, char delimiter = ',',
                                               std::string_view source = "<memory>");
std::string format_predictions_csv(std::span<const PredictiveSummary> summaries,
                                   std::span<const double> targets,
                                   std::span<const std::string> domains = {});

}  // namespace shiftreg::ingest
