// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shiftreg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error hierarchy. The CLI maps each family onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a schema or contract (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss, activation or gradient (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Per-sample predictive distribution in target units.
struct PredictiveSummary {
  double mean = 0.0;
  double var_aleatoric = 1.0;
  double var_epistemic = 0.0;

  double total_variance() const { return var_aleatoric + var_epistemic; }
};

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace shiftreg
