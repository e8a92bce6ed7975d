// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shiftreg::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, if present.
  std::optional<std::size_t> find(std::string_view name) const;
};

/// Parses RFC-4180-style text: one header line, quoted fields may contain the
/// delimiter, doubled quotes, and newlines. Blank lines are skipped. A UTF-8
/// byte-order mark on the first line is ignored. Throws DataError on ragged
/// rows or an empty input.
Table parse(std::string_view text, char delimiter = ',', std::string_view source = "<memory>");

Table read(const std::filesystem::path& path, char delimiter = ',');

/// Quotes a field if it contains the delimiter, a quote or a newline.
std::string escape(std::string_view field, char delimiter = ',');

/// Full-precision (round-trip) rendering of a double.
std::string format_double(double v);

/// Strict numeric parse of a whole field; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view field);

/// True for the spellings treated as a missing value: "", NA, NaN, nan, null, N/A.
bool is_missing(std::string_view field);

}  // namespace shiftreg::csv
