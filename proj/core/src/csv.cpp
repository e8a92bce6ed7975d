// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/csv.hpp"

#include "shiftreg/common.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace shiftreg::csv {

std::optional<std::size_t> Table::find(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

Table parse(std::string_view text, char delimiter, std::string_view source) {
  if (text.starts_with("\xEF\xBB\xBF")) {
    text.remove_prefix(3);
  }
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool record_has_content = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (record_has_content || !record.empty()) {
      end_field();
      records.push_back(std::move(record));
    }
    record.clear();
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      record_has_content = true;
    } else if (c == delimiter) {
      end_field();
      record_has_content = true;
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      field.push_back(c);
      field_started = true;
      record_has_content = true;
    }
  }
  if (in_quotes) {
    throw DataError(std::string(source) + ": unterminated quoted field");
  }
  end_record();

  if (records.empty()) {
    throw DataError(std::string(source) + ": empty file");
  }
  Table table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError(std::string(source) + ": row " + std::to_string(r) + " has " +
                      std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

Table read(const std::filesystem::path& path, char delimiter) {
  return parse(read_file(path), delimiter, path.string());
}

std::string escape(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') {
      out += "\"\"";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) {
    throw Error("format_double failed");
  }
  return std::string(buf.data(), ptr);
}

std::optional<double> parse_double(std::string_view field) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
    field.remove_prefix(1);
  }
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) {
    field.remove_suffix(1);
  }
  if (!field.empty() && field.front() == '+') {
    field.remove_prefix(1);
  }
  if (field.empty()) {
    return std::nullopt;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    return std::nullopt;
  }
  return v;
}

bool is_missing(std::string_view field) {
  while (!field.empty() && field.front() == ' ') {
    field.remove_prefix(1);
  }
  while (!field.empty() && field.back() == ' ') {
    field.remove_suffix(1);
  }
  return field.empty() || field == "NA" || field == "NaN" || field == "nan" || field == "null" ||
         field == "N/A";
}

}  // namespace shiftreg::csv
