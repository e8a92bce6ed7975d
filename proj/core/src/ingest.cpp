// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/ingest.hpp"

#include "shiftreg/csv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace shiftreg::ingest {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Meta: return "meta";
    case Role::Feature: return "feature";
    case Role::Target: return "target";
    case Role::Climate: return "climate";
    case Role::Timestamp: return "timestamp";
  }
  return "?";
}

const std::vector<std::string>& Frame::meta_column(std::string_view name) const {
  for (std::size_t i = 0; i < meta_names.size(); ++i) {
    if (meta_names[i] == name) {
      return meta[i];
    }
  }
  throw DataError("frame has no meta column '" + std::string(name) + "'");
}

Frame Frame::select_rows(std::span<const std::size_t> rows) const {
  Frame out;
  out.schema = schema;
  out.feature_names = feature_names;
  out.meta_names = meta_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.target.resize(static_cast<Eigen::Index>(rows.size()));
  out.domain.reserve(rows.size());
  out.row_ids.reserve(rows.size());
  out.meta.assign(meta.size(), {});
  for (auto& col : out.meta) {
    col.reserve(rows.size());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    if (r >= n_rows()) {
      throw DataError("select_rows: row index out of range");
    }
    const auto ii = static_cast<Eigen::Index>(i);
    const auto rr = static_cast<Eigen::Index>(r);
    out.features.row(ii) = features.row(rr);
    out.target(ii) = target(rr);
    out.domain.push_back(domain.empty() ? std::string{} : domain[r]);
    out.row_ids.push_back(row_ids.empty() ? r : row_ids[r]);
    for (std::size_t c = 0; c < meta.size(); ++c) {
      out.meta[c].push_back(meta[c][r]);
    }
  }
  return out;
}

Frame concat(std::span<const Frame> frames) {
  if (frames.empty()) {
    throw DataError("concat: no frames");
  }
  std::size_t total = 0;
  for (const auto& f : frames) {
    if (f.feature_names != frames.front().feature_names ||
        f.meta_names != frames.front().meta_names) {
      throw DataError("concat: frames have different schemas");
    }
    total += f.n_rows();
  }
  Frame out;
  out.schema = frames.front().schema;
  out.feature_names = frames.front().feature_names;
  out.meta_names = frames.front().meta_names;
  out.meta.assign(out.meta_names.size(), {});
  out.features.resize(static_cast<Eigen::Index>(total),
                      static_cast<Eigen::Index>(out.feature_names.size()));
  out.target.resize(static_cast<Eigen::Index>(total));
  Eigen::Index at = 0;
  for (const auto& f : frames) {
    const auto n = static_cast<Eigen::Index>(f.n_rows());
    out.features.middleRows(at, n) = f.features;
    out.target.segment(at, n) = f.target;
    for (std::size_t r = 0; r < f.n_rows(); ++r) {
      out.domain.push_back(f.domain.empty() ? std::string{} : f.domain[r]);
      out.row_ids.push_back(f.row_ids.empty() ? r : f.row_ids[r]);
    }
    for (std::size_t c = 0; c < f.meta.size(); ++c) {
      out.meta[c].insert(out.meta[c].end(), f.meta[c].begin(), f.meta[c].end());
    }
    at += n;
  }
  return out;
}

namespace {

std::vector<Column> assign_roles(const std::vector<std::string>& header, const TableSchema& schema,
                                 std::string_view source) {
  auto require = [&](const std::string& name, std::string_view what) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw DataError(std::string(source) + ": missing " + std::string(what) + " column '" + name +
                      "'");
    }
  };
  require(schema.target, "target");
  for (const auto& m : schema.meta) require(m, "meta");
  for (const auto& f : schema.features) require(f, "feature");
  if (!schema.climate_column.empty()) require(schema.climate_column, "climate");
  if (!schema.time_column.empty()) require(schema.time_column, "timestamp");
  if (schema.meta_leading > header.size()) {
    throw DataError(std::string(source) + ": meta_leading exceeds column count");
  }

  std::vector<Column> cols;
  cols.reserve(header.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& name = header[i];
    if (!seen.insert(name).second) {
      throw DataError(std::string(source) + ": duplicate column '" + name + "'");
    }
    Role role = Role::Feature;
    if (name == schema.target) {
      role = Role::Target;
    } else if (name == schema.climate_column) {
      role = Role::Climate;
    } else if (name == schema.time_column) {
      role = Role::Timestamp;
    } else if (i < schema.meta_leading ||
               std::find(schema.meta.begin(), schema.meta.end(), name) != schema.meta.end()) {
      role = Role::Meta;
    } else if (!schema.features.empty() &&
               std::find(schema.features.begin(), schema.features.end(), name) ==
                   schema.features.end()) {
      role = Role::Meta;
    }
    cols.push_back({name, role});
  }
  return cols;
}

}  // namespace

LoadedTable parse_table(std::string_view text, const LoadOptions& options, std::string_view source) {
  const csv::Table table = csv::parse(text, options.delimiter, source);
  if (table.rows.empty()) {
    throw DataError(std::string(source) + ": no data rows");
  }
  const auto schema = assign_roles(table.header, options.schema, source);

  std::vector<std::size_t> feature_idx;
  std::vector<std::size_t> meta_idx;
  std::size_t target_idx = 0;
  std::vector<std::size_t> required_meta;  // climate/timestamp must be present when declared
  for (std::size_t i = 0; i < schema.size(); ++i) {
    switch (schema[i].role) {
      case Role::Feature: feature_idx.push_back(i); break;
      case Role::Target: target_idx = i; break;
      case Role::Climate:
      case Role::Timestamp:
        required_meta.push_back(i);
        meta_idx.push_back(i);
        break;
      case Role::Meta: meta_idx.push_back(i); break;
    }
  }

  LoadedTable out;
  Frame& f = out.frame;
  f.schema = schema;
  for (auto i : feature_idx) f.feature_names.push_back(schema[i].name);
  for (auto i : meta_idx) f.meta_names.push_back(schema[i].name);
  f.meta.assign(meta_idx.size(), {});

  std::vector<std::vector<double>> feat_rows;
  std::vector<double> targets;
  feat_rows.reserve(table.rows.size());
  targets.reserve(table.rows.size());

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool missing = false;
    auto check_missing = [&](std::size_t c) {
      if (csv::is_missing(row[c])) {
        if (options.missing == MissingPolicy::Fail) {
          throw DataError(std::string(source) + ": missing value at row " + std::to_string(r + 1) +
                          ", column '" + schema[c].name + "'");
        }
        missing = true;
      }
    };
    for (auto c : feature_idx) check_missing(c);
    check_missing(target_idx);
    for (auto c : required_meta) check_missing(c);
    if (missing) {
      ++out.dropped_rows;
      continue;
    }

    auto numeric = [&](std::size_t c) {
      const auto v = csv::parse_double(row[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(std::string(source) + ": non-numeric value '" + row[c] + "' at row " +
                        std::to_string(r + 1) + ", column '" + schema[c].name + "'");
      }
      return *v;
    };
    std::vector<double> values;
    values.reserve(feature_idx.size());
    for (auto c : feature_idx) values.push_back(numeric(c));
    targets.push_back(numeric(target_idx));
    feat_rows.push_back(std::move(values));
    for (std::size_t m = 0; m < meta_idx.size(); ++m) {
      f.meta[m].push_back(row[meta_idx[m]]);
    }
    f.row_ids.push_back(r);
  }

  const auto n = static_cast<Eigen::Index>(targets.size());
  f.features.resize(n, static_cast<Eigen::Index>(feature_idx.size()));
  f.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& values = feat_rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < values.size(); ++j) {
      f.features(i, static_cast<Eigen::Index>(j)) = values[j];
    }
    f.target(i) = targets[static_cast<std::size_t>(i)];
  }
  f.domain.assign(targets.size(), std::string{});
  return out;
}

LoadedTable load_table(const std::filesystem::path& path, const LoadOptions& options) {
  return parse_table(read_file(path), options, path.string());
}

Frame drop_meta(const Frame& frame) {
  if (frame.n_features() == 0) {
    throw DataError("drop_meta: no features remain");
  }
  Frame out = frame;
  out.schema.clear();
  for (const auto& c : frame.schema) {
    if (c.role == Role::Feature || c.role == Role::Target) {
      out.schema.push_back(c);
    }
  }
  out.meta_names.clear();
  out.meta.clear();
  return out;
}

int week_of_year_from_unix(double seconds) {
  using namespace std::chrono;
  const auto days = static_cast<long long>(std::floor(seconds / 86400.0));
  const sys_days day{std::chrono::days{days}};
  const year_month_day ymd{day};
  const sys_days jan1{ymd.year() / January / 1};
  const auto doy = (day - jan1).count();
  return static_cast<int>(doy / 7 + 1);
}

std::string time_bin(double value, const TimeRule& rule) {
  double week = value;
  if (rule.source == TimeRule::Source::UnixSeconds) {
    week = week_of_year_from_unix(value);
  }
  return week >= rule.early_threshold ? "Early" : "Late";
}

EnvironmentFrames split_environments(const Frame& frame, const SplitRule& rule,
                                     std::span<const std::string> known_climates) {
  const auto& climate = frame.meta_column(rule.climate_column);
  const auto& times = frame.meta_column(rule.time_column);

  std::vector<std::string> climates;
  if (known_climates.empty()) {
    std::set<std::string> distinct(climate.begin(), climate.end());
    climates.assign(distinct.begin(), distinct.end());
    if (climates.size() != rule.expected_climates) {
      throw DataError("split_environments: expected " + std::to_string(rule.expected_climates) +
                      " climates, found " + std::to_string(climates.size()));
    }
  } else {
    climates.assign(known_climates.begin(), known_climates.end());
    std::sort(climates.begin(), climates.end());
  }

  std::map<std::string, std::size_t> env_index;
  EnvironmentFrames out;
  for (const auto& c : climates) {
    for (const char* bin : {"Early", "Late"}) {
      env_index[c + "/" + bin] = out.labels.size();
      out.labels.push_back(c + "/" + bin);
    }
  }

  std::vector<std::vector<std::size_t>> members(out.labels.size());
  std::vector<std::string> tags(frame.n_rows());
  for (std::size_t r = 0; r < frame.n_rows(); ++r) {
    const auto t = csv::parse_double(times[r]);
    if (!t) {
      throw DataError("split_environments: non-numeric time value '" + times[r] + "' at row " +
                      std::to_string(r + 1));
    }
    const std::string tag = climate[r] + "/" + time_bin(*t, rule.time);
    const auto it = env_index.find(tag);
    if (it == env_index.end()) {
      throw DataError("split_environments: unknown climate '" + climate[r] + "' at row " +
                      std::to_string(r + 1));
    }
    members[it->second].push_back(r);
    tags[r] = tag;
  }

  std::vector<std::string> empty;
  for (std::size_t e = 0; e < members.size(); ++e) {
    if (members[e].empty()) {
      empty.push_back(out.labels[e]);
    }
  }
  if (!empty.empty()) {
    std::string list;
    for (const auto& e : empty) list += (list.empty() ? "" : ", ") + e;
    throw DataError("split_environments: " + std::to_string(empty.size()) +
                    " empty environment(s): " + list);
  }

  Frame tagged = frame;
  tagged.domain = tags;
  for (const auto& m : members) {
    out.envs.push_back(tagged.select_rows(m));
  }
  out.pooled = std::move(tagged);
  return out;
}

EnvironmentSplit make_environment_split(const Frame& train, const Frame& val, Frame test,
                                        const SplitRule& rule) {
  auto t = split_environments(train, rule);
  std::vector<std::string> climates;
  for (std::size_t i = 0; i < t.labels.size(); i += 2) {
    climates.push_back(t.labels[i].substr(0, t.labels[i].find('/')));
  }
  auto v = split_environments(val, rule, climates);
  EnvironmentSplit split;
  split.labels = t.labels;
  split.train = std::move(t.envs);
  split.val = std::move(v.envs);
  split.train_all = std::move(t.pooled);
  split.val_all = std::move(v.pooled);
  split.test = std::move(test);
  return split;
}

nlohmann::ordered_json split_manifest(const EnvironmentSplit& split) {
  auto frame_entry = [](const std::string& name, const std::string& label, const Frame& f) {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["label"] = label;
    j["count"] = f.n_rows();
    j["rows"] = f.row_ids;
    return j;
  };
  nlohmann::ordered_json j;
  j["environments"] = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < split.labels.size(); ++e) {
    nlohmann::ordered_json env;
    env["index"] = e + 1;
    env["label"] = split.labels[e];
    env["train"] = frame_entry("T_E" + std::to_string(e + 1), split.labels[e], split.train[e]);
    env["val"] = frame_entry("V_E" + std::to_string(e + 1), split.labels[e], split.val[e]);
    j["environments"].push_back(env);
  }
  j["T_ALL"] = frame_entry("T_ALL", "all", split.train_all);
  j["V_ALL"] = frame_entry("V_ALL", "all", split.val_all);
  j["TEST"] = frame_entry("TEST", "test", split.test);
  return j;
}

ScalerParams fit_scalers(const Frame& train, double lo, double hi) {
  const auto n = train.n_rows();
  if (n < 2) {
    throw DataError("fit_scalers: need at least 2 rows, got " + std::to_string(n));
  }
  if (!(hi > lo)) {
    throw ConfigError("fit_scalers: target range must satisfy hi > lo");
  }
  ScalerParams s;
  s.lo = lo;
  s.hi = hi;
  const auto d = train.n_features();
  s.mean.resize(d);
  s.std.resize(d);
  s.min.resize(d);
  s.max.resize(d);
  s.constant.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = train.features.col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    s.mean[j] = mean;
    s.std[j] = std::sqrt(var);
    s.constant[j] = col.maxCoeff() == col.minCoeff() || !(s.std[j] > 0.0);
    if (s.constant[j]) {
      s.std[j] = 1.0;
      s.min[j] = 0.0;
      s.max[j] = 0.0;
      continue;
    }
    const auto z = (col.array() - mean) / s.std[j];
    s.min[j] = z.minCoeff();
    s.max[j] = z.maxCoeff();
  }

  const double ymin = train.target.minCoeff();
  const double ymax = train.target.maxCoeff();
  if (!(ymax > ymin)) {
    throw DataError("fit_scalers: constant target cannot be scaled");
  }
  // Standardizing and then min-maxing collapses to one affine map; writing it
  // in closed form avoids carrying the intermediate mean/std round-off.
  s.a = (hi - lo) / (ymax - ymin);
  s.b = lo - s.a * ymin;
  return s;
}

double transform_feature(double x, std::size_t j, const ScalerParams& s) {
  if (s.constant[j]) {
    return 0.5;
  }
  const double z = (x - s.mean[j]) / s.std[j];
  return (z - s.min[j]) / (s.max[j] - s.min[j]);
}

double transform_target(double y, const ScalerParams& s) { return s.a * y + s.b; }

double invert_target(double u, const ScalerParams& s) { return (u - s.b) / s.a; }

double variance_scale(const ScalerParams& s) { return 1.0 / (s.a * s.a); }

Frame transform(const Frame& frame, const ScalerParams& s) {
  if (frame.n_features() != s.mean.size()) {
    throw DataError("transform: frame has " + std::to_string(frame.n_features()) +
                    " features, scaler expects " + std::to_string(s.mean.size()));
  }
  Frame out = frame;
  for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.features.cols(); ++j) {
      out.features(i, j) = transform_feature(frame.features(i, j), static_cast<std::size_t>(j), s);
    }
    out.target(i) = transform_target(frame.target(i), s);
  }
  return out;
}

nlohmann::ordered_json to_json(const ScalerParams& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["min"] = s.min;
  j["max"] = s.max;
  j["constant"] = s.constant;
  j["target_a"] = s.a;
  j["target_b"] = s.b;
  j["target_lo"] = s.lo;
  j["target_hi"] = s.hi;
  return j;
}

ScalerParams scalers_from_json(const nlohmann::json& j) {
  try {
    ScalerParams s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    s.min = j.at("min").get<std::vector<double>>();
    s.max = j.at("max").get<std::vector<double>>();
    s.constant = j.at("constant").get<std::vector<bool>>();
    s.a = j.at("target_a").get<double>();
    s.b = j.at("target_b").get<double>();
    s.lo = j.at("target_lo").get<double>();
    s.hi = j.at("target_hi").get<double>();
    const auto d = s.mean.size();
    if (s.std.size() != d || s.min.size() != d || s.max.size() != d || s.constant.size() != d ||
        s.a == 0.0) {
      throw DataError("scaler JSON is inconsistent");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scaler JSON: ") + e.what());
  }
}

ExternalPredictions parse_external_predictions(std::string_view text, char delimiter,
                                               std::string_view source) {
  const auto table = csv::parse(text, delimiter, source);
  auto need = [&](std::string_view name) {
    const auto idx = table.find(name);
    if (!idx) {
      throw DataError(std::string(source) + ": missing required column '" + std::string(name) +
                      "'");
    }
    return *idx;
  };
  const auto mean_c = need("pred_mean");
  const auto alea_c = need("pred_std_aleatoric");
  const auto target_c = need("target");
  const auto epi_c = table.find("pred_std_epistemic");
  const auto dom_c = table.find("domain");

  ExternalPredictions out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto num = [&](std::size_t c) {
      const auto v = csv::parse_double(row[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(std::string(source) + ": non-numeric value '" + row[c] + "' at row " +
                        std::to_string(r + 1) + ", column '" + table.header[c] + "'");
      }
      return *v;
    };
    PredictiveSummary s;
    s.mean = num(mean_c);
    const double alea = num(alea_c);
    if (!(alea > 0.0)) {
      throw DataError(std::string(source) + ": nonpositive pred_std_aleatoric at row " +
                      std::to_string(r + 1));
    }
    s.var_aleatoric = alea * alea;
    if (epi_c) {
      const double epi = num(*epi_c);
      if (epi < 0.0) {
        throw DataError(std::string(source) + ": negative pred_std_epistemic at row " +
                        std::to_string(r + 1));
      }
      s.var_epistemic = epi * epi;
    }
    out.summaries.push_back(s);
    out.targets.push_back(num(target_c));
    out.domains.push_back(dom_c ? row[*dom_c] : std::string{});
  }
  if (out.summaries.empty()) {
    throw DataError(std::string(source) + ": no prediction rows");
  }
  return out;
}

ExternalPredictions load_external_predictions(const std::filesystem::path& path, char delimiter) {
  return parse_external_predictions(read_file(path), delimiter, path.string());
}

std::string format_predictions_csv(std::span<const PredictiveSummary> summaries,
                                   std::span<const double> targets,
                                   std::span<const std::string> domains) {
  if (targets.size() != summaries.size() || (!domains.empty() && domains.size() != summaries.size())) {
    throw DataError("format_predictions_csv: length mismatch");
  }
  std::string out = "pred_mean,pred_std_aleatoric,pred_std_epistemic,target";
  if (!domains.empty()) out += ",domain";
  out += '\n';
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    out += csv::format_double(s.mean) + ',' + csv::format_double(std::sqrt(s.var_aleatoric)) + ',' +
           csv::format_double(std::sqrt(s.var_epistemic)) + ',' + csv::format_double(targets[i]);
    if (!domains.empty()) out += ',' + csv::escape(domains[i]);
    out += '\n';
  }
  return out;
}

}  // namespace shiftreg::ingest
