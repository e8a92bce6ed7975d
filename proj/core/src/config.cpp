// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/config.hpp"

#include <set>

namespace shiftreg::config {

namespace {

// Walks one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + display() + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: key '" + qualified(key) + "' has the wrong type");
    }
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(j_.at(key), qualified(key));
  }

  const nlohmann::json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError("config: unknown key '" + qualified(k) + "'");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

char parse_delim(const std::string& s, const std::string& key) {
  if (s == "\\t" || s == "tab") return '\t';
  if (s.size() != 1) throw ConfigError("config: '" + key + "' must be a single character");
  return s[0];
}

synth::SynthConfig read_synth(Section s) {
  synth::SynthConfig c;
  s.get("seed", c.seed);
  s.get("n_per_domain", c.n_per_domain);
  s.get("n_val_per_domain", c.n_val_per_domain);
  s.get("n_test", c.n_test);
  s.get("n_features", c.n_features);
  s.get("train_offset_scale", c.train_offset_scale);
  s.get("ood_offset_scale", c.ood_offset_scale);
  s.get("domain_bias_scale", c.domain_bias_scale);
  s.get("noise_std", c.noise_std);
  s.get("amplitude", c.amplitude);
  s.get("frequency", c.frequency);
  s.finish();
  c.validate();
  return c;
}

ingest::TableSchema read_schema(Section s) {
  ingest::TableSchema t;
  s.get("target", t.target);
  s.get("meta", t.meta);
  s.get("meta_leading", t.meta_leading);
  s.get("climate_column", t.climate_column);
  s.get("time_column", t.time_column);
  s.get("features", t.features);
  s.finish();
  return t;
}

CsvSource read_csv(Section s, const std::filesystem::path& base) {
  CsvSource c;
  std::string train, val, test, delim = ",", missing = "drop";
  s.get("train", train);
  s.get("val", val);
  s.get("test", test);
  s.get("delimiter", delim);
  s.get("missing", missing);
  if (train.empty() || val.empty() || test.empty()) {
    throw ConfigError("config: data.csv needs 'train', 'val' and 'test' paths");
  }
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
  };
  c.train = resolve(train);
  c.val = resolve(val);
  c.test = resolve(test);
  c.delimiter = parse_delim(delim, s.qualified("delimiter"));
  if (missing == "drop") {
    c.missing = ingest::MissingPolicy::Drop;
  } else if (missing == "fail") {
    c.missing = ingest::MissingPolicy::Fail;
  } else {
    throw ConfigError("config: 'data.csv.missing' must be 'drop' or 'fail'");
  }
  if (s.has("schema")) c.schema = read_schema(s.child("schema"));
  s.finish();
  return c;
}

}  // namespace

std::string_view to_string(CalibrationMode m) {
  switch (m) {
    case CalibrationMode::None: return "none";
    case CalibrationMode::Crude: return "crude";
    case CalibrationMode::Robust: return "robust";
  }
  return "?";
}

synth::SynthConfig parse_synth(const nlohmann::json& j) { return read_synth(Section(j, "synth")); }

ExperimentConfig parse(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  Section root(j, "");

  if (!root.has("data")) throw ConfigError("config: missing required key 'data'");
  {
    Section data = root.child("data");
    if (data.has("synth")) c.synth = read_synth(data.child("synth"));
    if (data.has("csv")) c.csv = read_csv(data.child("csv"), base_dir);
    data.finish();
    if (c.synth.has_value() == c.csv.has_value()) {
      throw ConfigError("config: 'data' must contain exactly one of 'synth' or 'csv'");
    }
    if (c.synth) {
      c.split.climate_column = "climate";
      c.split.time_column = "week_of_year";
    } else {
      if (!c.csv->schema.climate_column.empty()) c.split.climate_column = c.csv->schema.climate_column;
      if (!c.csv->schema.time_column.empty()) c.split.time_column = c.csv->schema.time_column;
    }
  }
  if (root.has("split")) {
    Section s = root.child("split");
    s.get("climate_column", c.split.climate_column);
    s.get("time_column", c.split.time_column);
    std::string src = "week_of_year";
    s.get("time_source", src);
    if (src == "week_of_year") {
      c.split.time.source = ingest::TimeRule::Source::WeekOfYear;
    } else if (src == "unix_seconds") {
      c.split.time.source = ingest::TimeRule::Source::UnixSeconds;
    } else {
      throw ConfigError("config: 'split.time_source' must be 'week_of_year' or 'unix_seconds'");
    }
    s.get("early_threshold", c.split.time.early_threshold);
    s.get("expected_climates", c.split.expected_climates);
    s.finish();
    if (c.split.expected_climates < 1) throw ConfigError("config: 'split.expected_climates' must be >= 1");
  }
  if (c.csv) {
    // The split columns must be loaded as meta so they survive until splitting.
    if (c.csv->schema.climate_column.empty()) c.csv->schema.climate_column = c.split.climate_column;
    if (c.csv->schema.time_column.empty()) c.csv->schema.time_column = c.split.time_column;
  }
  if (root.has("scaling")) {
    Section s = root.child("scaling");
    s.get("target_lo", c.target_lo);
    s.get("target_hi", c.target_hi);
    s.finish();
    if (!(c.target_hi > c.target_lo && c.target_lo > 0.0 && c.target_hi < 1.0)) {
      throw ConfigError("config: scaling needs 0 < target_lo < target_hi < 1");
    }
  }
  if (root.has("network")) {
    Section s = root.child("network");
    s.get("hidden", c.network.hidden);
    s.get("k", c.network.k);
    s.get("leaky_slope", c.network.leaky_slope);
    s.get("pono_eps", c.network.pono_eps);
    s.finish();
  }
  {
    auto probe = c.network;
    probe.input_dim = 1;
    probe.validate();
  }
  if (root.has("train")) {
    Section s = root.child("train");
    s.get("batch_size", c.train.batch_size);
    s.get("cycles", c.train.cycles);
    s.get("epochs_per_cycle", c.train.epochs_per_cycle);
    s.get("lr_max", c.train.lr_max);
    s.get("lr_min", c.train.lr_min);
    s.get("beta1", c.train.beta1);
    s.get("beta2", c.train.beta2);
    s.get("eps", c.train.eps);
    s.get("weight_decay", c.train.weight_decay);
    s.get("trust_min", c.train.trust_min);
    s.get("trust_max", c.train.trust_max);
    s.get("gradient_centralization", c.train.gradient_centralization);
    s.get("swa", c.train.swa);
    s.get("swa_window", c.train.swa_window);
    s.finish();
  }
  c.train.validate();
  if (root.has("moex")) {
    Section s = root.child("moex");
    s.get("p", c.moex.p);
    s.get("lambda_alpha", c.moex.lambda_alpha);
    s.get("lambda_beta", c.moex.lambda_beta);
    s.finish();
  }
  c.moex.validate();
  if (root.has("calibration")) {
    Section s = root.child("calibration");
    std::string mode = "crude";
    s.get("mode", mode);
    if (mode == "none") {
      c.calibration.mode = CalibrationMode::None;
    } else if (mode == "crude") {
      c.calibration.mode = CalibrationMode::Crude;
    } else if (mode == "robust") {
      c.calibration.mode = CalibrationMode::Robust;
    } else {
      throw ConfigError("config: 'calibration.mode' must be none, crude or robust");
    }
    s.get("use_total_variance", c.calibration.use_total_variance);
    s.get("min_points", c.calibration.min_points);
    s.finish();
  }
  if (root.has("ensemble")) {
    Section s = root.child("ensemble");
    s.get("inverse_variance", c.ensemble.inverse_variance);
    s.get("aleatoric_only", c.ensemble.aleatoric_only);
    s.finish();
  }
  if (root.has("metrics")) {
    Section s = root.child("metrics");
    s.get("alpha", c.metrics.alpha);
    s.get("ace_levels", c.metrics.ace_levels);
    s.get("threshold", c.metrics.threshold);
    std::string score(metrics::to_string(c.metrics.score));
    s.get("score", score);
    try {
      c.metrics.score = metrics::score_from_string(score);
    } catch (const ConfigError&) {
      throw ConfigError("config: 'metrics.score' must be total_variance, aleatoric or epistemic");
    }
    s.get("nll_total_variance", c.metrics.nll_total_variance);
    s.get("normalize_is", c.metrics.normalize_is);
    if (s.has("range_override")) {
      double r = 0.0;
      s.get("range_override", r);
      c.metrics.range_override = r;
    }
    s.get("curve_points", c.metrics.curve_points);
    s.finish();
  }
  c.metrics.validate();
  root.get("train_experts", c.train_experts);
  root.get("seeds", c.seeds);
  if (c.seeds.empty()) throw ConfigError("config: 'seeds' must list at least one seed");
  root.get("p_grid", c.p_grid);
  if (c.p_grid.empty()) throw ConfigError("config: 'p_grid' must be nonempty");
  for (double p : c.p_grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("config: 'p_grid' values must lie in [0, 1]");
  }
  std::string out;
  root.get("output_dir", out);
  if (!out.empty()) c.output_dir = out;
  root.get("threads", c.threads);
  if (c.threads < 1) throw ConfigError("config: 'threads' must be >= 1");
  root.finish();
  return c;
}

ExperimentConfig load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse(j, path.parent_path());
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  if (c.synth) {
    j["data"]["synth"] = synth::to_json(*c.synth);
  } else {
    auto& s = j["data"]["csv"];
    s["train"] = c.csv->train.generic_string();
    s["val"] = c.csv->val.generic_string();
    s["test"] = c.csv->test.generic_string();
    s["delimiter"] = std::string(1, c.csv->delimiter);
    s["missing"] = c.csv->missing == ingest::MissingPolicy::Drop ? "drop" : "fail";
    auto& t = s["schema"];
    t["target"] = c.csv->schema.target;
    t["meta"] = c.csv->schema.meta;
    t["meta_leading"] = c.csv->schema.meta_leading;
    t["climate_column"] = c.csv->schema.climate_column;
    t["time_column"] = c.csv->schema.time_column;
    t["features"] = c.csv->schema.features;
  }
  j["split"]["climate_column"] = c.split.climate_column;
  j["split"]["time_column"] = c.split.time_column;
  j["split"]["time_source"] =
      c.split.time.source == ingest::TimeRule::Source::WeekOfYear ? "week_of_year" : "unix_seconds";
  j["split"]["early_threshold"] = c.split.time.early_threshold;
  j["split"]["expected_climates"] = c.split.expected_climates;
  j["scaling"]["target_lo"] = c.target_lo;
  j["scaling"]["target_hi"] = c.target_hi;
  j["network"]["hidden"] = c.network.hidden;
  j["network"]["k"] = c.network.k;
  j["network"]["leaky_slope"] = c.network.leaky_slope;
  j["network"]["pono_eps"] = c.network.pono_eps;
  auto& t = j["train"];
  t["batch_size"] = c.train.batch_size;
  t["cycles"] = c.train.cycles;
  t["epochs_per_cycle"] = c.train.epochs_per_cycle;
  t["lr_max"] = c.train.lr_max;
  t["lr_min"] = c.train.lr_min;
  t["beta1"] = c.train.beta1;
  t["beta2"] = c.train.beta2;
  t["eps"] = c.train.eps;
  t["weight_decay"] = c.train.weight_decay;
  t["trust_min"] = c.train.trust_min;
  t["trust_max"] = c.train.trust_max;
  t["gradient_centralization"] = c.train.gradient_centralization;
  t["swa"] = c.train.swa;
  t["swa_window"] = c.train.swa_window;
  j["moex"]["p"] = c.moex.p;
  j["moex"]["lambda_alpha"] = c.moex.lambda_alpha;
  j["moex"]["lambda_beta"] = c.moex.lambda_beta;
  j["calibration"]["mode"] = std::string(to_string(c.calibration.mode));
  j["calibration"]["use_total_variance"] = c.calibration.use_total_variance;
  j["calibration"]["min_points"] = c.calibration.min_points;
  j["ensemble"]["inverse_variance"] = c.ensemble.inverse_variance;
  j["ensemble"]["aleatoric_only"] = c.ensemble.aleatoric_only;
  auto m = metrics::to_json(c.metrics);
  if (m["range_override"].is_null()) m.erase("range_override");
  j["metrics"] = m;
  j["train_experts"] = c.train_experts;
  j["seeds"] = c.seeds;
  j["p_grid"] = c.p_grid;
  j["output_dir"] = c.output_dir.generic_string();
  j["threads"] = c.threads;
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  auto j = to_json(c);
  // Where and how fast a run executes does not change its results.
  j.erase("output_dir");
  j.erase("threads");
  return fnv1a_hex(j.dump());
}

}  // namespace shiftreg::config
