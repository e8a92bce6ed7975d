// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/synth.hpp"

#include "shiftreg/csv.hpp"
#include "shiftreg/rng.hpp"

#include <cmath>

namespace shiftreg::synth {

namespace {

constexpr std::array<const char*, 3> kClimates = {"Dry", "MildTemperate", "Tropical"};
constexpr const char* kTestClimate = "Snow";

enum Stream : std::uint64_t { kParams = 1, kOffsets = 2, kRows = 3 };
enum Part : std::uint64_t { kTrain = 0, kVal = 1, kTest = 2 };

int draw_week(Rng& rng, bool early) {
  return early ? 35 + static_cast<int>(rng.below(18)) : 1 + static_cast<int>(rng.below(14));
}

}  // namespace

void SynthConfig::validate() const {
  if (n_per_domain < 10) throw ConfigError("synth.n_per_domain must be >= 10");
  if (n_val_per_domain < 1) throw ConfigError("synth.n_val_per_domain must be >= 1");
  if (n_test < 1) throw ConfigError("synth.n_test must be >= 1");
  if (n_features < 1) throw ConfigError("synth.n_features must be >= 1");
  if (noise_std.size() != kTrainDomains + 1) {
    throw ConfigError("synth.noise_std must list 7 values (6 training domains, then the test domain)");
  }
  for (double s : noise_std) {
    if (!(s > 0.0)) throw ConfigError("synth.noise_std values must be positive");
  }
  if (!(train_offset_scale >= 0.0)) throw ConfigError("synth.train_offset_scale must be >= 0");
  if (!(ood_offset_scale > train_offset_scale)) {
    throw ConfigError("synth.ood_offset_scale must exceed train_offset_scale");
  }
  if (!(domain_bias_scale >= 0.0)) throw ConfigError("synth.domain_bias_scale must be >= 0");
}

ingest::TableSchema schema() {
  ingest::TableSchema s;
  s.target = "fact_temperature";
  s.meta_leading = 2;
  s.climate_column = "climate";
  s.time_column = "week_of_year";
  return s;
}

double mean_function(const SynthData& data, std::size_t d, std::span<const double> x) {
  double lin = 0.0;
  double inner = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    lin += data.w[j] * x[j];
    inner += data.w2[j] * x[j];
  }
  const double a = data.manifest.at("config").at("amplitude").get<double>();
  const double b = data.manifest.at("config").at("frequency").get<double>();
  return lin + a * std::sin(b * inner) + data.domains[d].bias;
}

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t p = cfg.n_features;
  SynthData out;

  Rng prng(derive_seed(cfg.seed, {kParams}));
  out.w.resize(p);
  out.w2.resize(p);
  for (auto& v : out.w) v = prng.normal();
  for (auto& v : out.w2) v = prng.normal() / std::sqrt(static_cast<double>(p));

  for (std::size_t d = 0; d <= kTrainDomains; ++d) {
    DomainTruth t;
    t.noise_std = cfg.noise_std[d];
    t.offset.assign(p, 0.0);
    Rng orng(derive_seed(cfg.seed, {kOffsets, d}));
    if (d < kTrainDomains) {
      t.label = std::string(kClimates[d / 2]) + (d % 2 == 0 ? "/Early" : "/Late");
      double norm = 0.0;
      for (auto& v : t.offset) {
        v = orng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : t.offset) v = norm > 0.0 ? cfg.train_offset_scale * v / norm : 0.0;
    } else {
      t.label = std::string(kTestClimate) + "/Test";
      t.offset[0] = cfg.ood_offset_scale;
    }
    t.bias = cfg.domain_bias_scale * orng.normal();
    out.domains.push_back(std::move(t));
  }

  out.manifest["config"] = to_json(cfg);
  out.manifest["w"] = out.w;
  out.manifest["w2"] = out.w2;

  auto make_frame = [&](Part part) {
    std::vector<std::size_t> doms;
    if (part == kTest) {
      doms = {kTrainDomains};
    } else {
      for (std::size_t d = 0; d < kTrainDomains; ++d) doms.push_back(d);
    }
    const std::size_t per = part == kTrain ? cfg.n_per_domain : part == kVal ? cfg.n_val_per_domain : cfg.n_test;
    const std::size_t n = per * doms.size();
    ingest::Frame f;
    f.schema.push_back({"climate", ingest::Role::Climate});
    f.schema.push_back({"week_of_year", ingest::Role::Timestamp});
    for (std::size_t j = 0; j < p; ++j) {
      f.feature_names.push_back("x" + std::to_string(j));
      f.schema.push_back({f.feature_names.back(), ingest::Role::Feature});
    }
    f.schema.push_back({"fact_temperature", ingest::Role::Target});
    f.meta_names = {"climate", "week_of_year"};
    f.meta.assign(2, {});
    f.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    f.target.resize(static_cast<Eigen::Index>(n));
    std::size_t r = 0;
    std::vector<double> x(p);
    for (std::size_t d : doms) {
      const auto& t = out.domains[d];
      Rng rng(derive_seed(cfg.seed, {kRows, part, d}));
      for (std::size_t i = 0; i < per; ++i, ++r) {
        for (std::size_t j = 0; j < p; ++j) {
          x[j] = t.offset[j] + rng.normal();
          f.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = x[j];
        }
        f.target(static_cast<Eigen::Index>(r)) = mean_function(out, d, x) + t.noise_std * rng.normal();
        int week = 0;
        if (part == kTest) {
          week = 20 + static_cast<int>(rng.below(7));
          f.meta[0].push_back(kTestClimate);
        } else {
          week = draw_week(rng, d % 2 == 0);
          f.meta[0].push_back(kClimates[d / 2]);
        }
        f.meta[1].push_back(std::to_string(week));
        f.row_ids.push_back(r);
        f.domain.push_back(t.label);
      }
    }
    return f;
  };
  out.train = make_frame(kTrain);
  out.val = make_frame(kVal);
  out.test = make_frame(kTest);

  auto& doms = out.manifest["domains"];
  doms = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d <= kTrainDomains; ++d) {
    const auto& t = out.domains[d];
    nlohmann::ordered_json j;
    j["label"] = t.label;
    j["offset"] = t.offset;
    j["bias"] = t.bias;
    j["noise_std"] = t.noise_std;
    j["n_train"] = d < kTrainDomains ? cfg.n_per_domain : 0;
    j["n_val"] = d < kTrainDomains ? cfg.n_val_per_domain : 0;
    j["n_test"] = d < kTrainDomains ? 0 : cfg.n_test;
    doms.push_back(std::move(j));
  }
  return out;
}

std::string to_csv(const ingest::Frame& f) {
  std::string out;
  bool first = true;
  for (const auto& c : f.schema) {
    if (!first) out += ',';
    out += csv::escape(c.name);
    first = false;
  }
  out += '\n';
  for (std::size_t r = 0; r < f.n_rows(); ++r) {
    std::size_t fi = 0;
    std::size_t mi = 0;
    first = true;
    for (const auto& c : f.schema) {
      if (!first) out += ',';
      first = false;
      if (c.role == ingest::Role::Feature) {
        out += csv::format_double(f.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(fi++)));
      } else if (c.role == ingest::Role::Target) {
        out += csv::format_double(f.target(static_cast<Eigen::Index>(r)));
      } else {
        out += csv::escape(f.meta[mi++][r]);
      }
    }
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json to_json(const SynthConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["n_per_domain"] = c.n_per_domain;
  j["n_val_per_domain"] = c.n_val_per_domain;
  j["n_test"] = c.n_test;
  j["n_features"] = c.n_features;
  j["train_offset_scale"] = c.train_offset_scale;
  j["ood_offset_scale"] = c.ood_offset_scale;
  j["domain_bias_scale"] = c.domain_bias_scale;
  j["noise_std"] = c.noise_std;
  j["amplitude"] = c.amplitude;
  j["frequency"] = c.frequency;
  return j;
}

}  // namespace shiftreg::synth
