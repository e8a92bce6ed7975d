// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/calibrate.hpp"
#include "shiftreg/common.hpp"
#include "shiftreg/config.hpp"
#include "shiftreg/csv.hpp"
#include "shiftreg/ensemble.hpp"
#include "shiftreg/experiment.hpp"
#include "shiftreg/ingest.hpp"
#include "shiftreg/metrics.hpp"
#include "shiftreg/synth.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace shiftreg;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumerical = 4 };

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto v = csv::parse_double(item);
    if (!v) throw ConfigError(std::string(flag) + ": cannot parse '" + item + "'");
    if constexpr (std::is_integral_v<T>) {
      if (*v < 0 || *v != static_cast<double>(static_cast<T>(*v))) {
        throw ConfigError(std::string(flag) + ": '" + item + "' is not a non-negative integer");
      }
    }
    out.push_back(static_cast<T>(*v));
  }
  if (out.empty()) throw ConfigError(std::string(flag) + ": empty list");
  return out;
}

struct Common {
  std::string config;
  std::string out;
  std::string seeds;
  std::size_t threads = 0;
};

config::ExperimentConfig load_config(const Common& c) {
  if (c.config.empty()) throw ConfigError("--config is required");
  auto cfg = config::load(c.config);
  if (!c.seeds.empty()) cfg.seeds = parse_list<std::uint64_t>(c.seeds, "--seed");
  if (c.threads > 0) cfg.threads = c.threads;
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void add_common(CLI::App* sub, Common& c, bool needs_config = true) {
  auto* opt = sub->add_option("--config", c.config, "Experiment config (JSON)");
  if (needs_config) opt->required();
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--seed", c.seeds, "Comma-separated seed list (overrides the config)");
  sub->add_option("--threads", c.threads, "Parallel trainings");
}

std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out_path, text);
  }
}

int run_main(int argc, char** argv) {
  CLI::App app{"shiftreg: probabilistic tabular regression under distribution shift"};
  app.require_subcommand(1);

  Common gen_c;
  auto* gen = app.add_subcommand("gen-synth", "Generate the synthetic shifted benchmark as CSV files");
  add_common(gen, gen_c, false);

  Common split_c;
  auto* split = app.add_subcommand("split", "Split data into environments and write the manifest");
  add_common(split, split_c);

  Common train_c;
  std::string train_model;
  auto* train = app.add_subcommand("train", "Train the domain experts and the pooled model");
  add_common(train, train_c);
  train->add_option("--model", train_model, "Train only this model (e.g. T_ALL, T_E3)");

  Common pred_c;
  std::string pred_weights, pred_scalers, pred_data;
  auto* predict = app.add_subcommand("predict", "Predict a CSV with a trained checkpoint");
  add_common(predict, pred_c, false);
  predict->add_option("--weights", pred_weights, "Checkpoint JSON")->required();
  predict->add_option("--scalers", pred_scalers, "Scaler JSON")->required();
  predict->add_option("--data", pred_data, "Input CSV")->required();

  Common cal_c;
  std::string cal_file, cal_apply, cal_pool_out;
  bool cal_total = false;
  std::size_t cal_min = 10;
  auto* calib = app.add_subcommand("calibrate", "Fit a CRUDE z-score pool, optionally apply it");
  add_common(calib, cal_c, false);
  calib->add_option("--cal", cal_file, "Calibration prediction file")->required();
  calib->add_option("--apply", cal_apply, "Prediction file to calibrate");
  calib->add_option("--pool-out", cal_pool_out, "Where to write the pool JSON");
  calib->add_flag("--total-variance", cal_total, "z-scores from total instead of aleatoric variance");
  calib->add_option("--min-points", cal_min, "Minimum calibration rows");

  Common ens_c;
  std::vector<std::string> ens_inputs;
  std::string ens_mode = "inverse_variance";
  bool ens_alea = false;
  auto* ens = app.add_subcommand("ensemble", "Combine aligned prediction files");
  add_common(ens, ens_c, false);
  ens->add_option("--inputs", ens_inputs, "Prediction files")->required()->expected(1, -1);
  ens->add_option("--mode", ens_mode, "inverse_variance or seed_aggregate")
      ->check(CLI::IsMember({"inverse_variance", "seed_aggregate"}));
  ens->add_flag("--aleatoric-only", ens_alea, "Weight by aleatoric variance only");

  Common ev_c;
  std::string ev_pred, ev_pool, ev_cal, ev_ood, ev_id, ev_curves;
  auto* eval = app.add_subcommand("evaluate", "Score a prediction file");
  add_common(eval, ev_c, false);
  eval->add_option("--pred", ev_pred, "Prediction file")->required();
  eval->add_option("--pool", ev_pool, "Calibrate first with this pool JSON");
  eval->add_option("--cal", ev_cal, "Calibrate first with a pool fitted on this prediction file");
  eval->add_option("--ood", ev_ood, "Out-of-distribution prediction file (for ROC-AUC)");
  eval->add_option("--id", ev_id, "In-distribution prediction file (for ROC-AUC; default --pred)");
  eval->add_option("--curves", ev_curves, "Write retention curves CSV here");

  Common run_c;
  auto* run = app.add_subcommand("run", "Run the full experiment");
  add_common(run, run_c);

  Common sw_c;
  std::string sw_grid;
  auto* sweep = app.add_subcommand("sweep-moex", "Sweep the MoEx probability on the pooled model");
  add_common(sweep, sw_c);
  sweep->add_option("--p-grid", sw_grid, "Comma-separated p values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (gen->parsed()) {
    synth::SynthConfig sc;
    if (!gen_c.config.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(gen_c.config));
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
      }
      // Accept a full experiment config or a bare synth section.
      if (j.contains("data")) {
        auto cfg = config::parse(j, fs::path(gen_c.config).parent_path());
        if (!cfg.synth) throw ConfigError("gen-synth: config has no data.synth section");
        sc = *cfg.synth;
      } else {
        sc = config::parse_synth(j);
      }
    }
    if (!gen_c.seeds.empty()) sc.seed = parse_list<std::uint64_t>(gen_c.seeds, "--seed").front();
    const fs::path out = gen_c.out.empty() ? fs::path("synth") : fs::path(gen_c.out);
    const auto data = synth::generate(sc);
    write_file_atomic(out / "train.csv", synth::to_csv(data.train));
    write_file_atomic(out / "val.csv", synth::to_csv(data.val));
    write_file_atomic(out / "test.csv", synth::to_csv(data.test));
    write_file_atomic(out / "manifest.json", json_text(data.manifest));
    return kOk;
  }
  if (split->parsed()) {
    const auto cfg = load_config(split_c);
    experiment::write_split(cfg, cfg.output_dir);
    return kOk;
  }
  if (train->parsed()) {
    const auto cfg = load_config(train_c);
    experiment::train_only(cfg, cfg.output_dir,
                           train_model.empty() ? std::nullopt : std::optional<std::string>(train_model));
    return kOk;
  }
  if (predict->parsed()) {
    config::ExperimentConfig cfg;
    if (!pred_c.config.empty()) {
      cfg = load_config(pred_c);
    } else {
      cfg.synth = synth::SynthConfig{};
    }
    emit(pred_c.out, experiment::predict_csv(cfg, pred_weights, pred_scalers, pred_data));
    return kOk;
  }
  if (calib->parsed()) {
    calibrate::FitOptions fo;
    fo.use_total_variance = cal_total;
    fo.min_points = cal_min;
    const auto cal = ingest::load_external_predictions(cal_file);
    const auto pool = calibrate::crude_fit(cal.summaries, cal.targets, fs::path(cal_file).filename().string(), fo);
    if (!cal_pool_out.empty()) write_file_atomic(cal_pool_out, json_text(calibrate::to_json(pool)));
    if (!cal_apply.empty()) {
      const auto p = ingest::load_external_predictions(cal_apply);
      std::vector<PredictiveSummary> out;
      for (const auto& c : calibrate::crude_apply(p.summaries, pool, fo)) out.push_back(calibrate::to_summary(c));
      emit(cal_c.out, ingest::format_predictions_csv(out, p.targets, p.domains));
    } else if (cal_pool_out.empty()) {
      emit(cal_c.out, json_text(calibrate::to_json(pool)));
    }
    return kOk;
  }
  if (ens->parsed()) {
    ensemble::Members members;
    ingest::ExternalPredictions first;
    for (std::size_t i = 0; i < ens_inputs.size(); ++i) {
      auto p = ingest::load_external_predictions(ens_inputs[i]);
      if (i == 0) {
        first = p;
      } else if (p.targets != first.targets) {
        throw DataError("ensemble: '" + ens_inputs[i] + "' is not aligned with '" + ens_inputs[0] + "'");
      }
      members.push_back(std::move(p.summaries));
    }
    std::vector<PredictiveSummary> out;
    if (ens_mode == "seed_aggregate") {
      out = ensemble::seed_aggregate(members);
    } else {
      ensemble::InverseVarianceOptions o;
      o.aleatoric_only = ens_alea;
      out = ensemble::inverse_variance_combine(members, o);
    }
    emit(ens_c.out, ingest::format_predictions_csv(out, first.targets, first.domains));
    return kOk;
  }
  if (eval->parsed()) {
    metrics::MetricsConfig mc;
    if (!ev_c.config.empty()) mc = load_config(ev_c).metrics;
    const auto p = ingest::load_external_predictions(ev_pred);
    std::optional<calibrate::ZPool> pool;
    if (!ev_pool.empty() && !ev_cal.empty()) throw ConfigError("evaluate: use --pool or --cal, not both");
    if (!ev_pool.empty()) {
      try {
        pool = calibrate::pool_from_json(nlohmann::json::parse(read_file(ev_pool)));
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("evaluate: invalid pool JSON: ") + e.what());
      }
    } else if (!ev_cal.empty()) {
      const auto c = ingest::load_external_predictions(ev_cal);
      pool = calibrate::crude_fit(c.summaries, c.targets, fs::path(ev_cal).filename().string());
    }
    std::vector<calibrate::CalibratedSummary> cal;
    metrics::PredictionSet set = metrics::PredictionSet::gaussian(p.summaries, mc.nll_total_variance);
    if (pool) {
      cal = calibrate::crude_apply(p.summaries, *pool);
      set = metrics::PredictionSet::calibrated(cal);
    }
    auto report = metrics::full_report(set, p.targets, mc);
    if (!ev_ood.empty()) {
      const auto ood = ingest::load_external_predictions(ev_ood);
      const auto id = ev_id.empty() ? p : ingest::load_external_predictions(ev_id);
      const auto id_scores = metrics::PredictionSet::gaussian(id.summaries).uncertainties(mc.score);
      const auto ood_scores = metrics::PredictionSet::gaussian(ood.summaries).uncertainties(mc.score);
      report.roc_auc_ood = metrics::roc_auc_ood(id_scores, ood_scores);
    }
    nlohmann::ordered_json j;
    j["predictions"] = fs::path(ev_pred).filename().string();
    j["calibration"] = pool ? nlohmann::ordered_json(pool->source) : nlohmann::ordered_json("none");
    j["metrics"] = metrics::to_json(report);
    if (!ev_curves.empty()) write_file_atomic(ev_curves, metrics::curves_csv(report));
    emit(ev_c.out, json_text(j));
    return kOk;
  }
  if (run->parsed()) {
    const auto cfg = load_config(run_c);
    experiment::run_experiment(cfg, cfg.output_dir);
    return kOk;
  }
  if (sweep->parsed()) {
    auto cfg = load_config(sw_c);
    if (!sw_grid.empty()) cfg.p_grid = parse_list<double>(sw_grid, "--p-grid");
    experiment::sweep_moex(cfg, cfg.p_grid, cfg.output_dir);
    return kOk;
  }
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
