// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/experiment.hpp"

#include "shiftreg/csv.hpp"
#include "shiftreg/ensemble.hpp"
#include "shiftreg/rng.hpp"
#include "shiftreg/synth.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace shiftreg::experiment {

namespace fs = std::filesystem;
using config::CalibrationMode;
using config::ExperimentConfig;

namespace {

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::vector<double> targets_of(const ingest::Frame& f) {
  return {f.target.data(), f.target.data() + f.target.size()};
}


ingest::EnvironmentSplit drop_all_meta(const ingest::EnvironmentSplit& s) {
  ingest::EnvironmentSplit out;
  out.labels = s.labels;
  for (const auto& f : s.train) out.train.push_back(ingest::drop_meta(f));
  for (const auto& f : s.val) out.val.push_back(ingest::drop_meta(f));
  out.train_all = ingest::drop_meta(s.train_all);
  out.val_all = ingest::drop_meta(s.val_all);
  out.test = ingest::drop_meta(s.test);
  return out;
}

ingest::EnvironmentSplit scale_all(const ingest::EnvironmentSplit& s, const ingest::ScalerParams& p) {
  ingest::EnvironmentSplit out;
  out.labels = s.labels;
  for (const auto& f : s.train) out.train.push_back(ingest::transform(f, p));
  for (const auto& f : s.val) out.val.push_back(ingest::transform(f, p));
  out.train_all = ingest::transform(s.train_all, p);
  out.val_all = ingest::transform(s.val_all, p);
  out.test = ingest::transform(s.test, p);
  return out;
}

metrics::PredictionSet raw_set(std::span<const PredictiveSummary> s, const ExperimentConfig& cfg) {
  return metrics::PredictionSet::gaussian(s, cfg.metrics.nll_total_variance);
}

calibrate::FitOptions fit_options(const ExperimentConfig& cfg) {
  calibrate::FitOptions o;
  o.use_total_variance = cfg.calibration.use_total_variance;
  o.min_points = cfg.calibration.min_points;
  return o;
}

nlohmann::ordered_json report_json(const ReportRow& r, const std::string& hash) {
  nlohmann::ordered_json j;
  j["cell"] = r.cell;
  j["variant"] = r.variant;
  j["config_hash"] = hash;
  j["provenance"] = r.provenance;
  j["metrics"] = metrics::to_json(r.report);
  return j;
}

std::string predictions_csv(const ReportRow& r, const Data& d) {
  return ingest::format_predictions_csv(r.predictions, targets_of(d.raw.test), d.raw.test.domain);
}

struct Trained {
  ModelSpec spec;
  std::uint64_t seed = 0;
  optim::TrainResult result;
  const ingest::ScalerParams* scalers = nullptr;
};

std::vector<Trained> train_models(const ExperimentConfig& cfg, const Data& data,
                                  const std::vector<ModelSpec>& specs, double p) {
  std::vector<Trained> jobs;
  for (const auto& s : specs) {
    for (auto seed : cfg.seeds) jobs.push_back({s, seed, {}, &model_scalers(data, s)});
  }
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    jobs[i].result = train_model(cfg, data, jobs[i].spec, jobs[i].seed, p);
  });
  return jobs;
}

nlohmann::ordered_json train_summary(const Trained& t) {
  nlohmann::ordered_json j;
  j["model"] = t.spec.name;
  j["seed"] = t.seed;
  j["epochs"] = t.result.log.size();
  j["chosen"] = t.result.chosen;
  j["best_val_nll"] = t.result.best_val_nll;
  j["swa_val_nll"] = t.result.swa_val_nll;
  j["final_val_nll"] = t.result.final_val_nll;
  j["train_targets_clamped"] = t.result.train_clamped;
  j["val_targets_clamped"] = t.result.val_clamped;
  j["diverged"] = t.result.diverged;
  return j;
}

std::string model_file(const Trained& t) { return t.spec.name + "_seed" + std::to_string(t.seed); }

void write_models(const std::vector<Trained>& models, const fs::path& dir) {
  for (const auto& t : models) {
    write_file_atomic(dir / (model_file(t) + ".weights.json"), network::to_json(t.result.weights).dump() + "\n");
    write_file_atomic(dir / (model_file(t) + ".log.jsonl"), optim::log_jsonl(t.result.log));
    write_file_atomic(dir / (t.spec.name + ".scalers.json"), dump(ingest::to_json(*t.scalers)));
  }
}

// Seed-aggregated predictions per model, in model order.
std::vector<ModelPredictions> predictions_by_spec(const std::vector<Trained>& models,
                                                  const std::vector<ModelSpec>& specs, const Data& data,
                                                  std::size_t threads) {
  std::vector<ModelPredictions> per_job(models.size());
  parallel_for(models.size(), threads, [&](std::size_t i) { per_job[i] = predict_all(models[i].result.weights, data, *models[i].scalers); });
  std::vector<ModelPredictions> out;
  for (const auto& s : specs) {
    std::vector<ModelPredictions> seeds;
    for (std::size_t i = 0; i < models.size(); ++i) {
      if (models[i].spec.name == s.name) seeds.push_back(per_job[i]);
    }
    out.push_back(aggregate_seeds(seeds));
  }
  return out;
}

ReportRow make_row(std::string cell, std::string variant, const metrics::PredictionSet& set,
                   std::vector<PredictiveSummary> preds, const Data& data, const ExperimentConfig& cfg,
                   nlohmann::ordered_json provenance, const std::vector<double>* ood_id_scores = nullptr) {
  const auto y = targets_of(data.raw.test);
  ReportRow r;
  r.cell = std::move(cell);
  r.variant = std::move(variant);
  if (ood_id_scores != nullptr) {
    // ID scores come from the validation pool; TEST is the shifted side.
    const auto test_scores = set.uncertainties(cfg.metrics.score);
    r.report = metrics::full_report(set, y, cfg.metrics);
    r.report.roc_auc_ood = metrics::roc_auc_ood(*ood_id_scores, test_scores);
  } else {
    r.report = metrics::full_report(set, y, cfg.metrics);
  }
  r.provenance = std::move(provenance);
  r.predictions = std::move(preds);
  return r;
}

std::vector<double> scores_of(std::span<const PredictiveSummary> s, const ExperimentConfig& cfg) {
  return raw_set(s, cfg).uncertainties(cfg.metrics.score);
}

std::vector<double> calibrated_scores(const std::vector<calibrate::CalibratedSummary>& c, const ExperimentConfig& cfg) {
  return metrics::PredictionSet::calibrated(c).uncertainties(cfg.metrics.score);
}

nlohmann::ordered_json seeds_json(const ExperimentConfig& cfg) { return cfg.seeds; }

void mark_failed(const fs::path& out_dir, const std::string& what) {
  try {
    write_file_atomic(out_dir / "FAILED", what + "\n");
  } catch (...) {
  }
}

void write_rows(const std::vector<ReportRow>& rows, const Data& data, const fs::path& out_dir,
                const std::string& hash) {
  for (const auto& r : rows) {
    const std::string stem = r.cell + "_" + r.variant;
    write_file_atomic(out_dir / "reports" / (stem + ".json"), dump(report_json(r, hash)));
    write_file_atomic(out_dir / "curves" / (stem + ".csv"), metrics::curves_csv(r.report));
    write_file_atomic(out_dir / "predictions" / (stem + ".csv"), predictions_csv(r, data));
  }
}

}  // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        {
          std::lock_guard lock(mu);
          if (error) return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

Data prepare(const ExperimentConfig& cfg) {
  Data d;
  ingest::Frame train, val, test;
  if (cfg.synth) {
    auto s = synth::generate(*cfg.synth);
    train = std::move(s.train);
    val = std::move(s.val);
    test = std::move(s.test);
    d.synth_manifest = std::move(s.manifest);
  } else {
    ingest::LoadOptions o;
    o.schema = cfg.csv->schema;
    o.delimiter = cfg.csv->delimiter;
    o.missing = cfg.csv->missing;
    auto a = ingest::load_table(cfg.csv->train, o);
    auto b = ingest::load_table(cfg.csv->val, o);
    auto c = ingest::load_table(cfg.csv->test, o);
    d.dropped_rows = a.dropped_rows + b.dropped_rows + c.dropped_rows;
    train = std::move(a.frame);
    val = std::move(b.frame);
    test = std::move(c.frame);
  }
  if (test.domain.empty() || test.domain.front().empty()) {
    test.domain.assign(test.n_rows(), "TEST");
  }
  const auto split = ingest::make_environment_split(train, val, std::move(test), cfg.split);
  d.split_manifest = ingest::split_manifest(split);
  d.raw = drop_all_meta(split);
  d.scalers = ingest::fit_scalers(d.raw.train_all, cfg.target_lo, cfg.target_hi);
  d.scaled = scale_all(d.raw, d.scalers);
  for (const auto& f : d.raw.train) d.env_scalers.push_back(ingest::fit_scalers(f, cfg.target_lo, cfg.target_hi));
  return d;
}

std::vector<ModelSpec> model_specs(const ExperimentConfig& cfg, std::size_t n_env) {
  std::vector<ModelSpec> out;
  if (cfg.train_experts) {
    for (std::size_t e = 0; e < n_env; ++e) out.push_back({"T_E" + std::to_string(e + 1), e, e});
  }
  out.push_back({"T_ALL", std::nullopt, n_env});
  return out;
}

const ingest::ScalerParams& model_scalers(const Data& data, const ModelSpec& spec) {
  return spec.env ? data.env_scalers.at(*spec.env) : data.scalers;
}

optim::TrainResult train_model(const ExperimentConfig& cfg, const Data& data, const ModelSpec& spec,
                               std::uint64_t seed, double moex_p) {
  network::NetworkConfig net = cfg.network;
  net.input_dim = data.scaled.train_all.n_features();
  net.seed = derive_seed(seed, {spec.index, 1});
  optim::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(seed, {spec.index, 2});
  augment::MoExConfig mc = cfg.moex;
  mc.p = moex_p;
  mc.seed = derive_seed(seed, {spec.index, 3});
  if (mc.p > 0.0 && net.input_dim < 2) {
    throw ConfigError("moex needs at least 2 features when p > 0");
  }
  if (!spec.env) return optim::train(net, data.scaled.train_all, data.scaled.val_all, tc, &mc);
  const auto& sc = model_scalers(data, spec);
  return optim::train(net, ingest::transform(data.raw.train[*spec.env], sc),
                      ingest::transform(data.raw.val[*spec.env], sc), tc, &mc);
}

ModelPredictions predict_all(const network::Weights& w, const Data& d, const ingest::ScalerParams& sc) {
  auto run = [&](const ingest::Frame& raw) { return network::predict(w, ingest::transform(raw, sc).features, sc); };
  ModelPredictions p;
  p.test = run(d.raw.test);
  p.val_all = run(d.raw.val_all);
  for (const auto& f : d.raw.val) p.val_env.push_back(run(f));
  return p;
}

ModelPredictions aggregate_seeds(const std::vector<ModelPredictions>& per_seed) {
  if (per_seed.empty()) throw Error("aggregate_seeds: no members");
  if (per_seed.size() == 1) return per_seed.front();
  auto agg = [&](auto pick) {
    ensemble::Members m;
    for (const auto& s : per_seed) m.push_back(pick(s));
    return ensemble::seed_aggregate(m);
  };
  ModelPredictions out;
  out.test = agg([](const ModelPredictions& s) { return s.test; });
  out.val_all = agg([](const ModelPredictions& s) { return s.val_all; });
  for (std::size_t e = 0; e < per_seed.front().val_env.size(); ++e) {
    out.val_env.push_back(agg([e](const ModelPredictions& s) { return s.val_env[e]; }));
  }
  return out;
}

RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  try {
    fs::create_directories(out_dir);
    fs::remove(out_dir / "FAILED");
    const std::string hash = config::config_hash(cfg);
    const Data data = prepare(cfg);
    const std::size_t n_env = data.raw.labels.size();
    write_file_atomic(out_dir / "split_manifest.json", dump(data.split_manifest));
    write_file_atomic(out_dir / "scalers.json", dump(ingest::to_json(data.scalers)));
    if (!data.synth_manifest.is_null()) {
      write_file_atomic(out_dir / "synth_manifest.json", dump(data.synth_manifest));
    }

    const auto specs = model_specs(cfg, n_env);
    const auto models = train_models(cfg, data, specs, cfg.moex.p);
    write_models(models, out_dir / "models");
    const auto preds = predictions_by_spec(models, specs, data, cfg.threads);

    const bool calibrated = cfg.calibration.mode != CalibrationMode::None;
    const auto fo = fit_options(cfg);
    std::vector<ReportRow> rows;
    std::vector<calibrate::ZPool> expert_pools;
    std::vector<std::vector<calibrate::CalibratedSummary>> expert_cal;
    std::vector<std::vector<calibrate::CalibratedSummary>> expert_val_cal;
    nlohmann::ordered_json pools_json = nlohmann::ordered_json::object();

    auto prov = [&](const std::string& training_set, const std::string& calib) {
      nlohmann::ordered_json j;
      j["training_set"] = training_set;
      j["seeds"] = seeds_json(cfg);
      j["calibration"] = calib;
      return j;
    };

    // Domain experts.
    expert_pools.reserve(n_env);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      if (!specs[s].env) continue;
      const auto e = *specs[s].env;
      const auto& p = preds[s];
      const auto id_scores = scores_of(p.val_all, cfg);
      rows.push_back(make_row(specs[s].name, "raw", raw_set(p.test, cfg), p.test, data, cfg,
                              prov(specs[s].name, "none"), &id_scores));
      if (calibrated) {
        const std::string src = "V_E" + std::to_string(e + 1);
        expert_pools.push_back(calibrate::crude_fit(p.val_env[e], targets_of(data.raw.val[e]), src, fo));
        pools_json[specs[s].name] = src;
        write_file_atomic(out_dir / "pools" / (specs[s].name + ".zpool.json"),
                          dump(calibrate::to_json(expert_pools.back())));
        expert_cal.push_back(calibrate::crude_apply(p.test, expert_pools.back(), fo));
        std::vector<PredictiveSummary> cs;
        for (const auto& c : expert_cal.back()) cs.push_back(calibrate::to_summary(c));
        expert_val_cal.push_back(calibrate::crude_apply(p.val_all, expert_pools.back(), fo));
        const auto cal_id = calibrated_scores(expert_val_cal.back(), cfg);
        auto row_prov = prov(specs[s].name, "crude");
        row_prov["pool_source"] = src;
        rows.push_back(make_row(specs[s].name, "calibrated", metrics::PredictionSet::calibrated(expert_cal.back()),
                                std::move(cs), data, cfg, std::move(row_prov), &cal_id));
      }
    }

    // Inverse-variance combination of the experts.
    if (cfg.train_experts && cfg.ensemble.inverse_variance) {
      ensemble::Members test_m, val_m;
      for (std::size_t s = 0; s < specs.size(); ++s) {
        if (!specs[s].env) continue;
        test_m.push_back(preds[s].test);
        val_m.push_back(preds[s].val_all);
      }
      ensemble::InverseVarianceOptions io;
      io.aleatoric_only = cfg.ensemble.aleatoric_only;
      const auto iv = ensemble::inverse_variance_combine(test_m, io);
      const auto iv_val = ensemble::inverse_variance_combine(val_m, io);
      const auto id_scores = scores_of(iv_val, cfg);
      auto p = prov("T_E1..T_E" + std::to_string(n_env), "none");
      p["combination"] = "inverse_variance";
      rows.push_back(make_row("IV", "raw", raw_set(iv, cfg), iv, data, cfg, p, &id_scores));
      if (calibrated) {
        const auto ivc = ensemble::inverse_variance_combine_calibrated(expert_cal);
        const auto ivc_id = scores_of(ensemble::inverse_variance_combine_calibrated(expert_val_cal), cfg);
        p["calibration"] = "crude";
        p["pool_source"] = "per-expert V_Ei";
        rows.push_back(make_row("IV", "calibrated", raw_set(ivc, cfg), ivc, data, cfg, p, &ivc_id));
      }
    }

    // Pooled model.
    nlohmann::ordered_json robust_json;
    {
      const std::size_t s = specs.size() - 1;
      const auto& p = preds[s];
      const auto id_scores = scores_of(p.val_all, cfg);
      rows.push_back(make_row("T_ALL", "raw", raw_set(p.test, cfg), p.test, data, cfg, prov("T_ALL", "none"),
                              &id_scores));
      if (calibrated) {
        const auto pool = calibrate::crude_fit(p.val_all, targets_of(data.raw.val_all), "V_ALL", fo);
        pools_json["T_ALL"] = "V_ALL";
        write_file_atomic(out_dir / "pools" / "T_ALL.zpool.json", dump(calibrate::to_json(pool)));
        const auto cal = calibrate::crude_apply(p.test, pool, fo);
        std::vector<PredictiveSummary> cs;
        for (const auto& c : cal) cs.push_back(calibrate::to_summary(c));
        const auto cal_id = calibrated_scores(calibrate::crude_apply(p.val_all, pool, fo), cfg);
        auto rp = prov("T_ALL", "crude");
        rp["pool_source"] = "V_ALL";
        rows.push_back(make_row("T_ALL", "calibrated", metrics::PredictionSet::calibrated(cal), std::move(cs), data,
                                cfg, std::move(rp), &cal_id));
      }
      if (cfg.calibration.mode == CalibrationMode::Robust) {
        std::vector<calibrate::Candidate> cands;
        for (std::size_t e = 0; e < n_env; ++e) {
          cands.push_back({p.val_env[e], targets_of(data.raw.val[e]), "V_E" + std::to_string(e + 1)});
        }
        const auto sel = calibrate::robust_select(cands, fo);
        write_file_atomic(out_dir / "pools" / "T_ALL_robust.zpool.json", dump(calibrate::to_json(sel.pool)));
        const auto cal = calibrate::crude_apply(p.test, sel.pool, fo);
        std::vector<PredictiveSummary> cs;
        for (const auto& c : cal) cs.push_back(calibrate::to_summary(c));
        auto rp = prov("T_ALL", "robust");
        rp["pool_source"] = sel.pool.source;
        rp["selected_index"] = sel.index + 1;
        rp["candidate_nll"] = sel.nll;
        robust_json = rp;
        const auto cal_id = calibrated_scores(calibrate::crude_apply(p.val_all, sel.pool, fo), cfg);
        rows.push_back(make_row("T_ALL", "robust", metrics::PredictionSet::calibrated(cal), std::move(cs), data,
                                cfg, std::move(rp), &cal_id));
      }
    }

    write_rows(rows, data, out_dir, hash);
    write_file_atomic(out_dir / "summary.csv", summary_csv(rows));

    RunResult result;
    auto& m = result.manifest;
    m["command"] = "run";
    m["config_hash"] = hash;
    m["config"] = config::to_json(cfg);
    m["config"].erase("output_dir");
    m["config"].erase("threads");
    m["seeds"] = seeds_json(cfg);
    m["environments"] = data.raw.labels;
    m["dropped_rows"] = data.dropped_rows;
    m["models"] = nlohmann::ordered_json::array();
    for (const auto& t : models) m["models"].push_back(train_summary(t));
    m["pools"] = pools_json;
    if (!robust_json.is_null()) m["robust_selection"] = robust_json;
    m["reports"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) m["reports"].push_back(r.cell + "_" + r.variant);
    m["status"] = "ok";
    write_file_atomic(out_dir / "manifest.json", dump(m));
    result.rows = std::move(rows);
    return result;
  } catch (const std::exception& e) {
    mark_failed(out_dir, e.what());
    throw;
  }
}

SweepResult sweep_moex(const ExperimentConfig& cfg, std::span<const double> p_grid, const fs::path& out_dir) {
  try {
    if (p_grid.empty()) throw ConfigError("sweep-moex: empty p grid");
    for (double p : p_grid) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sweep-moex: p values must lie in [0, 1]");
    }
    fs::create_directories(out_dir);
    fs::remove(out_dir / "FAILED");
    const std::string hash = config::config_hash(cfg);
    const Data data = prepare(cfg);
    const std::size_t n_env = data.raw.labels.size();
    const ModelSpec pooled{"T_ALL", std::nullopt, n_env};
    const auto fo = fit_options(cfg);

    // One job per (p, seed); every p reuses the same seeds.
    struct Job {
      std::size_t pi;
      std::uint64_t seed;
      optim::TrainResult result;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
      for (auto s : cfg.seeds) jobs.push_back({i, s, {}});
    }
    parallel_for(jobs.size(), cfg.threads,
                 [&](std::size_t i) { jobs[i].result = train_model(cfg, data, pooled, jobs[i].seed, p_grid[jobs[i].pi]); });

    SweepResult out;
    out.p_values.assign(p_grid.begin(), p_grid.end());
    nlohmann::ordered_json m;
    m["command"] = "sweep-moex";
    m["config_hash"] = hash;
    m["p_grid"] = out.p_values;
    m["models"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
      std::vector<ModelPredictions> seeds;
      for (const auto& j : jobs) {
        if (j.pi != i) continue;
        seeds.push_back(predict_all(j.result.weights, data, data.scalers));
        auto ts = train_summary({pooled, j.seed, j.result, &data.scalers});
        ts["p"] = p_grid[i];
        m["models"].push_back(std::move(ts));
      }
      const auto p = aggregate_seeds(seeds);
      const std::string cell = "p=" + csv::format_double(p_grid[i]);
      auto prov = [&](const std::string& calib) {
        nlohmann::ordered_json j;
        j["training_set"] = "T_ALL";
        j["p"] = p_grid[i];
        j["seeds"] = seeds_json(cfg);
        j["calibration"] = calib;
        return j;
      };
      out.rows.push_back(make_row(cell, "raw", raw_set(p.test, cfg), p.test, data, cfg, prov("none")));

      const auto pool = calibrate::crude_fit(p.val_all, targets_of(data.raw.val_all), "V_ALL", fo);
      const auto cal = calibrate::crude_apply(p.test, pool, fo);
      std::vector<PredictiveSummary> cs;
      for (const auto& c : cal) cs.push_back(calibrate::to_summary(c));
      auto cp = prov("crude");
      cp["pool_source"] = "V_ALL";
      out.rows.push_back(make_row(cell, "calibrated", metrics::PredictionSet::calibrated(cal), std::move(cs), data,
                                  cfg, std::move(cp)));

      std::vector<calibrate::Candidate> cands;
      for (std::size_t e = 0; e < n_env; ++e) {
        cands.push_back({p.val_env[e], targets_of(data.raw.val[e]), "V_E" + std::to_string(e + 1)});
      }
      const auto sel = calibrate::robust_select(cands, fo);
      const auto rcal = calibrate::crude_apply(p.test, sel.pool, fo);
      std::vector<PredictiveSummary> rs;
      for (const auto& c : rcal) rs.push_back(calibrate::to_summary(c));
      auto rp = prov("robust");
      rp["pool_source"] = sel.pool.source;
      rp["selected_index"] = sel.index + 1;
      out.rows.push_back(make_row(cell, "robust", metrics::PredictionSet::calibrated(rcal), std::move(rs), data, cfg,
                                  std::move(rp)));
    }

    std::string csvtext = "p,variant,mae,rmse,be,is,ace,nll\n";
    auto rows_json = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
      const auto& r = out.rows[i];
      const double p = p_grid[i / 3];
      csvtext += csv::format_double(p) + ',' + r.variant + ',' + csv::format_double(r.report.mae) + ',' +
                 csv::format_double(r.report.rmse) + ',' + csv::format_double(r.report.be) + ',' +
                 csv::format_double(r.report.is) + ',' + csv::format_double(r.report.ace) + ',' +
                 csv::format_double(r.report.nll) + '\n';
      rows_json.push_back(report_json(r, hash));
    }
    out.csv = csvtext;
    nlohmann::ordered_json report;
    report["config_hash"] = hash;
    report["rows"] = std::move(rows_json);
    write_file_atomic(out_dir / "sweep.csv", out.csv);
    write_file_atomic(out_dir / "sweep.json", dump(report));
    m["status"] = "ok";
    write_file_atomic(out_dir / "manifest.json", dump(m));
    return out;
  } catch (const std::exception& e) {
    mark_failed(out_dir, e.what());
    throw;
  }
}

void write_split(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const Data data = prepare(cfg);
  write_file_atomic(out_dir / "split_manifest.json", dump(data.split_manifest));
  write_file_atomic(out_dir / "scalers.json", dump(ingest::to_json(data.scalers)));
  auto frame_csv = [](const ingest::Frame& f) {
    std::string out;
    for (std::size_t j = 0; j < f.feature_names.size(); ++j) out += csv::escape(f.feature_names[j]) + ',';
    out += "target,domain\n";
    for (Eigen::Index i = 0; i < f.features.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.features.cols(); ++j) out += csv::format_double(f.features(i, j)) + ',';
      out += csv::format_double(f.target(i)) + ',' + csv::escape(f.domain[static_cast<std::size_t>(i)]) + '\n';
    }
    return out;
  };
  for (std::size_t e = 0; e < data.raw.labels.size(); ++e) {
    write_file_atomic(out_dir / ("T_E" + std::to_string(e + 1) + ".csv"), frame_csv(data.raw.train[e]));
    write_file_atomic(out_dir / ("V_E" + std::to_string(e + 1) + ".csv"), frame_csv(data.raw.val[e]));
  }
  write_file_atomic(out_dir / "T_ALL.csv", frame_csv(data.raw.train_all));
  write_file_atomic(out_dir / "V_ALL.csv", frame_csv(data.raw.val_all));
  write_file_atomic(out_dir / "TEST.csv", frame_csv(data.raw.test));
}

void train_only(const ExperimentConfig& cfg, const fs::path& out_dir, const std::optional<std::string>& model) {
  const Data data = prepare(cfg);
  auto specs = model_specs(cfg, data.raw.labels.size());
  if (model) {
    std::erase_if(specs, [&](const ModelSpec& s) { return s.name != *model; });
    if (specs.empty()) throw ConfigError("train: unknown model '" + *model + "'");
  }
  const auto models = train_models(cfg, data, specs, cfg.moex.p);
  write_models(models, out_dir / "models");
  write_file_atomic(out_dir / "scalers.json", dump(ingest::to_json(data.scalers)));
  nlohmann::ordered_json m;
  m["command"] = "train";
  m["config_hash"] = config::config_hash(cfg);
  m["models"] = nlohmann::ordered_json::array();
  for (const auto& t : models) {
    auto s = train_summary(t);
    s["weights"] = "models/" + model_file(t) + ".weights.json";
    s["scalers"] = "models/" + t.spec.name + ".scalers.json";
    m["models"].push_back(std::move(s));
  }
  write_file_atomic(out_dir / "train_manifest.json", dump(m));
}

std::string predict_csv(const ExperimentConfig& cfg, const fs::path& weights, const fs::path& scalers,
                        const fs::path& data_path) {
  nlohmann::json wj, sj;
  try {
    wj = nlohmann::json::parse(read_file(weights));
    sj = nlohmann::json::parse(read_file(scalers));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("predict: invalid JSON: ") + e.what());
  }
  const auto w = network::weights_from_json(wj);
  const auto sc = ingest::scalers_from_json(sj);
  ingest::LoadOptions o;
  if (cfg.csv) {
    o.schema = cfg.csv->schema;
    o.delimiter = cfg.csv->delimiter;
    o.missing = cfg.csv->missing;
  } else {
    o.schema = synth::schema();
  }
  auto loaded = ingest::load_table(data_path, o);
  const auto raw = ingest::drop_meta(loaded.frame);
  const auto scaled = ingest::transform(raw, sc);
  const auto preds = network::predict(w, scaled.features, sc);
  return ingest::format_predictions_csv(preds, targets_of(raw));
}

std::string summary_csv(const std::vector<ReportRow>& rows) {
  std::string out = "cell,variant,mae,rmse,be,is,ace,nll,r_auc,f1_auc,f1_at_95,roc_auc_ood\n";
  for (const auto& r : rows) {
    const auto& m = r.report;
    out += csv::escape(r.cell) + ',' + r.variant;
    for (double v : {m.mae, m.rmse, m.be, m.is, m.ace, m.nll, m.r_auc, m.f1_auc, m.f1_at_95}) {
      out += ',' + csv::format_double(v);
    }
    out += ',' + (m.roc_auc_ood ? csv::format_double(*m.roc_auc_ood) : std::string{});
    out += '\n';
  }
  return out;
}

}  // namespace shiftreg::experiment
