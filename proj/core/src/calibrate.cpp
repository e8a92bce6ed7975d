// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/calibrate.hpp"

#include "shiftreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shiftreg::calibrate {

double ZPool::quantile(double p) const {
  if (z.empty()) throw DataError("ZPool::quantile on empty pool");
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("ZPool::quantile: p outside [0, 1]");
  const double h = p * static_cast<double>(z.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= z.size()) return z.back();
  const double frac = h - static_cast<double>(lo);
  return z[lo] + frac * (z[lo + 1] - z[lo]);
}

ZPool make_pool(std::vector<double> z, std::string source) {
  if (z.empty()) throw DataError("crude: empty calibration pool");
  for (double v : z) {
    if (!std::isfinite(v)) throw DataError("crude: non-finite z-score");
  }
  std::sort(z.begin(), z.end());
  ZPool pool;
  pool.source = std::move(source);
  const auto n = static_cast<double>(z.size());
  double m = 0.0;
  for (double v : z) m += v;
  m /= n;
  double var = 0.0;
  for (double v : z) var += (v - m) * (v - m);
  pool.mean = m;
  pool.std = std::sqrt(var / n);
  pool.z = std::move(z);
  if (!(pool.std >= kDegenerateStd)) {
    throw DataError("crude: degenerate calibration pool (all z-scores identical)");
  }
  return pool;
}

namespace {

double sigma_of(const PredictiveSummary& s, const FitOptions& o) {
  return std::sqrt(o.use_total_variance ? s.total_variance() : s.var_aleatoric);
}

}  // namespace

ZPool crude_fit(std::span<const PredictiveSummary> preds, std::span<const double> targets,
                std::string source, const FitOptions& options) {
  if (preds.size() != targets.size()) throw DataError("crude_fit: length mismatch");
  if (preds.size() < options.min_points) {
    throw DataError("crude_fit: need at least " + std::to_string(options.min_points) +
                    " calibration points, got " + std::to_string(preds.size()));
  }
  std::vector<double> z(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double s = sigma_of(preds[i], options);
    if (!(s > 0.0)) throw DataError("crude_fit: nonpositive predictive std at row " + std::to_string(i + 1));
    z[i] = (targets[i] - preds[i].mean) / s;
  }
  return make_pool(std::move(z), std::move(source));
}

double CalibratedSummary::quantile(double p) const { return base_mean + base_std * pool->quantile(p); }

CalibratedSummary crude_apply(const PredictiveSummary& s, const ZPool& pool, const FitOptions& options) {
  CalibratedSummary c;
  c.base_mean = s.mean;
  c.base_std = sigma_of(s, options);
  c.mean = s.mean + c.base_std * pool.mean;
  c.std = c.base_std * pool.std;
  c.var_epistemic = options.use_total_variance ? 0.0 : s.var_epistemic;
  c.pool = &pool;
  return c;
}

std::vector<CalibratedSummary> crude_apply(std::span<const PredictiveSummary> summaries, const ZPool& pool,
                                           const FitOptions& options) {
  std::vector<CalibratedSummary> out;
  out.reserve(summaries.size());
  for (const auto& s : summaries) out.push_back(crude_apply(s, pool, options));
  return out;
}

PredictiveSummary to_summary(const CalibratedSummary& c) {
  return {c.mean, c.std * c.std, c.var_epistemic};
}

Selection robust_select(std::span<const Candidate> candidates, const FitOptions& options) {
  if (candidates.empty()) throw DataError("robust_select: no candidate calibration sets");
  Selection sel;
  sel.nll.assign(candidates.size(), std::numeric_limits<double>::quiet_NaN());
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    ZPool pool;
    try {
      pool = crude_fit(c.preds, c.targets, c.name, options);
    } catch (const DataError&) {
      continue;
    }
    const auto cal = crude_apply(c.preds, pool, options);
    std::vector<double> mu(cal.size());
    std::vector<double> sd(cal.size());
    for (std::size_t r = 0; r < cal.size(); ++r) {
      mu[r] = cal[r].mean;
      sd[r] = cal[r].std;
    }
    const double nll = metrics::gaussian_nll(mu, sd, c.targets);
    sel.nll[i] = nll;
    if (nll < best) {
      best = nll;
      sel.index = i;
      sel.pool = std::move(pool);
      found = true;
    }
  }
  if (!found) throw DataError("robust_select: every candidate calibration set is degenerate");
  return sel;
}

nlohmann::ordered_json to_json(const ZPool& pool) {
  nlohmann::ordered_json j;
  j["format"] = "shiftreg-zpool";
  j["source"] = pool.source;
  j["count"] = pool.z.size();
  j["mean"] = pool.mean;
  j["std"] = pool.std;
  j["z"] = pool.z;
  return j;
}

ZPool pool_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "shiftreg-zpool") throw DataError("zpool: unknown format");
    return make_pool(j.at("z").get<std::vector<double>>(), j.value("source", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("zpool: ") + e.what());
  }
}

}  // namespace shiftreg::calibrate
