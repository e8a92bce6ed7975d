// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/metrics.hpp"

#include "shiftreg/csv.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace shiftreg::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DataError(std::string(what) + ": length mismatch");
  if (a == 0) throw DataError(std::string(what) + ": empty input");
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> n01(0.0, 1.0);
  return boost::math::quantile(n01, p);
}

}  // namespace

std::string_view to_string(Score s) {
  switch (s) {
    case Score::TotalVariance: return "total_variance";
    case Score::Aleatoric: return "aleatoric";
    case Score::Epistemic: return "epistemic";
  }
  return "?";
}

Score score_from_string(std::string_view s) {
  if (s == "total_variance") return Score::TotalVariance;
  if (s == "aleatoric") return Score::Aleatoric;
  if (s == "epistemic") return Score::Epistemic;
  throw ConfigError("unknown uncertainty score '" + std::string(s) + "'");
}

void MetricsConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("metrics.alpha must lie in (0, 1)");
  if (ace_levels.empty()) throw ConfigError("metrics.ace_levels must be nonempty");
  for (double l : ace_levels) {
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("metrics.ace_levels must lie in (0, 1)");
  }
  if (!(threshold > 0.0)) throw ConfigError("metrics.threshold must be positive");
  if (range_override && !(*range_override > 0.0)) throw ConfigError("metrics.range_override must be positive");
  if (curve_points < 2) throw ConfigError("metrics.curve_points must be >= 2");
}

PredictionSet PredictionSet::gaussian(std::span<const PredictiveSummary> s, bool total_variance) {
  PredictionSet p;
  for (const auto& x : s) {
    const double v = total_variance ? x.total_variance() : x.var_aleatoric;
    if (!(v > 0.0)) throw DataError("prediction set: nonpositive predictive variance");
    p.mean_.push_back(x.mean);
    p.std_.push_back(std::sqrt(v));
    p.alea_var_.push_back(x.var_aleatoric);
    p.epi_var_.push_back(x.var_epistemic);
  }
  return p;
}

PredictionSet PredictionSet::calibrated(std::span<const calibrate::CalibratedSummary> c) {
  PredictionSet p;
  p.cal_.assign(c.begin(), c.end());
  for (const auto& x : c) {
    if (!(x.std > 0.0)) throw DataError("prediction set: nonpositive calibrated std");
    p.mean_.push_back(x.mean);
    p.std_.push_back(x.std);
    p.alea_var_.push_back(x.std * x.std);
    p.epi_var_.push_back(x.var_epistemic);
  }
  return p;
}

double PredictionSet::uncertainty(std::size_t i, Score s) const {
  switch (s) {
    case Score::TotalVariance: return alea_var_[i] + epi_var_[i];
    case Score::Aleatoric: return alea_var_[i];
    case Score::Epistemic: return epi_var_[i];
  }
  return 0.0;
}

std::vector<double> PredictionSet::uncertainties(Score s) const {
  std::vector<double> u(size());
  for (std::size_t i = 0; i < size(); ++i) u[i] = uncertainty(i, s);
  return u;
}

std::pair<double, double> PredictionSet::interval(std::size_t i, double level) const {
  const double plo = 0.5 * (1.0 - level);
  const double phi = 0.5 * (1.0 + level);
  if (!cal_.empty()) {
    return {cal_[i].quantile(plo), cal_[i].quantile(phi)};
  }
  const double z = normal_quantile(phi);
  return {mean_[i] - z * std_[i], mean_[i] + z * std_[i]};
}

PointMetrics point_metrics(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), "point_metrics");
  PointMetrics m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] - y[i];
    m.mae += std::abs(e);
    m.rmse += e * e;
    m.be += e;
  }
  const auto n = static_cast<double>(x.size());
  m.mae /= n;
  m.rmse = std::sqrt(m.rmse / n);
  m.be /= n;
  return m;
}

double gaussian_nll(std::span<const double> mu, std::span<const double> sd, std::span<const double> y) {
  check_lengths(mu.size(), y.size(), "gaussian_nll");
  check_lengths(sd.size(), y.size(), "gaussian_nll");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(sd[i] > 0.0)) throw DataError("gaussian_nll: nonpositive std at row " + std::to_string(i + 1));
    const double r = (y[i] - mu[i]) / sd[i];
    total += 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sd[i]) + 0.5 * r * r;
  }
  return total / static_cast<double>(y.size());
}

double interval_score(double lo, double hi, double y, double alpha) {
  double s = hi - lo;
  if (y < lo) s += (2.0 / alpha) * (lo - y);
  if (y > hi) s += (2.0 / alpha) * (y - hi);
  return s;
}

double interval_sharpness(const PredictionSet& p, std::span<const double> y, double alpha, bool normalize,
                          std::optional<double> range_override) {
  check_lengths(p.size(), y.size(), "interval_sharpness");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto [lo, hi] = p.interval(i, 1.0 - alpha);
    total += interval_score(lo, hi, y[i], alpha);
  }
  total /= static_cast<double>(y.size());
  if (!normalize) return total;
  double range = 0.0;
  if (range_override) {
    range = *range_override;
  } else {
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    range = *mx - *mn;
  }
  if (!(range > 0.0)) throw DataError("interval_sharpness: degenerate target range");
  return total / range;
}

double ace(const PredictionSet& p, std::span<const double> y, std::span<const double> levels) {
  check_lengths(p.size(), y.size(), "ace");
  if (levels.empty()) throw DataError("ace: no levels");
  double total = 0.0;
  for (double level : levels) {
    std::size_t covered = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const auto [lo, hi] = p.interval(i, level);
      if (y[i] >= lo && y[i] <= hi) ++covered;
    }
    total += static_cast<double>(covered) / static_cast<double>(y.size()) - level;
  }
  return total / static_cast<double>(levels.size());
}

std::vector<std::size_t> certainty_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

double trapezoid(const Curve& c) {
  double a = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    a += 0.5 * (c[i].first - c[i - 1].first) * (c[i].second + c[i - 1].second);
  }
  return a;
}

Curve downsample(const Curve& c, std::size_t points) {
  if (c.size() <= points || points < 2) return c;
  Curve out;
  out.reserve(points);
  std::size_t last = static_cast<std::size_t>(-1);
  for (std::size_t j = 0; j < points; ++j) {
    const auto i = static_cast<std::size_t>(
        std::llround(static_cast<double>(j) * static_cast<double>(c.size() - 1) / static_cast<double>(points - 1)));
    if (i != last) out.push_back(c[i]);
    last = i;
  }
  return out;
}

RetentionResult error_retention(std::span<const double> mu, std::span<const double> y,
                                std::span<const double> scores) {
  check_lengths(mu.size(), y.size(), "error_retention");
  check_lengths(scores.size(), y.size(), "error_retention");
  const auto order = certainty_order(scores);
  const std::size_t n = y.size();
  RetentionResult r;
  r.curve.reserve(n + 1);
  r.curve.emplace_back(0.0, 0.0);
  double sse = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double e = mu[order[k - 1]] - y[order[k - 1]];
    sse += e * e;
    r.curve.emplace_back(static_cast<double>(k) / static_cast<double>(n), sse / static_cast<double>(k));
  }
  r.auc = trapezoid(r.curve);
  return r;
}

namespace {

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t den = 2 * tp + fp + fn;
  return den == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
}

std::size_t retained_count(double r, std::size_t n) {
  const double k = std::ceil(r * static_cast<double>(n) - 1e-9);
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(n)));
}

}  // namespace

double f1_at(std::span<const double> mu, std::span<const double> y, std::span<const double> scores,
             double threshold, double retention) {
  check_lengths(mu.size(), y.size(), "f1_at");
  check_lengths(scores.size(), y.size(), "f1_at");
  const auto order = certainty_order(scores);
  const std::size_t k = retained_count(retention, y.size());
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const bool ok = std::abs(mu[order[j]] - y[order[j]]) < threshold;
    if (j < k) {
      ok ? ++tp : ++fp;
    } else if (ok) {
      ++fn;
    }
  }
  return f1_from_counts(tp, fp, fn);
}

F1Retention f1_retention(std::span<const double> mu, std::span<const double> y, std::span<const double> scores,
                         double threshold) {
  check_lengths(mu.size(), y.size(), "f1_retention");
  check_lengths(scores.size(), y.size(), "f1_retention");
  if (!(threshold > 0.0)) throw DataError("f1_retention: threshold must be positive");
  const auto order = certainty_order(scores);
  const std::size_t n = y.size();
  std::vector<bool> ok(n);
  std::size_t positives = 0;
  for (std::size_t j = 0; j < n; ++j) {
    ok[j] = std::abs(mu[order[j]] - y[order[j]]) < threshold;
    positives += ok[j] ? 1 : 0;
  }
  F1Retention out;
  out.curve.reserve(n + 1);
  std::size_t tp = 0, fp = 0;
  out.curve.emplace_back(0.0, f1_from_counts(0, 0, positives));
  for (std::size_t k = 1; k <= n; ++k) {
    ok[k - 1] ? ++tp : ++fp;
    out.curve.emplace_back(static_cast<double>(k) / static_cast<double>(n),
                           f1_from_counts(tp, fp, positives - tp));
  }
  out.auc = trapezoid(out.curve);
  out.at_95 = out.curve[retained_count(0.95, n)].second;
  return out;
}

double roc_auc_ood(std::span<const double> id, std::span<const double> ood) {
  if (id.empty() || ood.empty()) throw DataError("roc_auc_ood: both sides must be nonempty");
  std::vector<double> a(id.begin(), id.end());
  std::sort(a.begin(), a.end());
  double wins = 0.0;
  for (double u : ood) {
    const auto lo = std::lower_bound(a.begin(), a.end(), u);
    const auto hi = std::upper_bound(lo, a.end(), u);
    wins += static_cast<double>(lo - a.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

MetricsReport full_report(const PredictionSet& p, std::span<const double> y, const MetricsConfig& config,
                          std::optional<std::span<const double>> ood_scores) {
  config.validate();
  check_lengths(p.size(), y.size(), "full_report");
  MetricsReport r;
  r.config = config;
  r.n = y.size();
  const auto pm = point_metrics(p.means(), y);
  r.mae = pm.mae;
  r.rmse = pm.rmse;
  r.be = pm.be;
  if (config.nll_total_variance) {
    std::vector<double> sd(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) sd[i] = std::sqrt(p.uncertainty(i, Score::TotalVariance));
    r.nll = gaussian_nll(p.means(), sd, y);
  } else {
    r.nll = gaussian_nll(p.means(), p.stds(), y);
  }
  r.is = interval_sharpness(p, y, config.alpha, config.normalize_is, config.range_override);
  r.ace = ace(p, y, config.ace_levels);
  const auto scores = p.uncertainties(config.score);
  auto er = error_retention(p.means(), y, scores);
  auto fr = f1_retention(p.means(), y, scores, config.threshold);
  r.r_auc = er.auc;
  r.f1_auc = fr.auc;
  r.f1_at_95 = fr.at_95;
  r.error_curve = downsample(er.curve, config.curve_points);
  r.f1_curve = downsample(fr.curve, config.curve_points);
  if (ood_scores) r.roc_auc_ood = roc_auc_ood(scores, *ood_scores);
  return r;
}

nlohmann::ordered_json to_json(const MetricsConfig& c) {
  nlohmann::ordered_json j;
  j["alpha"] = c.alpha;
  j["ace_levels"] = c.ace_levels;
  j["threshold"] = c.threshold;
  j["score"] = std::string(to_string(c.score));
  j["nll_total_variance"] = c.nll_total_variance;
  j["normalize_is"] = c.normalize_is;
  j["range_override"] = c.range_override ? nlohmann::ordered_json(*c.range_override) : nlohmann::ordered_json();
  j["curve_points"] = c.curve_points;
  return j;
}

MetricsConfig metrics_config_from_json(const nlohmann::json& j) {
  MetricsConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.ace_levels = j.at("ace_levels").get<std::vector<double>>();
  c.threshold = j.at("threshold").get<double>();
  c.score = score_from_string(j.at("score").get<std::string>());
  c.nll_total_variance = j.at("nll_total_variance").get<bool>();
  c.normalize_is = j.at("normalize_is").get<bool>();
  if (!j.at("range_override").is_null()) c.range_override = j.at("range_override").get<double>();
  c.curve_points = j.at("curve_points").get<std::size_t>();
  return c;
}

namespace {

nlohmann::ordered_json curve_json(const Curve& c) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& [x, v] : c) a.push_back({x, v});
  return a;
}

Curve curve_from_json(const nlohmann::json& j) {
  Curve c;
  for (const auto& p : j) c.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return c;
}

}  // namespace

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["mae"] = r.mae;
  j["rmse"] = r.rmse;
  j["be"] = r.be;
  j["is"] = r.is;
  j["ace"] = r.ace;
  j["nll"] = r.nll;
  j["r_auc"] = r.r_auc;
  j["f1_auc"] = r.f1_auc;
  j["f1_at_95"] = r.f1_at_95;
  j["roc_auc_ood"] = r.roc_auc_ood ? nlohmann::ordered_json(*r.roc_auc_ood) : nlohmann::ordered_json();
  j["config"] = to_json(r.config);
  j["error_retention_curve"] = curve_json(r.error_curve);
  j["f1_retention_curve"] = curve_json(r.f1_curve);
  return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.n = j.at("n").get<std::size_t>();
    r.mae = j.at("mae").get<double>();
    r.rmse = j.at("rmse").get<double>();
    r.be = j.at("be").get<double>();
    r.is = j.at("is").get<double>();
    r.ace = j.at("ace").get<double>();
    r.nll = j.at("nll").get<double>();
    r.r_auc = j.at("r_auc").get<double>();
    r.f1_auc = j.at("f1_auc").get<double>();
    r.f1_at_95 = j.at("f1_at_95").get<double>();
    if (!j.at("roc_auc_ood").is_null()) r.roc_auc_ood = j.at("roc_auc_ood").get<double>();
    r.config = metrics_config_from_json(j.at("config"));
    r.error_curve = curve_from_json(j.at("error_retention_curve"));
    r.f1_curve = curve_from_json(j.at("f1_retention_curve"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics report: ") + e.what());
  }
}

std::string curves_csv(const MetricsReport& r) {
  std::string out = "curve,retention,value\n";
  for (const auto& [x, v] : r.error_curve) {
    out += "error," + csv::format_double(x) + ',' + csv::format_double(v) + '\n';
  }
  for (const auto& [x, v] : r.f1_curve) {
    out += "f1," + csv::format_double(x) + ',' + csv::format_double(v) + '\n';
  }
  return out;
}

}  // namespace shiftreg::metrics
