// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shiftreg/calibrate.hpp"
#include "shiftreg/common.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace shiftreg::metrics {

enum class Score { TotalVariance, Aleatoric, Epistemic };
std::string_view to_string(Score s);
Score score_from_string(std::string_view s);

struct MetricsConfig {
  double alpha = 0.32;
  std::vector<double> ace_levels = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double threshold = 1.0;  // acceptability |μ − y| < T
  Score score = Score::TotalVariance;
  bool nll_total_variance = false;
  bool normalize_is = true;
  std::optional<double> range_override;
  std::size_t curve_points = 100;

  void validate() const;
};

/// Predictive distributions under evaluation: Gaussian, or CRUDE-calibrated
/// with empirical quantiles.
class PredictionSet {
 public:
  static PredictionSet gaussian(std::span<const PredictiveSummary> s, bool total_variance = false);
  static PredictionSet calibrated(std::span<const calibrate::CalibratedSummary> c);

  std::size_t size() const { return mean_.size(); }
  std::span<const double> means() const { return mean_; }
  std::span<const double> stds() const { return std_; }
  double mean(std::size_t i) const { return mean_[i]; }
  double std(std::size_t i) const { return std_[i]; }
  double uncertainty(std::size_t i, Score s) const;
  std::vector<double> uncertainties(Score s) const;
  /// Central interval with nominal coverage `level`.
  std::pair<double, double> interval(std::size_t i, double level) const;

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
  std::vector<double> alea_var_;
  std::vector<double> epi_var_;
  std::vector<calibrate::CalibratedSummary> cal_;
};

struct PointMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double be = 0.0;
};

PointMetrics point_metrics(std::span<const double> preds, std::span<const double> targets);

double gaussian_nll(std::span<const double> means, std::span<const double> stds,
                    std::span<const double> targets);

/// Negatively oriented interval score of one interval.
double interval_score(double lo, double hi, double y, double alpha);

double interval_sharpness(const PredictionSet& p, std::span<const double> targets, double alpha = 0.32,
                          bool normalize = true, std::optional<double> range_override = {});

double ace(const PredictionSet& p, std::span<const double> targets,
           std::span<const double> levels = MetricsConfig{}.ace_levels);

using Curve = std::vector<std::pair<double, double>>;

/// Indices sorted by (score, index) ascending.
std::vector<std::size_t> certainty_order(std::span<const double> scores);

struct RetentionResult {
  double auc = 0.0;
  Curve curve;  // (0, anchor) then (i/n, value) for i = 1..n
};

RetentionResult error_retention(std::span<const double> means, std::span<const double> targets,
                                std::span<const double> scores);

struct F1Retention {
  double auc = 0.0;
  double at_95 = 0.0;
  Curve curve;
};

F1Retention f1_retention(std::span<const double> means, std::span<const double> targets,
                         std::span<const double> scores, double threshold = 1.0);

/// F1 with the ⌈r·n⌉ most certain rows retained.
double f1_at(std::span<const double> means, std::span<const double> targets,
             std::span<const double> scores, double threshold, double retention);

/// P(u_ood > u_id) + ½ P(u_ood == u_id).
double roc_auc_ood(std::span<const double> id, std::span<const double> ood);

double trapezoid(const Curve& c);
/// About `points` evenly spaced samples of a curve, endpoints kept.
Curve downsample(const Curve& c, std::size_t points);

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  double be = 0.0;
  double is = 0.0;
  double ace = 0.0;
  double nll = 0.0;
  double r_auc = 0.0;
  double f1_auc = 0.0;
  double f1_at_95 = 0.0;
  std::optional<double> roc_auc_ood;
  std::size_t n = 0;
  Curve error_curve;
  Curve f1_curve;
  MetricsConfig config;
};

MetricsReport full_report(const PredictionSet& p, std::span<const double> targets,
                          const MetricsConfig& config = {},
                          std::optional<std::span<const double>> ood_scores = {});

nlohmann::ordered_json to_json(const MetricsConfig& c);
MetricsConfig metrics_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);
std::string curves_csv(const MetricsReport& r);

}  // namespace shiftreg::metrics
