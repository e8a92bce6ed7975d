// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/ingest.hpp"
#include "shiftreg/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace shiftreg;

namespace {

ingest::EnvironmentSplit split_of(const synth::SynthData& d) {
  return ingest::make_environment_split(d.train, d.val, d.test, ingest::SplitRule{});
}

// OLS with intercept on `fit`, RMSE on `eval`.
double ols_rmse(const ingest::Frame& fit, const ingest::Frame& eval) {
  const auto n = fit.features.rows();
  const auto p = fit.features.cols();
  Eigen::MatrixXd X(n, p + 1);
  X.leftCols(p) = fit.features;
  X.col(p).setOnes();
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(fit.target);
  Eigen::MatrixXd E(eval.features.rows(), p + 1);
  E.leftCols(p) = eval.features;
  E.col(p).setOnes();
  return std::sqrt((E * beta - eval.target).squaredNorm() / static_cast<double>(eval.n_rows()));
}

synth::SynthConfig small() {
  synth::SynthConfig c;
  c.n_per_domain = 300;
  c.n_val_per_domain = 100;
  c.n_test = 400;
  return c;
}

}  // namespace

TEST(Synth, Deterministic) {
  const auto c = small();
  const auto a = synth::generate(c);
  const auto b = synth::generate(c);
  EXPECT_EQ(synth::to_csv(a.train), synth::to_csv(b.train));
  EXPECT_EQ(synth::to_csv(a.val), synth::to_csv(b.val));
  EXPECT_EQ(synth::to_csv(a.test), synth::to_csv(b.test));
  EXPECT_EQ(a.manifest.dump(), b.manifest.dump());
  auto c2 = c;
  c2.seed = 8;
  EXPECT_NE(synth::to_csv(synth::generate(c2).train), synth::to_csv(a.train));
}

TEST(Synth, CsvReloadsThroughIngest) {
  const auto d = synth::generate(small());
  ingest::LoadOptions o;
  o.schema = synth::schema();
  const auto t = ingest::parse_table(synth::to_csv(d.train), o).frame;
  EXPECT_TRUE(t.features == d.train.features);
  EXPECT_TRUE(t.target == d.train.target);
  EXPECT_EQ(t.meta_column("climate"), d.train.meta_column("climate"));
}

TEST(Synth, SixDomainsMatchManifestCounts) {
  const auto c = small();
  const auto d = synth::generate(c);
  const auto s = split_of(d);
  ASSERT_EQ(s.train.size(), 6u);
  const auto& doms = d.manifest.at("domains");
  for (std::size_t e = 0; e < 6; ++e) {
    // Labels are in lexicographic order in both.
    bool found = false;
    for (const auto& dj : doms) {
      if (dj.at("label") == s.labels[e]) {
        EXPECT_EQ(dj.at("n_train").get<std::size_t>(), s.train[e].n_rows());
        EXPECT_EQ(dj.at("n_val").get<std::size_t>(), s.val[e].n_rows());
        found = true;
      }
    }
    EXPECT_TRUE(found) << s.labels[e];
    EXPECT_EQ(s.train[e].n_rows(), c.n_per_domain);
  }
  EXPECT_EQ(s.test.n_rows(), c.n_test);
}

TEST(Synth, LinearRecovery) {
  auto c = small();
  c.amplitude = 0.0;
  c.noise_std.assign(7, 1e-13);
  const auto d = synth::generate(c);
  const auto s = split_of(d);
  const auto tr = ingest::drop_meta(s.train_all);
  const auto va = ingest::drop_meta(s.val_all);
  EXPECT_LT(ols_rmse(tr, va), 1e-8);
}

TEST(Synth, MeanFunctionMatchesNoiselessTargets) {
  auto c = small();
  c.noise_std.assign(7, 1e-13);
  c.domain_bias_scale = 0.5;
  const auto d = synth::generate(c);
  const auto x = d.test.features.row(3);
  std::vector<double> xv(x.data(), x.data() + x.size());
  EXPECT_NEAR(synth::mean_function(d, 6, xv), d.test.target(3), 1e-9);
}

TEST(Synth, OodOffsetSeparatesTest) {
  auto c = small();
  c.ood_offset_scale = 5.0 * c.train_offset_scale;
  const auto d = synth::generate(c);
  const auto tr = d.train.features;
  const Eigen::RowVectorXd mu = tr.colwise().mean();
  const Eigen::RowVectorXd sd = ((tr.rowwise() - mu).array().square().colwise().mean()).sqrt();
  const Eigen::RowVectorXd diff = ((d.test.features.colwise().mean() - mu).array() / sd.array()).abs();
  EXPECT_GE(diff.maxCoeff(), 3.0);
}

TEST(Synth, ShiftMonotonicity) {
  double prev = 0.0;
  for (double ood : {2.0, 4.0, 8.0}) {
    auto c = small();
    c.ood_offset_scale = ood;
    const auto d = synth::generate(c);
    const auto r = ols_rmse(ingest::drop_meta(d.train), ingest::drop_meta(d.test));
    EXPECT_GT(r, prev) << "ood " << ood;
    prev = r;
  }
}

TEST(Synth, ValidateRejectsBadConfigs) {
  auto c = small();
  c.ood_offset_scale = c.train_offset_scale;
  EXPECT_THROW(synth::generate(c), ConfigError);
  c = small();
  c.noise_std = {1.0};
  EXPECT_THROW(synth::generate(c), ConfigError);
  c = small();
  c.noise_std[2] = 0.0;
  EXPECT_THROW(synth::generate(c), ConfigError);
  c = small();
  c.n_per_domain = 5;
  EXPECT_THROW(synth::generate(c), ConfigError);
}
