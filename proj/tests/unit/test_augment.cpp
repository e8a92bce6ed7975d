// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/augment.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace shiftreg;
using namespace shiftreg::augment;

namespace {
std::vector<double> random_vec(Rng& r, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.normal(1.0, 2.0);
  return v;
}
Matrix random_batch(Rng& r, Eigen::Index n, Eigen::Index d) {
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.uniform();
  return m;
}
}  // namespace

TEST(PonoStats, Examples) {
  auto [m1, s1] = pono_stats(std::vector<double>{1, 3});
  EXPECT_DOUBLE_EQ(m1, 2.0);
  EXPECT_DOUBLE_EQ(s1, 1.0);
  auto [m2, s2] = pono_stats(std::vector<double>{4, 4, 4});
  EXPECT_DOUBLE_EQ(m2, 4.0);
  EXPECT_DOUBLE_EQ(s2, 1e-5);
  auto [m3, s3] = pono_stats(std::vector<double>{0, 0, 3, 3});
  EXPECT_DOUBLE_EQ(m3, 1.5);
  EXPECT_DOUBLE_EQ(s3, 1.5);
  EXPECT_THROW(pono_stats(std::vector<double>{1}), DataError);
}

TEST(MoexExchange, Examples) {
  const auto x = moex_exchange(std::vector<double>{1, 3}, std::vector<double>{0, 2});
  EXPECT_NEAR(x[0], 0.0, 1e-15);
  EXPECT_NEAR(x[1], 2.0, 1e-15);
  Rng r(1);
  const auto a = random_vec(r, 9);
  const auto same = moex_exchange(a, a);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(same[i], a[i], 1e-12);
  EXPECT_THROW(moex_exchange(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), DataError);
}

TEST(MoexExchange, TakesPartnerMomentsAndInverts) {
  Rng r(2);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_vec(r, 2 + r.below(20));
    const auto b = random_vec(r, a.size());
    const auto x = moex_exchange(a, b);
    const auto [mx, sx] = pono_stats(x);
    const auto [mb, sb] = pono_stats(b);
    EXPECT_NEAR(mx, mb, 1e-9);
    EXPECT_NEAR(sx, sb, 1e-9);
    const auto back = moex_exchange(x, a);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(back[i], a[i], 1e-9);
  }
}

TEST(SampleLambda, Moments) {
  MoExConfig c;
  Rng r(3);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = sample_lambda(c, r);
    ASSERT_GT(l, 0.0);
    ASSERT_LT(l, 1.0);
    s += l;
    s2 += l * l;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.5, 3.0 * std::sqrt(1.0 / 804.0 / n));
  EXPECT_NEAR(var, 1.0 / 804.0, 0.05 / 804.0);
  Rng a(9), b(9);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_lambda(c, a), sample_lambda(c, b));
}

TEST(AugmentBatch, ZeroProbabilityIsPassThrough) {
  MoExConfig c;
  c.p = 0.0;
  Rng r(4);
  const Matrix x = random_batch(r, 32, 5);
  Rng draw(11);
  const auto out = augment_batch(x, c, draw);
  EXPECT_TRUE(out.features == x);
  EXPECT_EQ(out.pairing.n_augmented(), 0u);
  // No random numbers consumed.
  Rng fresh(11);
  EXPECT_EQ(draw.next_u64(), fresh.next_u64());
}

TEST(AugmentBatch, AlwaysAugmentWithValidPartners) {
  MoExConfig c;
  c.p = 1.0;
  Rng r(5);
  const Matrix x = random_batch(r, 64, 6);
  const auto out = augment_batch(x, c, r);
  EXPECT_EQ(out.pairing.n_augmented(), 64u);
  ASSERT_EQ(out.pairing.lambda.size(), 64u);
  for (std::size_t i = 0; i < 64; ++i) {
    const auto j = out.pairing.partner[i];
    ASSERT_GE(j, 0);
    ASSERT_LT(j, 64);
    EXPECT_NE(static_cast<std::size_t>(j), i);
    EXPECT_GT(out.pairing.lambda[i], 0.0);
    EXPECT_LT(out.pairing.lambda[i], 1.0);
    const Eigen::RowVectorXd a = x.row(static_cast<Eigen::Index>(i));
    const Eigen::RowVectorXd b = x.row(j);
    const auto expect = moex_exchange(std::span<const double>(a.data(), 6), std::span<const double>(b.data(), 6));
    for (Eigen::Index k = 0; k < 6; ++k) EXPECT_NEAR(out.features(static_cast<Eigen::Index>(i), k), expect[k], 1e-14);
  }
}

TEST(AugmentBatch, FractionConcentrates) {
  MoExConfig c;
  c.p = 0.2;
  Rng r(6);
  const Matrix x = random_batch(r, 100000, 3);
  const auto out = augment_batch(x, c, r);
  const double frac = static_cast<double>(out.pairing.n_augmented()) / 1e5;
  EXPECT_GE(frac, 0.195);
  EXPECT_LE(frac, 0.205);
}

TEST(AugmentBatch, SingleRowIsSkipped) {
  MoExConfig c;
  c.p = 1.0;
  Rng r(7);
  const Matrix x = random_batch(r, 1, 4);
  const auto out = augment_batch(x, c, r);
  EXPECT_TRUE(out.features == x);
  EXPECT_EQ(out.skipped, 1u);
  EXPECT_EQ(out.pairing.n_augmented(), 0u);
}

TEST(MoExConfig, Validate) {
  MoExConfig c;
  c.p = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.p = 0.5;
  c.lambda_alpha = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
