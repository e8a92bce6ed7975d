// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/betamix.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace shiftreg;

namespace {

void BM_LogGamma(benchmark::State& state) {
  double x = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(betamix::log_gamma(x));
    x = x > 900 ? 0.37 : x * 1.01;
  }
}
BENCHMARK(BM_LogGamma);

void BM_StdLgamma(benchmark::State& state) {
  double x = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(std::lgamma(x));
    x = x > 900 ? 0.37 : x * 1.01;
  }
}
BENCHMARK(BM_StdLgamma);

void BM_MixtureNll(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  betamix::MixtureParams p;
  for (std::size_t j = 0; j < k; ++j) {
    p.weights.push_back(1.0 / static_cast<double>(k));
    p.alphas.push_back(2.0 + static_cast<double>(j));
    p.betas.push_back(5.0 - 0.5 * static_cast<double>(j));
  }
  double y = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(betamix::mixture_nll(p, y));
    y = y > 0.9 ? 0.1 : y + 0.013;
  }
}
BENCHMARK(BM_MixtureNll)->Arg(1)->Arg(5);

}  // namespace
