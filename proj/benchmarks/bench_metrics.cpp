// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/calibrate.hpp"
#include "shiftreg/metrics.hpp"
#include "shiftreg/rng.hpp"

#include <benchmark/benchmark.h>

using namespace shiftreg;

namespace {

struct Data {
  std::vector<PredictiveSummary> preds;
  std::vector<double> mu, y, score;
};

Data make(std::size_t n) {
  Data d;
  Rng r(3);
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = 0.5 + r.uniform();
    d.preds.push_back({r.normal(0, 3), sd * sd, 0.0});
    d.mu.push_back(d.preds.back().mean);
    d.y.push_back(d.mu.back() + sd * r.normal());
    d.score.push_back(sd * sd);
  }
  return d;
}

void BM_FullReport(benchmark::State& state) {
  const auto d = make(static_cast<std::size_t>(state.range(0)));
  const auto p = metrics::PredictionSet::gaussian(d.preds);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::full_report(p, d.y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FullReport)->Arg(1000)->Arg(100000);

void BM_ErrorRetention(benchmark::State& state) {
  const auto d = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::error_retention(d.mu, d.y, d.score));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ErrorRetention)->Arg(100000);

void BM_CrudeFitApply(benchmark::State& state) {
  const auto d = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const auto pool = calibrate::crude_fit(d.preds, d.y);
    benchmark::DoNotOptimize(calibrate::crude_apply(d.preds, pool));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CrudeFitApply)->Arg(100000);

}  // namespace
