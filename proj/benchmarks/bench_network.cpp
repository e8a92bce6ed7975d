// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/augment.hpp"
#include "shiftreg/network.hpp"
#include "shiftreg/rng.hpp"

#include <benchmark/benchmark.h>

using namespace shiftreg;

namespace {

struct Batch {
  network::Weights w;
  Matrix x;
  std::vector<double> y;
};

Batch make_batch(std::size_t width, std::size_t rows) {
  network::NetworkConfig c;
  c.input_dim = 32;
  c.hidden = {width, width};
  c.k = 5;
  Batch b{network::init(c), Matrix(static_cast<Eigen::Index>(rows), 32), std::vector<double>(rows)};
  Rng r(1);
  for (Eigen::Index i = 0; i < b.x.size(); ++i) b.x.data()[i] = r.normal();
  for (auto& v : b.y) v = 0.1 + 0.8 * r.uniform();
  return b;
}

void BM_Forward(benchmark::State& state) {
  const auto b = make_batch(static_cast<std::size_t>(state.range(0)), 512);
  for (auto _ : state) benchmark::DoNotOptimize(network::head_outputs(b.w, b.x));
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128);

void BM_LossAndGradients(benchmark::State& state) {
  const auto b = make_batch(static_cast<std::size_t>(state.range(0)), 512);
  for (auto _ : state) benchmark::DoNotOptimize(network::loss_and_gradients(b.w, b.x, b.y));
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_LossAndGradients)->Arg(32)->Arg(128);

void BM_LossAndGradientsMoEx(benchmark::State& state) {
  const auto b = make_batch(128, 512);
  augment::MoExConfig mc;
  Rng r(2);
  const auto aug = augment::augment_batch(b.x, mc, r);
  for (auto _ : state) benchmark::DoNotOptimize(network::loss_and_gradients(b.w, aug.features, b.y, &aug.pairing));
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_LossAndGradientsMoEx);

}  // namespace
