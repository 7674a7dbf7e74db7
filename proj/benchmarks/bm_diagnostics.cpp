// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <benchmark/benchmark.h>

#include <vector>

#include "fes/diagnostics.hpp"
#include "fes/rng.hpp"

namespace {

std::vector<double> ar1(std::size_t n) {
  fes::Stream rng(5);
  std::vector<double> x(n);
  double v = 0.0;
  for (auto& xi : x) xi = v = 0.9 * v + rng.normal();
  return x;
}

void BM_Autocorrelation(benchmark::State& state) {
  const auto x = ar1(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fes::autocorrelation(x, x.size() / 4));
}
BENCHMARK(BM_Autocorrelation)->Range(1 << 10, 1 << 20)->Unit(benchmark::kMicrosecond);

void BM_EnsembleIat(benchmark::State& state) {
  std::vector<std::vector<double>> walkers;
  for (int w = 0; w < 20; ++w) walkers.push_back(ar1(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(fes::iat_sokal(walkers));
}
BENCHMARK(BM_EnsembleIat)->Arg(1 << 12)->Arg(1 << 15)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
