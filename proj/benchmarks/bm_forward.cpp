// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <benchmark/benchmark.h>

#include "fes/kl.hpp"
#include "fes/problems.hpp"
#include "fes/rng.hpp"

namespace {

void BM_AdvectionForward(benchmark::State& state) {
  const auto grid = static_cast<std::size_t>(state.range(0));
  const auto prob = fes::make_advection_problem(1, {grid, false});
  const auto& coefs = prob.truth.coefs;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fes::advection_forward(0.5, coefs, *prob.basis, prob.locations,
                                                    prob.times, true));
  }
}
BENCHMARK(BM_AdvectionForward)->Arg(100)->Arg(200)->Arg(400);

void BM_LangevinForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto basis = fes::bm_kl_basis(n, 10.0, n);
  fes::Stream rng(3);
  const auto coefs = fes::sample_prior_coefficients(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fes::langevin_forward(1.5, 0.8, coefs, basis));
  }
}
BENCHMARK(BM_LangevinForward)->Arg(100)->Arg(200)->Arg(400);

void BM_AdvectionBasis(benchmark::State& state) {
  const auto grid = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fes::advection_basis(grid));
}
BENCHMARK(BM_AdvectionBasis)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
