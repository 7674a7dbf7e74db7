// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "fes/problems.hpp"
#include "fes/samplers.hpp"

namespace {

// Cost per ensemble iteration: items processed counts iterations.
void run(benchmark::State& state, const std::string& problem, fes::SamplerKind kind,
         fes::AiesVariant variant, unsigned threads) {
  const auto inst = fes::make_problem(problem, 1);
  fes::SamplerConfig cfg;
  cfg.kind = kind;
  cfg.variant = variant;
  cfg.threads = threads;
  cfg.M = static_cast<std::size_t>(state.range(0));
  cfg.L = 20;
  cfg.iterations = 200;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fes::run_sampler(inst.target, cfg, std::vector<std::string>{}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.iterations));
}

void BM_AdvectionFes(benchmark::State& s) {
  run(s, "advection", fes::SamplerKind::fes, fes::AiesVariant::sequential, 1);
}
void BM_AdvectionFesParallel(benchmark::State& s) {
  run(s, "advection", fes::SamplerKind::fes, fes::AiesVariant::parallel, 1);
}
void BM_AdvectionFesJoint(benchmark::State& s) {
  run(s, "advection", fes::SamplerKind::fes_joint, fes::AiesVariant::sequential, 1);
}
void BM_AdvectionPcn(benchmark::State& s) {
  run(s, "advection", fes::SamplerKind::pcn, fes::AiesVariant::sequential, 1);
}
void BM_LangevinFes(benchmark::State& s) {
  run(s, "langevin", fes::SamplerKind::fes, fes::AiesVariant::sequential, 1);
}
void BM_LangevinHybrid(benchmark::State& s) {
  run(s, "langevin", fes::SamplerKind::hybrid, fes::AiesVariant::sequential, 1);
}

BENCHMARK(BM_AdvectionFes)->Arg(0)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdvectionFesParallel)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdvectionFesJoint)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdvectionPcn)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LangevinFes)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LangevinHybrid)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace
