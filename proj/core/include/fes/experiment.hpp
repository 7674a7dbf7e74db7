// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fes/diagnostics.hpp"
#include "fes/problems.hpp"
#include "fes/samplers.hpp"

namespace fes {

/// Everything needed to reproduce one run.
struct ExperimentConfig {
  std::string problem = "advection";
  SamplerKind sampler = SamplerKind::fes;
  std::size_t M = 5;
  std::size_t L = 100;
  double a = 2.0;
  double omega = 0.1;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  /// Seed of the synthetic dataset; defaults to `seed`.
  std::optional<std::uint64_t> data_seed;
  double burn_in_fraction = 0.10;
  bool autotune = true;
  double target_rate = 0.20;
  InitMode init = InitMode::prior;
  /// Center file for ball initialization; empty means the data-generating
  /// state of the problem.
  std::string init_center;
  double init_radius = 0.01;
  std::size_t grid_size = 0;  // 0: problem default
  bool extend_domain = false;  // advection: discretize rho0 on [-3, 10]
  ExpConvention exp_prior = ExpConvention::mean;  // langevin: Exp(k) reading
  AiesVariant aies_variant = AiesVariant::sequential;
  unsigned threads = 1;
  std::vector<std::string> tracked;  // empty: scalars, eta_1, eta_5
  std::string output = "fes_run";
};

/// Parses a YAML mapping (block or flow style). Unknown keys, unknown
/// enumerations and sampler constraint violations raise ConfigError naming
/// the field. Relative `init_center` paths resolve against the file's
/// directory.
ExperimentConfig parse_config(const std::filesystem::path& file);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir = {});

/// Resolved configuration as YAML, defaults filled in.
std::string describe(const ExperimentConfig& config);

/// Observable names recorded when `tracked` is empty.
std::vector<std::string> default_tracked(const TargetProblem& problem);

/// Reads `scalars: [...]` and `coefs: [...]` from a YAML file.
ParameterState read_state(const std::filesystem::path& file);

struct RunOutputs {
  std::filesystem::path chain;
  std::filesystem::path summary;
  std::filesystem::path data;
  ChainRecord record;
};

/// Runs the experiment and writes <output>.chain.tsv, <output>.summary.txt
/// and <output>.data.tsv.
RunOutputs run_experiment(const ExperimentConfig& config);

struct DiagnosticsRow {
  std::string source;
  std::string observable;
  std::optional<double> tau;  // empty when the chain is too short
  double tau_lower_bound = 0.0;
  std::optional<double> n_eff;
  std::size_t samples = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::map<std::string, double> acceptance;  // per stage, from the file
  double omega = 0.0;
};

struct AnalysisOptions {
  std::optional<double> burn_in_fraction;  // default: value in the file
  SokalOptions sokal;
};

std::vector<DiagnosticsRow> analyze_record(const ChainRecord& record,
                                           const std::vector<std::string>& observables,
                                           const std::string& source,
                                           const AnalysisOptions& options = {});

/// Per-observable IAT, effective sample size and acceptance rates after
/// burn-in removal for every file.
std::vector<DiagnosticsRow> analyze(const std::vector<std::filesystem::path>& files,
                                    const std::vector<std::string>& observables,
                                    const AnalysisOptions& options = {});

/// Post-burn-in histogram of one observable pooled over walkers. Without a
/// range the pooled min and max are used.
Histogram chain_histogram(const ChainRecord& record, const std::string& observable,
                          std::size_t bins, std::optional<std::pair<double, double>> range = {},
                          std::optional<double> burn_in_fraction = {});

/// Tab-separated `lo hi center count` rows.
void write_histogram(const std::filesystem::path& path, const Histogram& h);

/// Plain-text table: observable, tau, N_eff, mean, standard error,
/// acceptance per stage and tuned omega.
std::string format_table(const std::vector<DiagnosticsRow>& rows);

/// Header lines summarizing acceptance rates and tuned omega of a record.
std::string format_run_summary(const ChainRecord& record);

}  // namespace fes
