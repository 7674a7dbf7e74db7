// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)
//
// fes run <config> | analyze <chain files> | info <config>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fes/chain_io.hpp"
#include "fes/error.hpp"
#include "fes/experiment.hpp"

namespace {

struct RunArgs {
  std::string config;
  std::string output;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
};

struct AnalyzeArgs {
  std::vector<std::string> files;
  std::vector<std::string> observables;
  std::optional<double> burn_in;
  std::string histogram;
  std::size_t bins = 50;
  std::vector<double> range;
  std::string histogram_out;
};

int do_run(const RunArgs& args) {
  fes::ExperimentConfig config = fes::parse_config(args.config);
  if (!args.output.empty()) config.output = args.output;
  if (args.threads) config.threads = *args.threads;
  if (args.seed) config.seed = *args.seed;
  const auto out = fes::run_experiment(config);
  std::cout << fes::format_run_summary(out.record) << "chain " << out.chain.string()
            << "\nsummary " << out.summary.string() << "\ndata " << out.data.string()
            << '\n';
  return 0;
}

int do_analyze(const AnalyzeArgs& args) {
  fes::AnalysisOptions options;
  options.burn_in_fraction = args.burn_in;
  std::vector<std::filesystem::path> files(args.files.begin(), args.files.end());
  std::cout << fes::format_table(fes::analyze(files, args.observables, options));

  if (args.histogram.empty()) return 0;
  std::optional<std::pair<double, double>> range;
  if (args.range.size() == 2) range = std::pair{args.range[0], args.range[1]};
  for (const auto& f : files) {
    const auto record = fes::read_chain(f);
    const auto h = fes::chain_histogram(record, args.histogram, args.bins, range,
                                        args.burn_in);
    std::filesystem::path target =
        args.histogram_out.empty()
            ? std::filesystem::path(f.string() + "." + args.histogram + ".hist.tsv")
            : std::filesystem::path(args.histogram_out);
    if (files.size() > 1 && !args.histogram_out.empty())
      target += "." + f.filename().string();
    fes::write_histogram(target, h);
    const auto modes = fes::separated_modes(h);
    std::cout << "histogram " << args.histogram << " -> " << target.string() << " ("
              << modes.size() << " separated mode" << (modes.size() == 1 ? "" : "s")
              << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional ensemble sampler experiments"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  run->add_option("config", run_args.config, "YAML config")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", run_args.output, "Output prefix (overrides config)");
  run->add_option("-j,--threads", run_args.threads, "Worker threads (overrides config)");
  run->add_option("--seed", run_args.seed, "Seed (overrides config)");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Diagnostics table for chain files");
  analyze->add_option("files", an.files, "Chain files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--observables", an.observables, "Observables (default: all)");
  analyze->add_option("--burn-in", an.burn_in, "Burn-in fraction (default: from file)")
      ->check(CLI::Range(0.0, 0.999999));
  analyze->add_option("--histogram", an.histogram, "Export a histogram of this observable");
  analyze->add_option("--bins", an.bins, "Histogram bins")->check(CLI::PositiveNumber);
  analyze->add_option("--range", an.range, "Histogram range lo hi")->expected(2);
  analyze->add_option("--histogram-out", an.histogram_out, "Histogram output path");

  std::string info_config;
  auto* info = app.add_subcommand("info", "Print the resolved configuration");
  info->add_option("config", info_config, "YAML config")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return do_run(run_args);
    if (*analyze) return do_analyze(an);
    if (*info) {
      std::cout << fes::describe(fes::parse_config(info_config));
      return 0;
    }
  } catch (const fes::ConfigError& e) {
    std::cerr << "fes: configuration error in '" << e.key() << "': " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fes: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
