// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "fes/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "fes/chain_io.hpp"
#include "fes/error.hpp"
#include "fes/problems.hpp"

namespace fes {

namespace {

template <class T>
T scalar_field(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(key, "cannot parse value '" + YAML::Dump(node) + "'");
  }
}

SamplerKind parse_sampler(const std::string& s) {
  if (s == "pcn") return SamplerKind::pcn;
  if (s == "fes") return SamplerKind::fes;
  if (s == "fes-joint" || s == "fes_joint") return SamplerKind::fes_joint;
  if (s == "hybrid") return SamplerKind::hybrid;
  throw ConfigError("sampler", "unknown sampler '" + s +
                                   "' (expected pcn, fes, fes-joint or hybrid)");
}

std::size_t scalar_dim_of(const std::string& problem) {
  return problem == "langevin" ? 2 : 1;
}

void check_config(const ExperimentConfig& c) {
  if (c.problem != "advection" && c.problem != "langevin")
    throw ConfigError("problem", "unknown problem '" + c.problem +
                                     "' (expected advection or langevin)");
  if (!(c.a >= 1.0)) throw ConfigError("a", "stretch bound must be >= 1");
  if (!(c.omega > 0.0 && c.omega <= 1.0))
    throw ConfigError("omega", "must lie in (0, 1]");
  if (c.L < 2) throw ConfigError("L", "at least two walkers are required");
  if (!(c.burn_in_fraction >= 0.0 && c.burn_in_fraction < 1.0))
    throw ConfigError("burn_in", "must lie in [0, 1)");
  if (!(c.target_rate > 0.0 && c.target_rate < 1.0))
    throw ConfigError("target_rate", "must lie in (0, 1)");
  if (c.threads == 0) throw ConfigError("threads", "must be positive");
  if (!(c.init_radius >= 0.0)) throw ConfigError("init_radius", "must be >= 0");
  if (c.sampler == SamplerKind::fes || c.sampler == SamplerKind::fes_joint) {
    const std::size_t d = scalar_dim_of(c.problem) + c.M;
    if (c.L <= d)
      throw ConfigError("L", "L=" + std::to_string(c.L) +
                                 " must exceed scalar_dim + M = " +
                                 std::to_string(d));
  }
}

std::string tracked_list(const std::vector<std::string>& names) {
  std::string s = "[";
  for (std::size_t k = 0; k < names.size(); ++k) s += (k ? ", " : "") + names[k];
  return s + "]";
}

SamplerConfig to_sampler_config(const ExperimentConfig& c) {
  SamplerConfig s;
  s.kind = c.sampler;
  s.a = c.a;
  s.omega = c.omega;
  s.M = c.M;
  s.L = c.L;
  s.iterations = c.iterations;
  s.seed = c.seed;
  s.autotune = c.autotune;
  s.target_rate = c.target_rate;
  s.burn_in_fraction = c.burn_in_fraction;
  s.variant = c.aies_variant;
  s.threads = c.threads;
  s.init = c.init;
  s.ball_radius = c.init_radius;
  return s;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<file>", std::string("malformed YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("<file>", "expected a key/value mapping");

  ExperimentConfig c;
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "problem") {
      c.problem = scalar_field<std::string>(v, key);
    } else if (key == "sampler") {
      c.sampler = parse_sampler(scalar_field<std::string>(v, key));
    } else if (key == "M") {
      c.M = scalar_field<std::size_t>(v, key);
    } else if (key == "L") {
      c.L = scalar_field<std::size_t>(v, key);
    } else if (key == "a") {
      c.a = scalar_field<double>(v, key);
    } else if (key == "omega") {
      c.omega = scalar_field<double>(v, key);
    } else if (key == "iterations") {
      c.iterations = scalar_field<std::size_t>(v, key);
    } else if (key == "seed") {
      c.seed = scalar_field<std::uint64_t>(v, key);
    } else if (key == "data_seed") {
      c.data_seed = scalar_field<std::uint64_t>(v, key);
    } else if (key == "burn_in" || key == "burn_in_fraction") {
      c.burn_in_fraction = scalar_field<double>(v, key);
    } else if (key == "autotune") {
      c.autotune = scalar_field<bool>(v, key);
    } else if (key == "target_rate") {
      c.target_rate = scalar_field<double>(v, key);
    } else if (key == "init") {
      const auto s = scalar_field<std::string>(v, key);
      if (s == "prior") c.init = InitMode::prior;
      else if (s == "ball") c.init = InitMode::ball;
      else throw ConfigError(key, "unknown init mode '" + s + "' (expected prior or ball)");
    } else if (key == "init_center") {
      c.init_center = scalar_field<std::string>(v, key);
      if (!c.init_center.empty() && c.init_center != "truth" &&
          std::filesystem::path(c.init_center).is_relative() && !base_dir.empty())
        c.init_center = (base_dir / c.init_center).string();
    } else if (key == "init_radius") {
      c.init_radius = scalar_field<double>(v, key);
    } else if (key == "grid_size") {
      c.grid_size = scalar_field<std::size_t>(v, key);
    } else if (key == "extend_domain") {
      c.extend_domain = scalar_field<bool>(v, key);
    } else if (key == "exp_prior") {
      const auto s = scalar_field<std::string>(v, key);
      if (s == "mean") c.exp_prior = ExpConvention::mean;
      else if (s == "rate") c.exp_prior = ExpConvention::rate;
      else throw ConfigError(key, "unknown convention '" + s + "' (expected mean or rate)");
    } else if (key == "aies_variant") {
      const auto s = scalar_field<std::string>(v, key);
      if (s == "sequential") c.aies_variant = AiesVariant::sequential;
      else if (s == "parallel") c.aies_variant = AiesVariant::parallel;
      else throw ConfigError(key, "unknown variant '" + s + "' (expected sequential or parallel)");
    } else if (key == "threads") {
      c.threads = scalar_field<unsigned>(v, key);
    } else if (key == "tracked") {
      if (!v.IsSequence()) throw ConfigError(key, "expected a list of observable names");
      c.tracked.clear();
      for (const auto& item : v) c.tracked.push_back(scalar_field<std::string>(item, key));
    } else if (key == "output") {
      c.output = scalar_field<std::string>(v, key);
    } else {
      throw ConfigError(key, "unknown configuration key");
    }
  }
  check_config(c);
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError(file.string() + ": cannot open configuration");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), file.parent_path());
}

std::string describe(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "problem: " << c.problem << '\n'
     << "sampler: " << to_string(c.sampler) << '\n'
     << "M: " << c.M << '\n'
     << "L: " << c.L << '\n'
     << "a: " << format_double(c.a) << '\n'
     << "omega: " << format_double(c.omega) << '\n'
     << "iterations: " << c.iterations << '\n'
     << "seed: " << c.seed << '\n'
     << "data_seed: " << c.data_seed.value_or(c.seed) << '\n'
     << "burn_in: " << format_double(c.burn_in_fraction) << '\n'
     << "autotune: " << (c.autotune ? "true" : "false") << '\n'
     << "target_rate: " << format_double(c.target_rate) << '\n'
     << "init: " << to_string(c.init) << '\n';
  if (c.init == InitMode::ball)
    os << "init_center: " << (c.init_center.empty() ? "truth" : c.init_center) << '\n'
       << "init_radius: " << format_double(c.init_radius) << '\n';
  os << "grid_size: " << (c.grid_size == 0 ? 200 : c.grid_size) << '\n';
  if (c.problem == "advection")
    os << "extend_domain: " << (c.extend_domain ? "true" : "false") << '\n';
  else
    os << "exp_prior: " << to_string(c.exp_prior) << '\n';
  os
     << "aies_variant: " << to_string(c.aies_variant) << '\n'
     << "threads: " << c.threads << '\n';
  if (!c.tracked.empty()) os << "tracked: " << tracked_list(c.tracked) << '\n';
  os << "output: " << c.output << '\n';
  return os.str();
}

std::vector<std::string> default_tracked(const TargetProblem& problem) {
  std::vector<std::string> names = problem.scalar_names;
  for (std::size_t i : {1, 5})
    if (i <= problem.coef_dim) names.push_back("eta_" + std::to_string(i));
  return names;
}

ParameterState read_state(const std::filesystem::path& file) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(file.string());
  } catch (const YAML::Exception& e) {
    throw IoError(file.string() + ": " + e.what());
  }
  ParameterState s;
  try {
    if (root["scalars"]) s.scalars = root["scalars"].as<std::vector<double>>();
    if (root["coefs"]) s.coefs = root["coefs"].as<std::vector<double>>();
  } catch (const YAML::Exception& e) {
    throw ConfigError("init_center", file.string() + ": " + e.what());
  }
  return s;
}

RunOutputs run_experiment(const ExperimentConfig& config) {
  check_config(config);
  ProblemOptions popt;
  popt.grid_size = config.grid_size;
  popt.extend_domain = config.extend_domain;
  popt.exp_prior = config.exp_prior;
  const ProblemInstance instance =
      make_problem(config.problem, config.data_seed.value_or(config.seed), popt);
  const TargetProblem& problem = instance.target;

  SamplerConfig sc = to_sampler_config(config);
  if (config.init == InitMode::ball) {
    if (config.init_center.empty() || config.init_center == "truth") {
      if (!instance.truth)
        throw ConfigError("init_center",
                          "problem has no data-generating state; supply a center file");
      sc.ball_center = instance.truth;
    } else {
      sc.ball_center = read_state(config.init_center);
    }
  }
  const auto tracked = config.tracked.empty() ? default_tracked(problem) : config.tracked;
  for (const auto& name : tracked) {
    try {
      resolve_observable(problem, name);
    } catch (const InvalidArgument& e) {
      throw ConfigError("tracked", e.what());
    }
  }
  try {
    validate(sc, problem);
  } catch (const InvalidArgument& e) {
    throw ConfigError("sampler", e.what());
  }

  RunOutputs out;
  out.record = run_sampler(problem, sc, tracked);
  out.record.meta["grid_size"] =
      std::to_string(config.grid_size == 0 ? 200 : config.grid_size);
  out.record.meta["basis_nodes"] =
      std::to_string(problem.basis ? problem.basis->grid_size() : 0);
  out.record.meta["data_seed"] = std::to_string(config.data_seed.value_or(config.seed));
  out.record.meta["init"] = to_string(config.init);
  if (config.problem == "advection")
    out.record.meta["extend_domain"] = config.extend_domain ? "true" : "false";
  else
    out.record.meta["exp_prior"] = to_string(config.exp_prior);

  const std::filesystem::path base(config.output);
  if (base.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(base.parent_path(), ec);
    if (ec)
      throw IoError(base.parent_path().string() + ": cannot create directory (" +
                    ec.message() + ")");
  }
  out.chain = base.string() + ".chain.tsv";
  out.summary = base.string() + ".summary.txt";
  out.data = base.string() + ".data.tsv";
  write_chain(out.chain, out.record);
  write_dataset(out.data, instance.data);

  std::ofstream summary(out.summary);
  if (!summary) throw IoError(out.summary.string() + ": cannot open for writing");
  summary << format_run_summary(out.record) << '\n'
          << format_table(analyze_record(out.record, tracked, out.chain.filename().string()));
  if (!summary) throw IoError(out.summary.string() + ": write failed");
  return out;
}

std::vector<DiagnosticsRow> analyze_record(const ChainRecord& record,
                                           const std::vector<std::string>& observables,
                                           const std::string& source,
                                           const AnalysisOptions& options) {
  ChainRecord rec = record;
  if (options.burn_in_fraction) rec.burn_in_fraction = *options.burn_in_fraction;
  const auto names = observables.empty() ? rec.names : observables;
  std::vector<DiagnosticsRow> rows;
  for (const auto& name : names) {
    const auto series = rec.post_burn_in(rec.observable_index(name));
    DiagnosticsRow row;
    row.source = source;
    row.observable = name;
    std::vector<double> pooled;
    for (const auto& w : series) pooled.insert(pooled.end(), w.begin(), w.end());
    row.samples = pooled.size();
    row.acceptance = rec.acceptance;
    row.omega = rec.omega;
    if (pooled.empty()) {
      rows.push_back(row);
      continue;
    }
    row.mean = mean(pooled);
    try {
      const double tau = iat_sokal(series, options.sokal);
      row.tau = tau;
      row.n_eff = static_cast<double>(pooled.size()) / tau;
      row.std_error = std::sqrt(tau * variance(pooled) /
                                static_cast<double>(pooled.size()));
    } catch (const ChainTooShort& e) {
      row.tau_lower_bound = e.lower_bound();
    } catch (const DegenerateSeries&) {
      row.tau_lower_bound = 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<DiagnosticsRow> analyze(const std::vector<std::filesystem::path>& files,
                                    const std::vector<std::string>& observables,
                                    const AnalysisOptions& options) {
  std::vector<DiagnosticsRow> rows;
  for (const auto& f : files) {
    const ChainRecord rec = read_chain(f);
    auto part = analyze_record(rec, observables, f.filename().string(), options);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

Histogram chain_histogram(const ChainRecord& record, const std::string& observable,
                          std::size_t bins, std::optional<std::pair<double, double>> range,
                          std::optional<double> burn_in_fraction) {
  ChainRecord rec = record;
  if (burn_in_fraction) rec.burn_in_fraction = *burn_in_fraction;
  std::vector<double> pooled;
  for (const auto& w : rec.post_burn_in(rec.observable_index(observable)))
    pooled.insert(pooled.end(), w.begin(), w.end());
  if (pooled.empty()) throw InvalidArgument("histogram: no samples after burn-in");
  if (!range) {
    const auto [lo, hi] = std::minmax_element(pooled.begin(), pooled.end());
    range = {*lo, *hi > *lo ? *hi : *lo + 1.0};
  }
  return histogram(pooled, bins, range->first, range->second);
}

void write_histogram(const std::filesystem::path& path, const Histogram& h) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "lo\thi\tcenter\tcount\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double lo = h.lo + static_cast<double>(b) * h.bin_width();
    out << format_double(lo) << '\t' << format_double(lo + h.bin_width()) << '\t'
        << format_double(h.center(b)) << '\t' << h.counts[b] << '\n';
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

std::string format_table(const std::vector<DiagnosticsRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(28) << "source" << std::setw(14) << "observable"
     << std::right << std::setw(14) << "tau" << std::setw(14) << "n_eff"
     << std::setw(16) << "mean" << std::setw(14) << "std_error" << "  "
     << std::left << std::setw(32) << "acceptance" << "omega" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(28) << r.source << std::setw(14) << r.observable
       << std::right << std::setprecision(6);
    if (r.tau) {
      os << std::setw(14) << *r.tau << std::setw(14) << *r.n_eff;
    } else {
      std::ostringstream bound;
      bound << std::setprecision(6) << ">" << r.tau_lower_bound;
      os << std::setw(14) << bound.str() << std::setw(14) << "n/a";
    }
    os << std::setw(16) << r.mean << std::setw(14);
    if (r.tau) os << r.std_error;
    else os << "n/a";
    std::string acc;
    for (const auto& [stage, rate] : r.acceptance) {
      std::ostringstream one;
      one << std::setprecision(3) << stage << '=' << rate;
      acc += (acc.empty() ? "" : ",") + one.str();
    }
    os << "  " << std::left << std::setw(32) << (acc.empty() ? "-" : acc)
       << std::setprecision(4) << r.omega << '\n';
  }
  return os.str();
}

std::string format_run_summary(const ChainRecord& record) {
  std::ostringstream os;
  for (const auto& [k, v] : record.meta) os << k << ' ' << v << '\n';
  os << "burn_in_fraction " << format_double(record.burn_in_fraction) << '\n';
  os << "omega " << format_double(record.omega) << '\n';
  for (const auto& [stage, rate] : record.acceptance)
    os << "acceptance " << stage << ' ' << format_double(rate) << '\n';
  return os.str();
}

}  // namespace fes
