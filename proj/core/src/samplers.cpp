// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "fes/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fes/chain_io.hpp"
#include "fes/error.hpp"
#include "fes/parallel.hpp"

namespace fes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

CoefficientMask mask_for(const SamplerConfig& config,
                         const TargetProblem& problem) {
  const std::size_t low = config.kind == SamplerKind::pcn ? 0 : config.M;
  return {low, problem.coef_dim};
}

// Cached-density evaluation of a proposed state.
struct Evaluated {
  double phi = kNegInf;
  double block = kNegInf;
};

Evaluated evaluate(const TargetProblem& problem, const ParameterState& state,
                   const CoefficientMask& mask) {
  Evaluated e;
  if (scalar_log_prior(problem, state.scalars) == kNegInf) return e;
  e.phi = log_likelihood(problem, state);
  e.block = block_density_from(problem, state, mask, e.phi);
  return e;
}

std::size_t draw_partner(std::size_t i, std::size_t L, Stream& rng) {
  const std::size_t r = rng.below(static_cast<std::uint32_t>(L - 1));
  return r < i ? r : r + 1;
}

StretchDraw draw_sequential(std::size_t i, std::size_t L, double a,
                            Stream& rng) {
  StretchDraw d;
  d.partner = draw_partner(i, L, rng);
  d.z = sample_stretch(a, rng);
  d.log_u = std::log(rng.uniform());
  return d;
}

StretchDraw draw_from_group(std::size_t first, std::size_t count, double a,
                            Stream& rng) {
  StretchDraw d;
  d.partner = first + rng.below(static_cast<std::uint32_t>(count));
  d.z = sample_stretch(a, rng);
  d.log_u = std::log(rng.uniform());
  return d;
}

std::size_t count_true(const std::vector<char>& flags) {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1));
}

// Runs `update(i, draw)` over every walker, either in index order against
// the live ensemble or in two halves, each against the frozen other half.
template <class Update>
AcceptanceCounter stretch_sweep(Ensemble& ensemble, const SamplerConfig& config,
                                const RngContext& ctx, Stage stage,
                                Update&& update) {
  const std::size_t L = ensemble.size();
  AcceptanceCounter counter;
  if (config.variant == AiesVariant::sequential) {
    for (std::size_t i = 0; i < L; ++i) {
      Stream rng = ctx.stream(i, stage);
      const StretchDraw draw = draw_sequential(i, L, config.a, rng);
      counter.add(update(i, draw, rng));
    }
    return counter;
  }
  const std::size_t half = L / 2;
  const std::size_t starts[2] = {0, half};
  const std::size_t sizes[2] = {half, L - half};
  for (int g = 0; g < 2; ++g) {
    const int other = 1 - g;
    std::vector<char> flags(sizes[g], 0);
    parallel_for(sizes[g], config.threads, [&](std::size_t k) {
      const std::size_t i = starts[g] + k;
      Stream rng = ctx.stream(i, stage);
      const StretchDraw draw =
          draw_from_group(starts[other], sizes[other], config.a, rng);
      flags[k] = update(i, draw, rng) ? 1 : 0;
    });
    counter.accepted += count_true(flags);
    counter.proposed += flags.size();
  }
  return counter;
}

void apply_stretch(ParameterState& prop, const ParameterState& partner,
                   std::size_t low, double z) {
  const double s = 1.0 - z;
  for (std::size_t k = 0; k < prop.scalars.size(); ++k)
    prop.scalars[k] += s * (partner.scalars[k] - prop.scalars[k]);
  for (std::size_t k = 0; k < low; ++k)
    prop.coefs[k] += s * (partner.coefs[k] - prop.coefs[k]);
}

}  // namespace

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::pcn: return "pcn";
    case SamplerKind::fes: return "fes";
    case SamplerKind::fes_joint: return "fes-joint";
    case SamplerKind::hybrid: return "hybrid";
  }
  return "?";
}

std::string to_string(AiesVariant variant) {
  return variant == AiesVariant::sequential ? "sequential" : "parallel";
}

std::string to_string(InitMode mode) {
  return mode == InitMode::prior ? "prior" : "ball";
}

IterationStats& IterationStats::operator+=(const IterationStats& o) {
  aies += o.aies;
  pcn += o.pcn;
  joint += o.joint;
  rw += o.rw;
  return *this;
}

std::size_t affine_dim(const TargetProblem& problem,
                       const CoefficientMask& mask) {
  return problem.scalar_dim() + mask.low;
}

void validate(const SamplerConfig& c, const TargetProblem& problem) {
  if (!(c.a >= 1.0)) throw InvalidArgument("stretch bound a must be >= 1");
  if (!(c.omega > 0.0 && c.omega <= 1.0))
    throw InvalidArgument("omega must lie in (0, 1]");
  if (c.L < 2) throw InvalidArgument("at least two walkers are required");
  if (!(c.burn_in_fraction >= 0.0 && c.burn_in_fraction < 1.0))
    throw InvalidArgument("burn-in fraction must lie in [0, 1)");
  if (!(c.target_rate > 0.0 && c.target_rate < 1.0))
    throw InvalidArgument("target acceptance rate must lie in (0, 1)");
  if (c.threads == 0) throw InvalidArgument("threads must be positive");
  if (c.kind != SamplerKind::pcn && c.M > problem.coef_dim)
    throw InvalidArgument("M=" + std::to_string(c.M) + " exceeds the " +
                          std::to_string(problem.coef_dim) +
                          " available KL modes");
  if (c.kind == SamplerKind::fes || c.kind == SamplerKind::fes_joint) {
    const std::size_t d = problem.scalar_dim() + c.M;
    if (c.L <= d)
      throw InvalidArgument("L=" + std::to_string(c.L) +
                            " walkers must exceed the affine dimension " +
                            std::to_string(d));
  }
  if (c.init == InitMode::ball) {
    if (!c.ball_center) throw InvalidArgument("ball initialization needs a center");
    check_dimensions(problem, *c.ball_center);
    if (!(c.ball_radius >= 0.0))
      throw InvalidArgument("ball radius must be nonnegative");
  }
}

Ensemble make_ensemble(const TargetProblem& problem,
                       const CoefficientMask& mask,
                       std::vector<ParameterState> states) {
  if (states.size() < 2)
    throw InvalidArgument("an ensemble needs at least two walkers");
  if (mask.total != problem.coef_dim)
    throw InvalidArgument("mask does not match problem");
  Ensemble e;
  e.walkers.reserve(states.size());
  for (std::size_t w = 0; w < states.size(); ++w) {
    check_dimensions(problem, states[w]);
    const Evaluated ev = evaluate(problem, states[w], mask);
    if (!std::isfinite(ev.block))
      throw InitializationError("walker " + std::to_string(w) +
                                " starts at a state with non-finite log density");
    e.walkers.push_back({std::move(states[w]), ev.phi, ev.block});
  }
  return e;
}

Ensemble initialize_ensemble(const TargetProblem& problem,
                             const CoefficientMask& mask,
                             const SamplerConfig& config) {
  std::vector<ParameterState> states(config.L);
  for (std::size_t w = 0; w < config.L; ++w) {
    Stream rng(config.seed, static_cast<std::uint32_t>(w), 0, Stage::init);
    ParameterState& s = states[w];
    if (config.init == InitMode::ball) {
      s = *config.ball_center;
      for (auto& v : s.scalars) v += config.ball_radius * rng.normal();
      for (auto& v : s.coefs) v += config.ball_radius * rng.normal();
    } else {
      s.scalars = problem.sample_scalars
                      ? problem.sample_scalars(rng)
                      : std::vector<double>(problem.scalar_dim(), 0.0);
      s.coefs = sample_prior_coefficients(problem.coef_dim, rng);
    }
  }
  return make_ensemble(problem, mask, std::move(states));
}

void verify_caches(const Ensemble& ensemble, const TargetProblem& problem,
                   const CoefficientMask& mask) {
  for (std::size_t w = 0; w < ensemble.size(); ++w) {
    const Walker& walker = ensemble.walkers[w];
    const Evaluated ev = evaluate(problem, walker.state, mask);
    auto close = [](double x, double y) {
      return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y));
    };
    if (!close(walker.log_likelihood, ev.phi) ||
        !close(walker.block_log_density, ev.block))
      throw NumericalError("cached density of walker " + std::to_string(w) +
                           " differs from recomputation");
  }
}

double stretch_from_uniform(double a, double u) {
  if (!(a >= 1.0)) throw InvalidArgument("stretch bound a must be >= 1");
  const double lo = 1.0 / std::sqrt(a);
  const double r = u * (std::sqrt(a) - lo) + lo;
  return r * r;
}

double sample_stretch(double a, Stream& rng) {
  return stretch_from_uniform(a, rng.uniform());
}

bool aies_block_update(Ensemble& ensemble, std::size_t i,
                       const TargetProblem& problem,
                       const CoefficientMask& mask, const StretchDraw& draw) {
  if (draw.partner == i || draw.partner >= ensemble.size())
    throw InvalidArgument("stretch partner must be a different walker");
  Walker& walker = ensemble.walkers[i];
  const std::size_t d = affine_dim(problem, mask);
  if (d == 0) return false;

  ParameterState prop = walker.state;
  apply_stretch(prop, ensemble.walkers[draw.partner].state, mask.low, draw.z);
  const Evaluated ev = evaluate(problem, prop, mask);
  const double log_ratio = static_cast<double>(d - 1) * std::log(draw.z) +
                           ev.block - walker.block_log_density;
  if (!(draw.log_u < log_ratio)) return false;
  walker.state = std::move(prop);
  walker.log_likelihood = ev.phi;
  walker.block_log_density = ev.block;
  return true;
}

bool aies_block_update(Ensemble& ensemble, std::size_t i,
                       const TargetProblem& problem,
                       const CoefficientMask& mask, double a, Stream& rng) {
  const StretchDraw draw = draw_sequential(i, ensemble.size(), a, rng);
  return aies_block_update(ensemble, i, problem, mask, draw);
}

bool pcn_complement_update(Walker& walker, const TargetProblem& problem,
                           const CoefficientMask& mask, double omega,
                           Stream& rng) {
  if (!(omega > 0.0 && omega <= 1.0))
    throw InvalidArgument("omega must lie in (0, 1]");
  if (mask.high() == 0) return false;
  ParameterState prop = walker.state;
  const double keep = std::sqrt(1.0 - omega * omega);
  for (std::size_t k = mask.low; k < mask.total; ++k)
    prop.coefs[k] = keep * prop.coefs[k] + omega * rng.normal();
  const double phi = log_likelihood(problem, prop);
  const double log_u = std::log(rng.uniform());
  if (!(log_u < phi - walker.log_likelihood)) return false;
  walker.block_log_density = block_density_from(problem, prop, mask, phi);
  walker.log_likelihood = phi;
  walker.state = std::move(prop);
  return true;
}

AcceptanceCounter aies_stage(Ensemble& ensemble, const TargetProblem& problem,
                             const CoefficientMask& mask,
                             const SamplerConfig& config,
                             const RngContext& ctx) {
  if (affine_dim(problem, mask) == 0) return {};
  return stretch_sweep(ensemble, config, ctx, Stage::aies,
                       [&](std::size_t i, const StretchDraw& draw, Stream&) {
                         return aies_block_update(ensemble, i, problem, mask,
                                                  draw);
                       });
}

AcceptanceCounter pcn_stage(Ensemble& ensemble, const TargetProblem& problem,
                            const CoefficientMask& mask, double omega,
                            const SamplerConfig& config,
                            const RngContext& ctx) {
  if (mask.high() == 0) return {};
  std::vector<char> flags(ensemble.size(), 0);
  parallel_for(ensemble.size(), config.threads, [&](std::size_t i) {
    Stream rng = ctx.stream(i, Stage::pcn);
    flags[i] = pcn_complement_update(ensemble.walkers[i], problem, mask, omega,
                                     rng)
                   ? 1
                   : 0;
  });
  return {count_true(flags), flags.size()};
}

IterationStats fes_iteration(Ensemble& ensemble, const TargetProblem& problem,
                             const CoefficientMask& mask,
                             const SamplerConfig& config, double omega,
                             const RngContext& ctx) {
  IterationStats stats;
  stats.aies = aies_stage(ensemble, problem, mask, config, ctx);
  stats.pcn = pcn_stage(ensemble, problem, mask, omega, config, ctx);
  return stats;
}

bool joint_update(Ensemble& ensemble, std::size_t i,
                  const TargetProblem& problem, const CoefficientMask& mask,
                  double omega, const StretchDraw& draw, Stream& rng) {
  if (draw.partner == i || draw.partner >= ensemble.size())
    throw InvalidArgument("stretch partner must be a different walker");
  Walker& walker = ensemble.walkers[i];
  const std::size_t d = affine_dim(problem, mask);
  ParameterState prop = walker.state;
  double log_ratio = 0.0;
  if (d > 0) {
    apply_stretch(prop, ensemble.walkers[draw.partner].state, mask.low, draw.z);
    log_ratio += static_cast<double>(d - 1) * std::log(draw.z);
  }
  const double keep = std::sqrt(1.0 - omega * omega);
  for (std::size_t k = mask.low; k < mask.total; ++k)
    prop.coefs[k] = keep * prop.coefs[k] + omega * rng.normal();
  const Evaluated ev = evaluate(problem, prop, mask);
  log_ratio += ev.block - walker.block_log_density;
  if (!(draw.log_u < log_ratio)) return false;
  walker.state = std::move(prop);
  walker.log_likelihood = ev.phi;
  walker.block_log_density = ev.block;
  return true;
}

IterationStats fes_joint_iteration(Ensemble& ensemble,
                                   const TargetProblem& problem,
                                   const CoefficientMask& mask,
                                   const SamplerConfig& config, double omega,
                                   const RngContext& ctx) {
  IterationStats stats;
  stats.joint = stretch_sweep(
      ensemble, config, ctx, Stage::joint,
      [&](std::size_t i, const StretchDraw& draw, Stream& rng) {
        return joint_update(ensemble, i, problem, mask, omega, draw, rng);
      });
  return stats;
}

bool pcn_joint_update(Walker& walker, const TargetProblem& problem,
                      double omega, Stream& rng) {
  const CoefficientMask mask(0, problem.coef_dim);
  ParameterState prop = walker.state;
  for (std::size_t k = 0; k < prop.scalars.size(); ++k) {
    const double step = k < problem.scalar_step.size() ? problem.scalar_step[k] : 1.0;
    prop.scalars[k] += omega * step * rng.normal();
  }
  const double keep = std::sqrt(1.0 - omega * omega);
  for (auto& v : prop.coefs) v = keep * v + omega * rng.normal();
  const Evaluated ev = evaluate(problem, prop, mask);
  const double log_u = std::log(rng.uniform());
  if (!(log_u < ev.block - walker.block_log_density)) return false;
  walker.state = std::move(prop);
  walker.log_likelihood = ev.phi;
  walker.block_log_density = ev.block;
  return true;
}

IterationStats pcn_iteration(Ensemble& ensemble, const TargetProblem& problem,
                             const SamplerConfig& config, double omega,
                             const RngContext& ctx) {
  std::vector<char> flags(ensemble.size(), 0);
  parallel_for(ensemble.size(), config.threads, [&](std::size_t i) {
    Stream rng = ctx.stream(i, Stage::pcn);
    flags[i] = pcn_joint_update(ensemble.walkers[i], problem, omega, rng) ? 1 : 0;
  });
  IterationStats stats;
  stats.pcn = {count_true(flags), flags.size()};
  return stats;
}

AdaptState::AdaptState(std::size_t dim)
    : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
      m2_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                static_cast<Eigen::Index>(dim))) {}

void AdaptState::push(std::span<const double> x) {
  if (x.size() != dim()) throw InvalidArgument("AdaptState: dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), mean_.size());
  ++count_;
  const Eigen::VectorXd delta = v - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_.noalias() += delta * (v - mean_).transpose();
}

Eigen::MatrixXd AdaptState::covariance() const {
  if (count_ < 2) return Eigen::MatrixXd::Zero(mean_.size(), mean_.size());
  return m2_ / static_cast<double>(count_ - 1);
}

Eigen::MatrixXd AdaptState::proposal_covariance() const {
  const auto d = mean_.size();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  if (d == 0) return eye;
  const double dd = static_cast<double>(d);
  if (count_ < kWarmup) return (kInitialScale * kInitialScale / dd) * eye;
  return (kScale * kScale / dd) * covariance() + kRidge * eye;
}

HybridStats hybrid_iteration(Walker& walker, const TargetProblem& problem,
                             const CoefficientMask& mask, AdaptState& adapt,
                             double omega, Stream& rw_rng, Stream& pcn_rng) {
  HybridStats stats;
  const std::size_t d = affine_dim(problem, mask);
  if (adapt.dim() != d) throw InvalidArgument("AdaptState dimension mismatch");
  if (d > 0) {
    const Eigen::LLT<Eigen::MatrixXd> chol(adapt.proposal_covariance());
    if (chol.info() != Eigen::Success)
      throw NumericalError("hybrid proposal covariance is not positive definite");
    Eigen::VectorXd noise(static_cast<Eigen::Index>(d));
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise(k) = rw_rng.normal();
    const Eigen::VectorXd step = chol.matrixL() * noise;
    ParameterState prop = walker.state;
    const std::size_t sd = problem.scalar_dim();
    for (std::size_t k = 0; k < sd; ++k)
      prop.scalars[k] += step(static_cast<Eigen::Index>(k));
    for (std::size_t k = 0; k < mask.low; ++k)
      prop.coefs[k] += step(static_cast<Eigen::Index>(sd + k));
    const Evaluated ev = evaluate(problem, prop, mask);
    const double log_u = std::log(rw_rng.uniform());
    if (log_u < ev.block - walker.block_log_density) {
      walker.state = std::move(prop);
      walker.log_likelihood = ev.phi;
      walker.block_log_density = ev.block;
      stats.rw_accepted = true;
    }
  }
  if (mask.high() > 0) {
    stats.pcn_proposed = true;
    stats.pcn_accepted =
        pcn_complement_update(walker, problem, mask, omega, pcn_rng);
  }
  adapt.push(split_state(walker.state, mask).affine);
  return stats;
}

double autotune_omega(const AcceptanceCounter& batch, double omega,
                      double target) {
  if (batch.proposed == 0) return omega;
  const double next = omega * std::exp(batch.rate() - target);
  return std::clamp(next, kOmegaMin, kOmegaMax);
}

ChainRecord run_sampler(const TargetProblem& problem,
                        const SamplerConfig& config,
                        const std::vector<std::string>& observables) {
  std::vector<Observable> resolved;
  resolved.reserve(observables.size());
  for (const auto& name : observables)
    resolved.push_back({name, resolve_observable(problem, name)});
  return run_sampler(problem, config, resolved);
}

ChainRecord run_sampler(const TargetProblem& problem,
                        const SamplerConfig& config,
                        const std::vector<Observable>& observables) {
  validate(config, problem);
  const CoefficientMask mask = mask_for(config, problem);
  Ensemble ensemble = initialize_ensemble(problem, mask, config);
  const std::size_t L = ensemble.size();

  ChainRecord record;
  record.walkers = L;
  record.rows = config.iterations + 1;
  record.burn_in_fraction = config.burn_in_fraction;
  for (const auto& o : observables) {
    record.names.push_back(o.name);
    record.values.emplace_back();
    record.values.back().reserve(record.rows * L);
  }
  auto snapshot = [&] {
    for (std::size_t k = 0; k < observables.size(); ++k)
      for (const Walker& w : ensemble.walkers)
        record.values[k].push_back(observables[k].fn(w.state));
  };
  snapshot();

  std::vector<AdaptState> adapt;
  if (config.kind == SamplerKind::hybrid)
    adapt.assign(L, AdaptState(affine_dim(problem, mask)));

  const std::size_t burn = burn_in_count(config.iterations, config.burn_in_fraction);
  double omega = config.omega;
  IterationStats overall, sampling;
  AcceptanceCounter batch;

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    const RngContext ctx{config.seed, static_cast<std::uint32_t>(t)};
    IterationStats stats;
    switch (config.kind) {
      case SamplerKind::fes:
        stats = fes_iteration(ensemble, problem, mask, config, omega, ctx);
        break;
      case SamplerKind::fes_joint:
        stats = fes_joint_iteration(ensemble, problem, mask, config, omega, ctx);
        break;
      case SamplerKind::pcn:
        stats = pcn_iteration(ensemble, problem, config, omega, ctx);
        break;
      case SamplerKind::hybrid: {
        std::vector<HybridStats> hs(L);
        parallel_for(L, config.threads, [&](std::size_t i) {
          Stream rw = ctx.stream(i, Stage::hybrid);
          Stream pc = ctx.stream(i, Stage::pcn);
          hs[i] = hybrid_iteration(ensemble.walkers[i], problem, mask, adapt[i],
                                   omega, rw, pc);
        });
        for (const auto& h : hs) {
          if (affine_dim(problem, mask) > 0) stats.rw.add(h.rw_accepted);
          if (h.pcn_proposed) stats.pcn.add(h.pcn_accepted);
        }
        break;
      }
    }
    overall += stats;
    if (t > burn) sampling += stats;

    if (config.autotune && t <= burn) {
      batch += config.kind == SamplerKind::fes_joint ? stats.joint : stats.pcn;
      if (t % kTuneBatch == 0) {
        if (batch.proposed > 0) {
          omega = autotune_omega(batch, omega, config.target_rate);
          record.tuning.push_back({t, batch.rate(), omega});
        }
        batch = {};
      }
    }
    if (config.check_caches) verify_caches(ensemble, problem, mask);
    snapshot();
  }

  const IterationStats& reported = sampling.aies.proposed + sampling.pcn.proposed +
                                               sampling.joint.proposed +
                                               sampling.rw.proposed >
                                           0
                                       ? sampling
                                       : overall;
  auto put = [&](const char* name, const AcceptanceCounter& c) {
    if (c.proposed > 0) record.acceptance[name] = c.rate();
  };
  put("aies", reported.aies);
  put("pcn", reported.pcn);
  put("joint", reported.joint);
  put("rw", reported.rw);
  record.omega = omega;

  record.meta["problem"] = problem.label;
  record.meta["sampler"] = to_string(config.kind);
  record.meta["seed"] = std::to_string(config.seed);
  record.meta["walkers"] = std::to_string(L);
  record.meta["iterations"] = std::to_string(config.iterations);
  record.meta["M"] = std::to_string(mask.low);
  record.meta["a"] = format_double(config.a);
  record.meta["omega_initial"] = format_double(config.omega);
  record.meta["aies_variant"] = to_string(config.variant);
  return record;
}

}  // namespace fes
