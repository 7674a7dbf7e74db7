// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fes/diagnostics.hpp"
#include "fes/kl.hpp"
#include "fes/rng.hpp"
#include "fes/target.hpp"

namespace fes {

enum class SamplerKind { pcn, fes, fes_joint, hybrid };
enum class AiesVariant { sequential, parallel };
enum class InitMode { prior, ball };

std::string to_string(SamplerKind kind);
std::string to_string(AiesVariant variant);
std::string to_string(InitMode mode);

struct SamplerConfig {
  SamplerKind kind = SamplerKind::fes;
  double a = 2.0;         // stretch bound
  double omega = 0.1;     // initial PCN step
  std::size_t M = 5;      // low-wavenumber modes sampled by AIES
  std::size_t L = 100;    // walkers
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  bool autotune = true;
  double target_rate = 0.20;
  double burn_in_fraction = 0.10;
  AiesVariant variant = AiesVariant::sequential;
  unsigned threads = 1;
  InitMode init = InitMode::prior;
  std::optional<ParameterState> ball_center;
  double ball_radius = 0.01;
  /// Recompute every cached density after each iteration and throw on drift.
  bool check_caches = false;
};

/// Throws InvalidArgument when the config is inconsistent with the problem.
void validate(const SamplerConfig& config, const TargetProblem& problem);

/// Dimension of the AIES block: scalars plus the first M coefficients.
std::size_t affine_dim(const TargetProblem& problem, const CoefficientMask& mask);

struct Walker {
  ParameterState state;
  double log_likelihood = 0.0;
  double block_log_density = 0.0;
};

struct Ensemble {
  std::vector<Walker> walkers;
  std::size_t size() const { return walkers.size(); }
};

/// Builds an ensemble and fills its caches. Throws InitializationError if any
/// walker has non-finite log density.
Ensemble make_ensemble(const TargetProblem& problem, const CoefficientMask& mask,
                       std::vector<ParameterState> states);

/// Initial ensemble from the prior or from a Gaussian ball.
Ensemble initialize_ensemble(const TargetProblem& problem,
                             const CoefficientMask& mask,
                             const SamplerConfig& config);

/// Throws NumericalError when a cached value differs from recomputation.
void verify_caches(const Ensemble& ensemble, const TargetProblem& problem,
                   const CoefficientMask& mask);

struct AcceptanceCounter {
  std::size_t accepted = 0;
  std::size_t proposed = 0;

  void add(bool accept) {
    ++proposed;
    accepted += accept ? 1 : 0;
  }
  double rate() const {
    return proposed == 0 ? 0.0
                         : static_cast<double>(accepted) /
                               static_cast<double>(proposed);
  }
  AcceptanceCounter& operator+=(const AcceptanceCounter& o) {
    accepted += o.accepted;
    proposed += o.proposed;
    return *this;
  }
};

struct IterationStats {
  AcceptanceCounter aies;
  AcceptanceCounter pcn;
  AcceptanceCounter joint;
  AcceptanceCounter rw;

  IterationStats& operator+=(const IterationStats& o);
};

// --- stretch move ----------------------------------------------------------

/// Inverse CDF of g(z) ~ 1/sqrt(z) on [1/a, a].
double stretch_from_uniform(double a, double u);
double sample_stretch(double a, Stream& rng);

/// Explicit randomness of one stretch move.
struct StretchDraw {
  std::size_t partner = 0;
  double z = 1.0;
  double log_u = -1.0;  // log of the uniform used for accept/reject
};

/// Stretch move of walker i's affine block toward/away from `draw.partner`;
/// the high coefficients stay fixed. Accepts with probability
/// min(1, Z^(d-1) pi(X~)/pi(X)), d = scalar_dim + mask.low.
bool aies_block_update(Ensemble& ensemble, std::size_t i,
                       const TargetProblem& problem,
                       const CoefficientMask& mask, const StretchDraw& draw);

/// As above with the partner drawn uniformly from the other L - 1 walkers.
bool aies_block_update(Ensemble& ensemble, std::size_t i,
                       const TargetProblem& problem,
                       const CoefficientMask& mask, double a, Stream& rng);

/// PCN move on the high coefficients: sqrt(1 - w^2) u + w xi, accepted with
/// probability min(1, exp(phi(X~) - phi(X))).
bool pcn_complement_update(Walker& walker, const TargetProblem& problem,
                           const CoefficientMask& mask, double omega,
                           Stream& rng);

/// AIES sweep over every walker (sequential or two-group variant).
AcceptanceCounter aies_stage(Ensemble& ensemble, const TargetProblem& problem,
                             const CoefficientMask& mask,
                             const SamplerConfig& config, const RngContext& ctx);

/// PCN sweep over every walker.
AcceptanceCounter pcn_stage(Ensemble& ensemble, const TargetProblem& problem,
                            const CoefficientMask& mask, double omega,
                            const SamplerConfig& config, const RngContext& ctx);

/// One full cycle: L AIES updates then L PCN updates.
IterationStats fes_iteration(Ensemble& ensemble, const TargetProblem& problem,
                             const CoefficientMask& mask,
                             const SamplerConfig& config, double omega,
                             const RngContext& ctx);

/// Joint stretch + PCN proposal with a single accept/reject per walker.
bool joint_update(Ensemble& ensemble, std::size_t i,
                  const TargetProblem& problem, const CoefficientMask& mask,
                  double omega, const StretchDraw& draw, Stream& rng);

IterationStats fes_joint_iteration(Ensemble& ensemble,
                                   const TargetProblem& problem,
                                   const CoefficientMask& mask,
                                   const SamplerConfig& config, double omega,
                                   const RngContext& ctx);

/// PCN baseline: PCN on every coefficient plus a Gaussian random walk of
/// scale omega * scalar_step on the scalars, one accept/reject.
bool pcn_joint_update(Walker& walker, const TargetProblem& problem,
                      double omega, Stream& rng);

IterationStats pcn_iteration(Ensemble& ensemble, const TargetProblem& problem,
                             const SamplerConfig& config, double omega,
                             const RngContext& ctx);

/// Running mean and covariance of the affine block for the hybrid sampler.
class AdaptState {
 public:
  static constexpr std::size_t kWarmup = 1000;
  static constexpr double kInitialScale = 0.1;
  static constexpr double kScale = 2.38;
  static constexpr double kRidge = 1e-8;

  explicit AdaptState(std::size_t dim = 0);

  void push(std::span<const double> x);
  std::size_t count() const { return count_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  /// Unbiased sample covariance of everything pushed so far.
  Eigen::MatrixXd covariance() const;
  /// (0.1^2/d) I before warm-up, (2.38^2/d) cov + 1e-8 I after.
  Eigen::MatrixXd proposal_covariance() const;

 private:
  std::size_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

struct HybridStats {
  bool rw_accepted = false;
  bool pcn_accepted = false;
  bool pcn_proposed = false;
};

/// Adaptive Gaussian random walk on the affine block, then PCN on the rest;
/// the affine block is pushed into `adapt` afterwards.
HybridStats hybrid_iteration(Walker& walker, const TargetProblem& problem,
                             const CoefficientMask& mask, AdaptState& adapt,
                             double omega, Stream& rw_rng, Stream& pcn_rng);

/// omega * exp(rate - target), clamped to [1e-4, 1].
double autotune_omega(const AcceptanceCounter& batch, double omega,
                      double target);

inline constexpr std::size_t kTuneBatch = 100;
inline constexpr double kOmegaMin = 1e-4;
inline constexpr double kOmegaMax = 1.0;

struct Observable {
  std::string name;
  StateFunction fn;
};

/// Runs a seeded chain and records the observables of every walker after
/// every iteration (row 0 is the initial ensemble).
ChainRecord run_sampler(const TargetProblem& problem,
                        const SamplerConfig& config,
                        const std::vector<Observable>& observables);
ChainRecord run_sampler(const TargetProblem& problem,
                        const SamplerConfig& config,
                        const std::vector<std::string>& observables);

}  // namespace fes
