// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fes/kl.hpp"
#include "fes/target.hpp"

namespace fes {

/// Synthetic observations as a plain table, for export and audit.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// ---------------------------------------------------------------------------
// Advection: rho(x, t) = rho0(x - c t), observed flow q = c rho.

/// Flow c * rho0(x - c t) at every (location, time) pair, locations outer.
/// With `hold_boundary` a shifted point outside the grid sees rho0 at the
/// nearest end node; otherwise it throws OutOfDomain.
std::vector<double> advection_forward(double c, std::span<const double> coefs,
                                      const KLBasis& basis,
                                      std::span<const double> locations,
                                      std::span<const double> times,
                                      bool hold_boundary = false);

struct AdvectionProblem {
  std::shared_ptr<const KLBasis> basis;
  std::vector<double> locations{2.0, 6.0, 10.0};
  std::vector<double> times{1.0, 1.5, 2.0};
  std::vector<double> observations;
  std::vector<double> true_flows;  // noiseless
  double noise_var = 0.04;
  double c_lower = 0.0;
  double c_upper = 1.4;
  /// Upstream of the grid rho0 keeps its boundary value, so c > 1 on
  /// [0, 10] has a finite likelihood instead of a -inf cliff.
  bool hold_boundary = true;
  /// Data-generating state expressed in `basis`.
  ParameterState truth;

  double scalar_log_prior(double c) const;
  TargetProblem target() const;
  Dataset dataset() const;
};

struct AdvectionOptions {
  std::size_t grid_size = 200;
  /// Discretize rho0 on [-3, 10] (1.3x the nodes) instead of [0, 10]. The
  /// longer domain shifts every KL mode toward lower wavenumbers, so a
  /// given M resolves less of the posterior-informed structure.
  bool extend_domain = false;
};

/// Squared-exponential prior 130 exp(-(x - x')^2 / 2) with mean 100.
KLBasis advection_basis(std::size_t grid_size, bool extend_domain = false);

/// Truth c = 0.5 and rho0 drawn from the prior on a fixed 200-point
/// reference discretization, so observations depend only on the seed.
AdvectionProblem make_advection_problem(std::uint64_t seed,
                                        const AdvectionOptions& options = {});

// ---------------------------------------------------------------------------
// Langevin: dX = P dt, dP = -alpha X dt + sigma dW, X = P = 0 at t = 0.

/// Euler-Maruyama path X_0..X_N on the basis grid (X_0 at t = 0) with the
/// Brownian path rebuilt from its KL coefficients.
std::vector<double> langevin_forward(double alpha, double sigma,
                                     std::span<const double> bm_coefs,
                                     const KLBasis& basis, double x0 = 0.0,
                                     double p0 = 0.0);

struct LangevinProblem {
  std::shared_ptr<const KLBasis> basis;
  std::vector<double> obs_times{1.0, 3.0, 5.0, 7.0, 9.0};
  std::vector<std::size_t> obs_indices;  // into langevin_forward output
  std::vector<double> observations;
  std::vector<double> true_positions;  // sin(4 t)
  double noise_var = 0.09;
  double alpha_rate = 12.0;
  double sigma_rate = 4.0;

  /// Log prior of (log alpha, log sigma), Jacobian included.
  double scalar_log_prior(double log_alpha, double log_sigma) const;
  TargetProblem target() const;
  Dataset dataset() const;
};

/// Reading of "Exp(k)". `mean` gives density e^{-x/k}/k and reproduces the
/// aliasing modes of alpha; `rate` gives k e^{-k x}, which pins alpha near
/// zero and leaves a unimodal posterior.
enum class ExpConvention { mean, rate };

std::string to_string(ExpConvention convention);

struct LangevinOptions {
  std::size_t grid_size = 200;
  std::size_t n_modes = 200;
  double horizon = 10.0;
  ExpConvention exp_prior = ExpConvention::mean;
};

LangevinProblem make_langevin_problem(std::uint64_t seed,
                                      const LangevinOptions& options = {});

// ---------------------------------------------------------------------------

/// Uniform handle used by the experiment driver.
struct ProblemInstance {
  TargetProblem target;
  std::optional<ParameterState> truth;
  Dataset data;
};

struct ProblemOptions {
  std::size_t grid_size = 0;  // 0: problem default
  bool extend_domain = false;                      // advection only
  ExpConvention exp_prior = ExpConvention::mean;   // langevin only
};

/// "advection" or "langevin".
ProblemInstance make_problem(const std::string& name, std::uint64_t seed,
                             const ProblemOptions& options = {});

}  // namespace fes
