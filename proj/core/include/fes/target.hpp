// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fes/kl.hpp"
#include "fes/rng.hpp"

namespace fes {

/// One point of the sampled space: scalar parameters followed by whitened
/// KL coefficients of the functional parameter.
struct ParameterState {
  std::vector<double> scalars;
  std::vector<double> coefs;

  bool operator==(const ParameterState&) const = default;
};

using ScalarPrior = std::function<double(std::span<const double>)>;
using Likelihood = std::function<double(const ParameterState&)>;
using StateFunction = std::function<double(const ParameterState&)>;

/// Posterior exp(phi(u)) * pi_0(du) in whitened coordinates, with an optional
/// prior over a small set of scalar parameters.
struct TargetProblem {
  std::string label;
  std::shared_ptr<const KLBasis> basis;  // may be null for synthetic targets
  std::size_t coef_dim = 0;
  std::vector<std::string> scalar_names;

  /// phi; -inf when the forward model is undefined for the state.
  Likelihood likelihood;
  /// log density of the scalar prior, -inf outside its support.
  ScalarPrior scalar_prior;
  /// Draws scalars for prior initialization.
  std::function<std::vector<double>(Stream&)> sample_scalars;
  /// Random-walk proposal scale per scalar for the PCN baseline.
  std::vector<double> scalar_step;
  /// Extra named observables beyond scalars and eta_i.
  std::map<std::string, StateFunction> derived;

  std::size_t scalar_dim() const { return scalar_names.size(); }
};

/// phi(state). Throws InvalidArgument on dimension mismatch.
double log_likelihood(const TargetProblem& problem, const ParameterState& state);

double scalar_log_prior(const TargetProblem& problem,
                        std::span<const double> scalars);

/// Unnormalized log density of the affine block (scalars and the first
/// mask.low coefficients) given the remaining coefficients:
/// phi + scalar log prior - 1/2 sum_{i<low} coef_i^2.
/// Returns -inf without evaluating phi when the scalar prior vanishes.
double log_density_block(const TargetProblem& problem,
                         const ParameterState& state,
                         const CoefficientMask& mask);

/// Same as log_density_block but with phi supplied by the caller.
double block_density_from(const TargetProblem& problem,
                          const ParameterState& state,
                          const CoefficientMask& mask, double phi);

/// Full unnormalized log posterior (all Gaussian terms included).
double log_posterior(const TargetProblem& problem, const ParameterState& state);

/// Gaussian misfit -1/2 sum (obs - pred)^2 / noise_var, constants dropped.
double gaussian_log_likelihood(std::span<const double> observed,
                               std::span<const double> predicted,
                               double noise_var);

struct SplitState {
  std::vector<double> affine;      // scalars then low coefficients
  std::vector<double> complement;  // high coefficients
};

SplitState split_state(const ParameterState& state, const CoefficientMask& mask);
ParameterState merge_state(const SplitState& split, std::size_t scalar_dim);

/// Validates that `state` has the problem's dimensions and finite entries.
void check_dimensions(const TargetProblem& problem, const ParameterState& state);

/// Named observable: a scalar parameter name, "eta_<i>" (1-based KL
/// coefficient), or one of problem.derived.
StateFunction resolve_observable(const TargetProblem& problem,
                                 const std::string& name);

}  // namespace fes
