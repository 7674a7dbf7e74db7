// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "fes/target.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "fes/error.hpp"

namespace fes {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void check_dimensions(const TargetProblem& problem,
                      const ParameterState& state) {
  if (state.scalars.size() != problem.scalar_dim() ||
      state.coefs.size() != problem.coef_dim)
    throw InvalidArgument(
        "state dimensions (" + std::to_string(state.scalars.size()) + ", " +
        std::to_string(state.coefs.size()) + ") do not match problem '" +
        problem.label + "' (" + std::to_string(problem.scalar_dim()) + ", " +
        std::to_string(problem.coef_dim) + ")");
}

double log_likelihood(const TargetProblem& problem,
                      const ParameterState& state) {
  check_dimensions(problem, state);
  if (!problem.likelihood) return 0.0;
  const double phi = problem.likelihood(state);
  return std::isnan(phi) ? kNegInf : phi;
}

double scalar_log_prior(const TargetProblem& problem,
                        std::span<const double> scalars) {
  if (scalars.size() != problem.scalar_dim())
    throw InvalidArgument("scalar_log_prior: dimension mismatch");
  if (!problem.scalar_prior) return 0.0;
  const double lp = problem.scalar_prior(scalars);
  return std::isnan(lp) ? kNegInf : lp;
}

double block_density_from(const TargetProblem& problem,
                          const ParameterState& state,
                          const CoefficientMask& mask, double phi) {
  const double lp = scalar_log_prior(problem, state.scalars);
  if (lp == kNegInf || phi == kNegInf) return kNegInf;
  double sq = 0.0;
  for (std::size_t i = 0; i < mask.low; ++i) sq += state.coefs[i] * state.coefs[i];
  return phi + lp - 0.5 * sq;
}

double log_density_block(const TargetProblem& problem,
                         const ParameterState& state,
                         const CoefficientMask& mask) {
  check_dimensions(problem, state);
  if (mask.total != state.coefs.size())
    throw InvalidArgument("log_density_block: mask does not match state");
  if (scalar_log_prior(problem, state.scalars) == kNegInf) return kNegInf;
  return block_density_from(problem, state, mask,
                            log_likelihood(problem, state));
}

double log_posterior(const TargetProblem& problem,
                     const ParameterState& state) {
  const CoefficientMask all(state.coefs.size(), state.coefs.size());
  return log_density_block(problem, state, all);
}

double gaussian_log_likelihood(std::span<const double> observed,
                               std::span<const double> predicted,
                               double noise_var) {
  if (observed.size() != predicted.size())
    throw InvalidArgument("gaussian_log_likelihood: size mismatch");
  if (!(noise_var > 0.0))
    throw InvalidArgument("gaussian_log_likelihood: noise variance must be positive");
  double ss = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double r = observed[k] - predicted[k];
    ss += r * r;
  }
  return -0.5 * ss / noise_var;
}

SplitState split_state(const ParameterState& state,
                       const CoefficientMask& mask) {
  if (mask.total != state.coefs.size())
    throw InvalidArgument("split_state: mask does not match state");
  SplitState out;
  out.affine.reserve(state.scalars.size() + mask.low);
  out.affine.insert(out.affine.end(), state.scalars.begin(), state.scalars.end());
  const auto low_end = state.coefs.begin() + static_cast<std::ptrdiff_t>(mask.low);
  out.affine.insert(out.affine.end(), state.coefs.begin(), low_end);
  out.complement.assign(low_end, state.coefs.end());
  return out;
}

ParameterState merge_state(const SplitState& split, std::size_t scalar_dim) {
  if (split.affine.size() < scalar_dim)
    throw InvalidArgument("merge_state: affine block shorter than scalar_dim");
  ParameterState out;
  const auto mid = split.affine.begin() + static_cast<std::ptrdiff_t>(scalar_dim);
  out.scalars.assign(split.affine.begin(), mid);
  out.coefs.reserve(split.affine.size() - scalar_dim + split.complement.size());
  out.coefs.insert(out.coefs.end(), mid, split.affine.end());
  out.coefs.insert(out.coefs.end(), split.complement.begin(),
                   split.complement.end());
  return out;
}

StateFunction resolve_observable(const TargetProblem& problem,
                                 const std::string& name) {
  const auto& names = problem.scalar_names;
  if (auto it = std::find(names.begin(), names.end(), name); it != names.end()) {
    const auto k = static_cast<std::size_t>(it - names.begin());
    return [k](const ParameterState& s) { return s.scalars[k]; };
  }
  if (auto it = problem.derived.find(name); it != problem.derived.end())
    return it->second;
  if (name.rfind("eta_", 0) == 0) {
    std::size_t index = 0;
    const char* first = name.data() + 4;
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, index);
    if (ec == std::errc() && ptr == last && index >= 1 &&
        index <= problem.coef_dim) {
      return [k = index - 1](const ParameterState& s) { return s.coefs[k]; };
    }
  }
  throw InvalidArgument("unknown observable '" + name + "' for problem '" +
                        problem.label + "'");
}

}  // namespace fes
