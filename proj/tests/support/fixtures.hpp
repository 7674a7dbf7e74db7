// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)
//
// Synthetic targets shared by unit and acceptance tests.

#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fes/rng.hpp"
#include "fes/target.hpp"

namespace fes::testing {

/// Scalars ~ N(0, scalar_var[k]) and whitened coefficients with posterior
/// variance coef_var[i]; phi supplies the part beyond the N(0, 1) prior.
inline TargetProblem product_gaussian(std::vector<double> scalar_var,
                                      std::vector<double> coef_var) {
  TargetProblem t;
  t.label = "product-gaussian";
  t.coef_dim = coef_var.size();
  for (std::size_t k = 0; k < scalar_var.size(); ++k)
    t.scalar_names.push_back("x" + std::to_string(k + 1));
  t.likelihood = [coef_var](const ParameterState& s) {
    double phi = 0.0;
    for (std::size_t i = 0; i < coef_var.size(); ++i)
      phi -= 0.5 * s.coefs[i] * s.coefs[i] * (1.0 / coef_var[i] - 1.0);
    return phi;
  };
  t.scalar_prior = [scalar_var](std::span<const double> x) {
    double lp = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) lp -= 0.5 * x[k] * x[k] / scalar_var[k];
    return lp;
  };
  t.sample_scalars = [scalar_var](Stream& rng) {
    std::vector<double> x;
    for (double v : scalar_var) x.push_back(std::sqrt(v) * rng.normal());
    return x;
  };
  for (double v : scalar_var) t.scalar_step.push_back(std::sqrt(v));
  return t;
}

/// phi = 0 and an improper flat prior on every scalar.
inline TargetProblem flat_prior_target(std::size_t scalar_dim, std::size_t coef_dim) {
  TargetProblem t;
  t.label = "flat";
  t.coef_dim = coef_dim;
  for (std::size_t k = 0; k < scalar_dim; ++k)
    t.scalar_names.push_back("x" + std::to_string(k + 1));
  t.likelihood = [](const ParameterState&) { return 0.0; };
  t.scalar_prior = [](std::span<const double>) { return 0.0; };
  t.sample_scalars = [scalar_dim](Stream& rng) {
    std::vector<double> x(scalar_dim);
    for (auto& v : x) v = rng.normal();
    return x;
  };
  t.scalar_step.assign(scalar_dim, 1.0);
  return t;
}

/// Gaussian with precision matrix `prec` (row-major d x d) on the scalars.
inline TargetProblem correlated_gaussian(std::size_t d, std::vector<double> prec) {
  TargetProblem t;
  t.label = "gaussian";
  for (std::size_t k = 0; k < d; ++k) t.scalar_names.push_back("x" + std::to_string(k + 1));
  t.likelihood = [](const ParameterState&) { return 0.0; };
  t.scalar_prior = [d, prec](std::span<const double> x) {
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) q += x[i] * prec[i * d + j] * x[j];
    return -0.5 * q;
  };
  t.sample_scalars = [d](Stream& rng) {
    std::vector<double> x(d);
    for (auto& v : x) v = rng.normal();
    return x;
  };
  t.scalar_step.assign(d, 1.0);
  return t;
}

/// AR(1) series x_{t+1} = rho x_t + sqrt(1 - rho^2) e_t started in stationarity.
inline std::vector<double> ar1(double rho, std::size_t n, std::uint64_t seed) {
  Stream rng(seed);
  std::vector<double> x(n);
  double v = rng.normal();
  const double s = std::sqrt(1.0 - rho * rho);
  for (auto& xi : x) {
    xi = v;
    v = rho * v + s * rng.normal();
  }
  return x;
}

inline std::vector<double> iid_normals(std::size_t n, std::uint64_t seed) {
  Stream rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

}  // namespace fes::testing
