// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fes/rng.hpp"

namespace fes {

/// Karhunen-Loeve basis of a Gaussian prior sampled on a grid.
///
/// Fields are reconstructed as mean + sum_i coef_i * sqrt(lambda_i) * eta_i,
/// where the coefficients are whitened (standard normal under the prior).
/// Modes are orthonormal in the weighted discrete inner product
/// <f, g> = sum_k w_k f_k g_k. Kernel-matrix bases use unit weights; the
/// analytic Brownian-motion basis carries grid-spacing weights so that its
/// sampled sine modes stay exactly orthonormal.
///
/// Immutable after construction; safe to share between threads.
class KLBasis {
 public:
  KLBasis(std::vector<double> grid, std::vector<double> mean,
          std::vector<double> eigenvalues,
          std::vector<std::vector<double>> modes, std::vector<double> weights,
          std::optional<double> analytic_total_variance = std::nullopt);

  std::size_t grid_size() const { return grid_.size(); }
  std::size_t mode_count() const { return eigenvalues_.size(); }
  double domain_length() const { return grid_.back() - grid_.front(); }

  std::span<const double> grid() const { return grid_; }
  std::span<const double> mean() const { return mean_; }
  std::span<const double> eigenvalues() const { return eigenvalues_; }
  std::span<const double> weights() const { return weights_; }
  /// Values of mode i (0-based) at the grid points.
  std::span<const double> mode(std::size_t i) const { return modes_[i]; }

  /// Sum of all prior eigenvalues when known in closed form.
  std::optional<double> analytic_total_variance() const { return total_; }

  double inner(std::span<const double> f, std::span<const double> g) const;

  /// Field at every grid point. `coefs` may be shorter than mode_count();
  /// missing coefficients are zero.
  std::vector<double> field_at_nodes(std::span<const double> coefs) const;
  /// Field at grid node k.
  double field_at_node(std::span<const double> coefs, std::size_t k) const;
  /// Field at an arbitrary abscissa by linear interpolation between nodes.
  double field_at(std::span<const double> coefs, double x) const;

 private:
  std::vector<double> grid_;
  std::vector<double> mean_;
  std::vector<double> eigenvalues_;
  std::vector<std::vector<double>> modes_;
  std::vector<double> weights_;
  std::optional<double> total_;
  // scaled_[k * mode_count + i] = sqrt(lambda_i) * eta_i(x_k)
  std::vector<double> scaled_;
};

/// Splits whitened KL coordinates into the first `low` modes and the rest.
struct CoefficientMask {
  std::size_t low = 0;
  std::size_t total = 0;

  CoefficientMask() = default;
  CoefficientMask(std::size_t low, std::size_t total);

  std::size_t high() const { return total - low; }
  bool is_low(std::size_t i) const { return i < low; }
};

/// Analytic Brownian-motion basis on [0, T]:
/// eta_i(t) = sqrt(2/T) sin((i - 1/2) pi t / T),
/// lambda_i = T^2 / ((i - 1/2)^2 pi^2),
/// sampled at t_k = k T / grid_size, k = 1..grid_size.
KLBasis bm_kl_basis(std::size_t n_modes, double T, std::size_t grid_size);

using Kernel = std::function<double(double, double)>;

/// Eigendecomposition of the kernel matrix K_jk = kernel(x_j, x_k).
/// Negative eigenvalues are clipped to zero and modes below 1e-12 of the
/// leading eigenvalue are dropped, so the result may have fewer than
/// `n_modes` modes.
KLBasis numerical_kl_basis(const Kernel& kernel, std::vector<double> grid,
                           std::vector<double> mean, std::size_t n_modes);

/// `n` independent standard normals.
std::vector<double> sample_prior_coefficients(std::size_t n, Stream& rng);

/// Field values at `query` abscissae.
std::vector<double> reconstruct(const KLBasis& basis,
                                std::span<const double> coefs,
                                std::span<const double> query);

/// Fraction of prior variance carried by the first M modes.
double variance_fraction(const KLBasis& basis, std::size_t M);

/// Evenly spaced points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace fes
