// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "fes/kl.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fes/error.hpp"

namespace fes {

KLBasis::KLBasis(std::vector<double> grid, std::vector<double> mean,
                 std::vector<double> eigenvalues,
                 std::vector<std::vector<double>> modes,
                 std::vector<double> weights,
                 std::optional<double> analytic_total_variance)
    : grid_(std::move(grid)),
      mean_(std::move(mean)),
      eigenvalues_(std::move(eigenvalues)),
      modes_(std::move(modes)),
      weights_(std::move(weights)),
      total_(analytic_total_variance) {
  const std::size_t n = grid_.size();
  if (n == 0) throw InvalidArgument("KLBasis: empty grid");
  if (mean_.size() != n || weights_.size() != n)
    throw InvalidArgument("KLBasis: mean/weights size differs from grid");
  if (modes_.size() != eigenvalues_.size())
    throw InvalidArgument("KLBasis: one mode per eigenvalue required");
  if (eigenvalues_.size() > n)
    throw InvalidArgument("KLBasis: more modes than grid points");
  for (std::size_t k = 1; k < n; ++k)
    if (!(grid_[k] > grid_[k - 1]))
      throw InvalidArgument("KLBasis: grid must be strictly increasing");
  for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
    if (!(eigenvalues_[i] >= 0.0))
      throw InvalidArgument("KLBasis: negative eigenvalue");
    if (i > 0 && eigenvalues_[i] > eigenvalues_[i - 1])
      throw InvalidArgument("KLBasis: eigenvalues must be descending");
    if (modes_[i].size() != n)
      throw InvalidArgument("KLBasis: mode length differs from grid");
  }

  const std::size_t m = eigenvalues_.size();
  scaled_.resize(n * m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = std::sqrt(eigenvalues_[i]);
    for (std::size_t k = 0; k < n; ++k) scaled_[k * m + i] = s * modes_[i][k];
  }
}

double KLBasis::inner(std::span<const double> f,
                      std::span<const double> g) const {
  if (f.size() != grid_.size() || g.size() != grid_.size())
    throw InvalidArgument("KLBasis::inner: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += weights_[k] * f[k] * g[k];
  return s;
}

std::vector<double> KLBasis::field_at_nodes(
    std::span<const double> coefs) const {
  if (coefs.size() > mode_count())
    throw InvalidArgument("KLBasis: more coefficients than modes");
  const auto n = static_cast<Eigen::Index>(grid_.size());
  const auto m = static_cast<Eigen::Index>(mode_count());
  const auto used = static_cast<Eigen::Index>(coefs.size());
  std::vector<double> out(mean_);
  if (used == 0) return out;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      scaled(scaled_.data(), n, m);
  Eigen::Map<const Eigen::VectorXd> c(coefs.data(), used);
  Eigen::Map<Eigen::VectorXd> o(out.data(), n);
  o.noalias() += scaled.leftCols(used) * c;
  return out;
}

double KLBasis::field_at_node(std::span<const double> coefs,
                              std::size_t k) const {
  const std::size_t m = mode_count();
  if (coefs.size() > m)
    throw InvalidArgument("KLBasis: more coefficients than modes");
  const double* row = scaled_.data() + k * m;
  double v = mean_[k];
  for (std::size_t i = 0; i < coefs.size(); ++i) v += coefs[i] * row[i];
  return v;
}

double KLBasis::field_at(std::span<const double> coefs, double x) const {
  const double lo = grid_.front();
  const double hi = grid_.back();
  const double tol = 1e-12 * std::max(1.0, hi - lo);
  if (!(x >= lo - tol && x <= hi + tol))
    throw OutOfDomain("field evaluation at " + std::to_string(x) +
                      " outside grid span [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  if (grid_.size() == 1) return field_at_node(coefs, 0);
  auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  std::size_t k = it == grid_.begin() ? 0 : static_cast<std::size_t>(
                                                it - grid_.begin()) - 1;
  k = std::min(k, grid_.size() - 2);
  const double theta =
      std::clamp((x - grid_[k]) / (grid_[k + 1] - grid_[k]), 0.0, 1.0);
  const double left = field_at_node(coefs, k);
  if (theta == 0.0) return left;
  const double right = field_at_node(coefs, k + 1);
  return left + theta * (right - left);
}

CoefficientMask::CoefficientMask(std::size_t low_, std::size_t total_)
    : low(low_), total(total_) {
  if (low > total)
    throw InvalidArgument("CoefficientMask: M=" + std::to_string(low) +
                          " exceeds mode count " + std::to_string(total));
}

KLBasis bm_kl_basis(std::size_t n_modes, double T, std::size_t grid_size) {
  if (!(T > 0.0)) throw InvalidArgument("bm_kl_basis: T must be positive");
  if (grid_size == 0) throw InvalidArgument("bm_kl_basis: empty grid");
  if (n_modes > grid_size)
    throw InvalidArgument("bm_kl_basis: n_modes=" + std::to_string(n_modes) +
                          " exceeds grid_size=" + std::to_string(grid_size));

  const double h = T / static_cast<double>(grid_size);
  std::vector<double> grid(grid_size);
  for (std::size_t k = 0; k < grid_size; ++k)
    grid[k] = h * static_cast<double>(k + 1);
  // Trapezoid weight at t = T; t = 0 carries no weight since every mode
  // vanishes there. With these weights the sampled sines are an
  // orthonormal family (a discrete sine transform).
  std::vector<double> weights(grid_size, h);
  weights.back() = 0.5 * h;

  std::vector<double> eigenvalues(n_modes);
  std::vector<std::vector<double>> modes(n_modes,
                                         std::vector<double>(grid_size));
  const double amp = std::sqrt(2.0 / T);
  for (std::size_t i = 0; i < n_modes; ++i) {
    const double freq = (static_cast<double>(i) + 0.5) * std::numbers::pi;
    eigenvalues[i] = T * T / (freq * freq);
    for (std::size_t k = 0; k < grid_size; ++k) {
      // Exact phase k(i+1/2)pi/N avoids accumulating error in t/T.
      const double phase = freq * static_cast<double>(k + 1) /
                           static_cast<double>(grid_size);
      modes[i][k] = amp * std::sin(phase);
    }
  }
  return KLBasis(std::move(grid), std::vector<double>(grid_size, 0.0),
                 std::move(eigenvalues), std::move(modes), std::move(weights),
                 0.5 * T * T);
}

KLBasis numerical_kl_basis(const Kernel& kernel, std::vector<double> grid,
                           std::vector<double> mean, std::size_t n_modes) {
  const std::size_t n = grid.size();
  if (n == 0) throw InvalidArgument("numerical_kl_basis: empty grid");
  for (std::size_t k = 1; k < n; ++k)
    if (!(grid[k] > grid[k - 1]))
      throw InvalidArgument("numerical_kl_basis: grid not strictly increasing");
  if (mean.size() != n)
    throw InvalidArgument("numerical_kl_basis: mean size differs from grid");
  if (n_modes > n)
    throw InvalidArgument("numerical_kl_basis: n_modes exceeds grid size");

  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd K(N, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index k = 0; k < N; ++k)
      K(j, k) = kernel(grid[static_cast<std::size_t>(j)],
                       grid[static_cast<std::size_t>(k)]);
  if (!K.allFinite())
    throw NumericalError("numerical_kl_basis: kernel produced non-finite values");
  const double scale = std::max(K.cwiseAbs().maxCoeff(), 1e-300);
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NumericalError("numerical_kl_basis: kernel matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
  if (solver.info() != Eigen::Success)
    throw NumericalError("numerical_kl_basis: eigendecomposition failed");

  // Eigen returns ascending order.
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const double leading = std::max(values(N - 1), 0.0);

  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> modes;
  for (Eigen::Index r = N - 1; r >= 0; --r) {
    if (eigenvalues.size() == n_modes) break;
    const double lambda = std::max(values(r), 0.0);
    if (leading == 0.0 || lambda < 1e-12 * leading) break;
    std::vector<double> v(n);
    Eigen::Index peak = 0;
    vectors.col(r).cwiseAbs().maxCoeff(&peak);
    const double sign = vectors(peak, r) < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index k = 0; k < N; ++k)
      v[static_cast<std::size_t>(k)] = sign * vectors(k, r);
    eigenvalues.push_back(lambda);
    modes.push_back(std::move(v));
  }
  std::vector<double> weights(n, 1.0);
  return KLBasis(std::move(grid), std::move(mean), std::move(eigenvalues),
                 std::move(modes), std::move(weights));
}

std::vector<double> sample_prior_coefficients(std::size_t n, Stream& rng) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

std::vector<double> reconstruct(const KLBasis& basis,
                                std::span<const double> coefs,
                                std::span<const double> query) {
  if (coefs.size() > basis.mode_count())
    throw InvalidArgument("reconstruct: more coefficients than modes");
  std::vector<double> out;
  out.reserve(query.size());
  for (double x : query) out.push_back(basis.field_at(coefs, x));
  return out;
}

double variance_fraction(const KLBasis& basis, std::size_t M) {
  if (M > basis.mode_count())
    throw InvalidArgument("variance_fraction: M exceeds mode count");
  const auto ev = basis.eigenvalues();
  double partial = 0.0;
  for (std::size_t i = 0; i < M; ++i) partial += ev[i];
  double total = 0.0;
  if (auto analytic = basis.analytic_total_variance()) {
    total = *analytic;
  } else {
    for (double v : ev) total += v;
  }
  if (total <= 0.0) return 0.0;
  return partial / total;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) out[k] = lo + step * static_cast<double>(k);
  out.back() = hi;
  return out;
}

}  // namespace fes
