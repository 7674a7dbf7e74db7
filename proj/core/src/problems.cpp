// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "fes/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fes/error.hpp"

namespace fes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kAdvectionReferenceGrid = 200;

double se_kernel(double x, double y) {
  const double d = x - y;
  return 130.0 * std::exp(-0.5 * d * d);
}

// Whitened coordinates in `basis` of a field known at `source` nodes.
std::vector<double> project_field(const KLBasis& source,
                                  std::span<const double> source_coefs,
                                  const KLBasis& target) {
  std::vector<double> centered(target.grid_size());
  for (std::size_t k = 0; k < target.grid_size(); ++k)
    centered[k] = source.field_at(source_coefs, target.grid()[k]) -
                  target.mean()[k];
  std::vector<double> coefs(target.mode_count());
  for (std::size_t i = 0; i < target.mode_count(); ++i)
    coefs[i] = target.inner(target.mode(i), centered) /
               std::sqrt(target.eigenvalues()[i]);
  return coefs;
}

}  // namespace

std::vector<double> advection_forward(double c, std::span<const double> coefs,
                                      const KLBasis& basis,
                                      std::span<const double> locations,
                                      std::span<const double> times,
                                      bool hold_boundary) {
  const double lo = basis.grid().front();
  const double hi = basis.grid().back();
  std::vector<double> q;
  q.reserve(locations.size() * times.size());
  for (double x : locations)
    for (double t : times) {
      double s = x - c * t;
      if (hold_boundary) s = std::clamp(s, lo, hi);
      q.push_back(c * basis.field_at(coefs, s));
    }
  return q;
}

KLBasis advection_basis(std::size_t grid_size, bool extend_domain) {
  if (grid_size < 2) throw InvalidArgument("advection_basis: grid_size < 2");
  const double lo = extend_domain ? -3.0 : 0.0;
  const std::size_t n =
      extend_domain ? static_cast<std::size_t>(
                          std::lround(static_cast<double>(grid_size) * 1.3))
                    : grid_size;
  return numerical_kl_basis(se_kernel, linspace(lo, 10.0, n),
                            std::vector<double>(n, 100.0), n);
}

double AdvectionProblem::scalar_log_prior(double c) const {
  if (!(c > c_lower && c < c_upper)) return kNegInf;
  return -std::log(c_upper - c_lower);
}

TargetProblem AdvectionProblem::target() const {
  auto self = std::make_shared<const AdvectionProblem>(*this);
  TargetProblem t;
  t.label = "advection";
  t.basis = basis;
  t.coef_dim = basis->mode_count();
  t.scalar_names = {"c"};
  t.likelihood = [self](const ParameterState& s) {
    try {
      const auto q = advection_forward(s.scalars[0], s.coefs, *self->basis,
                                       self->locations, self->times,
                                       self->hold_boundary);
      return gaussian_log_likelihood(self->observations, q, self->noise_var);
    } catch (const OutOfDomain&) {
      return kNegInf;
    }
  };
  t.scalar_prior = [self](std::span<const double> s) {
    return self->scalar_log_prior(s[0]);
  };
  t.sample_scalars = [self](Stream& rng) {
    return std::vector<double>{self->c_lower +
                               (self->c_upper - self->c_lower) * rng.uniform()};
  };
  t.scalar_step = {(c_upper - c_lower) / std::sqrt(12.0)};
  return t;
}

Dataset AdvectionProblem::dataset() const {
  Dataset d;
  d.columns = {"location", "time", "flow", "true_flow"};
  std::size_t k = 0;
  for (double x : locations)
    for (double t : times) {
      d.rows.push_back({x, t, observations[k], true_flows[k]});
      ++k;
    }
  return d;
}

AdvectionProblem make_advection_problem(std::uint64_t seed,
                                        const AdvectionOptions& options) {
  AdvectionProblem p;
  p.basis = std::make_shared<const KLBasis>(
      advection_basis(options.grid_size, options.extend_domain));

  std::shared_ptr<const KLBasis> reference = p.basis;
  if (options.grid_size != kAdvectionReferenceGrid)
    reference = std::make_shared<const KLBasis>(
        advection_basis(kAdvectionReferenceGrid, options.extend_domain));

  Stream truth_rng(seed, 0, 0, Stage::data);
  Stream noise_rng(seed, 1, 0, Stage::data);
  const double c_true = 0.5;
  const auto ref_coefs =
      sample_prior_coefficients(reference->mode_count(), truth_rng);

  p.true_flows =
      advection_forward(c_true, ref_coefs, *reference, p.locations, p.times);
  p.observations = p.true_flows;
  const double sd = std::sqrt(p.noise_var);
  for (auto& v : p.observations) v += sd * noise_rng.normal();

  p.truth.scalars = {c_true};
  p.truth.coefs = reference == p.basis
                      ? ref_coefs
                      : project_field(*reference, ref_coefs, *p.basis);
  return p;
}

// ---------------------------------------------------------------------------

std::string to_string(ExpConvention convention) {
  return convention == ExpConvention::mean ? "mean" : "rate";
}

std::vector<double> langevin_forward(double alpha, double sigma,
                                     std::span<const double> bm_coefs,
                                     const KLBasis& basis, double x0,
                                     double p0) {
  if (!(alpha >= 0.0) || !(sigma >= 0.0))
    throw InvalidArgument("langevin_forward: alpha and sigma must be >= 0");
  const std::size_t n = basis.grid_size();
  const double dt = basis.grid().back() / static_cast<double>(n);
  std::vector<double> x(n + 1);
  x[0] = x0;
  double p = p0;
  double w_prev = 0.0;
  if (sigma == 0.0) {
    for (std::size_t k = 0; k < n; ++k) {
      const double p_next = p - alpha * x[k] * dt;
      x[k + 1] = x[k] + p * dt;
      p = p_next;
    }
    return x;
  }
  const auto w = basis.field_at_nodes(bm_coefs);
  for (std::size_t k = 0; k < n; ++k) {
    const double dw = w[k] - w_prev;
    w_prev = w[k];
    const double p_next = p - alpha * x[k] * dt + sigma * dw;
    x[k + 1] = x[k] + p * dt;
    p = p_next;
  }
  return x;
}

double LangevinProblem::scalar_log_prior(double log_alpha,
                                         double log_sigma) const {
  const double la = std::log(alpha_rate) + log_alpha -
                    alpha_rate * std::exp(log_alpha);
  const double ls = std::log(sigma_rate) + log_sigma -
                    sigma_rate * std::exp(log_sigma);
  const double total = la + ls;
  return std::isfinite(total) ? total : kNegInf;
}

TargetProblem LangevinProblem::target() const {
  auto self = std::make_shared<const LangevinProblem>(*this);
  TargetProblem t;
  t.label = "langevin";
  t.basis = basis;
  t.coef_dim = basis->mode_count();
  t.scalar_names = {"log_alpha", "log_sigma"};
  t.likelihood = [self](const ParameterState& s) {
    const double alpha = std::exp(s.scalars[0]);
    const double sigma = std::exp(s.scalars[1]);
    if (!std::isfinite(alpha) || !std::isfinite(sigma)) return kNegInf;
    const auto x = langevin_forward(alpha, sigma, s.coefs, *self->basis);
    double ss = 0.0;
    for (std::size_t j = 0; j < self->obs_indices.size(); ++j) {
      const double r = self->observations[j] - x[self->obs_indices[j]];
      ss += r * r;
    }
    const double phi = -0.5 * ss / self->noise_var;
    return std::isfinite(phi) ? phi : kNegInf;
  };
  t.scalar_prior = [self](std::span<const double> s) {
    return self->scalar_log_prior(s[0], s[1]);
  };
  t.sample_scalars = [self](Stream& rng) {
    const double a = -std::log1p(-rng.uniform()) / self->alpha_rate;
    const double s = -std::log1p(-rng.uniform()) / self->sigma_rate;
    return std::vector<double>{std::log(a), std::log(s)};
  };
  // Standard deviation of log E for E exponential.
  const double log_exp_sd = std::numbers::pi / std::sqrt(6.0);
  t.scalar_step = {log_exp_sd, log_exp_sd};
  t.derived["alpha"] = [](const ParameterState& s) {
    return std::exp(s.scalars[0]);
  };
  t.derived["sigma"] = [](const ParameterState& s) {
    return std::exp(s.scalars[1]);
  };
  return t;
}

Dataset LangevinProblem::dataset() const {
  Dataset d;
  d.columns = {"time", "position", "true_position"};
  for (std::size_t j = 0; j < obs_times.size(); ++j)
    d.rows.push_back({obs_times[j], observations[j], true_positions[j]});
  return d;
}

LangevinProblem make_langevin_problem(std::uint64_t seed,
                                      const LangevinOptions& options) {
  LangevinProblem p;
  p.basis = std::make_shared<const KLBasis>(
      bm_kl_basis(options.n_modes, options.horizon, options.grid_size));
  const double dt = options.horizon / static_cast<double>(options.grid_size);
  if (options.exp_prior == ExpConvention::mean) {
    p.alpha_rate = 1.0 / 12.0;
    p.sigma_rate = 1.0 / 4.0;
  }
  Stream noise_rng(seed, 0, 0, Stage::data);
  const double sd = std::sqrt(p.noise_var);
  for (double t : p.obs_times) {
    const auto k = static_cast<std::size_t>(std::lround(t / dt));
    if (k == 0 || k > options.grid_size)
      throw InvalidArgument("make_langevin_problem: observation time off grid");
    p.obs_indices.push_back(k);
    p.true_positions.push_back(std::sin(4.0 * t));
    p.observations.push_back(p.true_positions.back() + sd * noise_rng.normal());
  }
  return p;
}

// ---------------------------------------------------------------------------

ProblemInstance make_problem(const std::string& name, std::uint64_t seed,
                             const ProblemOptions& options) {
  const std::size_t grid_size = options.grid_size;
  if (name == "advection") {
    AdvectionOptions opt;
    opt.extend_domain = options.extend_domain;
    if (grid_size != 0) opt.grid_size = grid_size;
    auto p = make_advection_problem(seed, opt);
    return {p.target(), p.truth, p.dataset()};
  }
  if (name == "langevin") {
    LangevinOptions opt;
    opt.exp_prior = options.exp_prior;
    if (grid_size != 0) {
      opt.grid_size = grid_size;
      opt.n_modes = grid_size;
    }
    auto p = make_langevin_problem(seed, opt);
    return {p.target(), std::nullopt, p.dataset()};
  }
  throw InvalidArgument("unknown problem '" + name + "'");
}

}  // namespace fes
