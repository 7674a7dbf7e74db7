// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "fes/diagnostics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>

#include "fes/error.hpp"

namespace fes {

namespace {

constexpr std::size_t kDirectLimit = 4096;

// fftw planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Biased autocovariance sum_{t} (x_t - c)(x_{t+k} - c) / N for k <= max_lag.
std::vector<double> autocovariance(std::span<const double> x, double center,
                                   std::size_t max_lag) {
  const std::size_t n = x.size();
  std::vector<double> out(max_lag + 1, 0.0);
  if (n < kDirectLimit) {
    for (std::size_t k = 0; k <= max_lag; ++k) {
      double s = 0.0;
      for (std::size_t t = 0; t + k < n; ++t)
        s += (x[t] - center) * (x[t + k] - center);
      out[k] = s / static_cast<double>(n);
    }
    return out;
  }

  const std::size_t m = next_pow2(2 * n);
  const std::size_t half = m / 2 + 1;
  std::unique_ptr<double, decltype(&fftw_free)> buf(
      fftw_alloc_real(m), &fftw_free);
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> spec(
      fftw_alloc_complex(half), &fftw_free);
  fftw_plan forward, backward;
  {
    std::lock_guard lock(fftw_planner_mutex());
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(m), buf.get(), spec.get(),
                                   FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(m), spec.get(), buf.get(),
                                    FFTW_ESTIMATE);
  }
  double* b = buf.get();
  for (std::size_t t = 0; t < n; ++t) b[t] = x[t] - center;
  std::fill(b + n, b + m, 0.0);
  fftw_execute(forward);
  fftw_complex* s = spec.get();
  for (std::size_t f = 0; f < half; ++f) {
    s[f][0] = s[f][0] * s[f][0] + s[f][1] * s[f][1];
    s[f][1] = 0.0;
  }
  fftw_execute(backward);
  const double norm = static_cast<double>(m) * static_cast<double>(n);
  for (std::size_t k = 0; k <= max_lag; ++k) out[k] = b[k] / norm;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  return out;
}

std::size_t common_length(const std::vector<std::vector<double>>& walkers) {
  if (walkers.empty()) throw InvalidArgument("no walker series supplied");
  const std::size_t n = walkers.front().size();
  for (const auto& w : walkers)
    if (w.size() != n) throw InvalidArgument("walker series differ in length");
  return n;
}

std::size_t max_window(std::size_t n, const SokalOptions& opt) {
  const auto w = static_cast<std::size_t>(
      std::floor(opt.max_window_fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(w, 1, n > 1 ? n - 1 : 1);
}

}  // namespace

std::size_t ChainRecord::observable_index(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw InvalidArgument("observable '" + name + "' not in chain record");
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> ChainRecord::walker_series(std::size_t obs,
                                               std::size_t walker) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(obs, r, walker);
  return out;
}

std::vector<std::vector<double>> ChainRecord::post_burn_in(
    std::size_t obs) const {
  const std::size_t skip = burn_in_count(rows, burn_in_fraction);
  std::vector<std::vector<double>> out(walkers);
  for (std::size_t w = 0; w < walkers; ++w) {
    out[w].reserve(rows - skip);
    for (std::size_t r = skip; r < rows; ++r) out[w].push_back(at(obs, r, w));
  }
  return out;
}

std::size_t burn_in_count(std::size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw InvalidArgument("burn-in fraction must lie in [0, 1)");
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

std::vector<double> drop_burn_in(std::span<const double> series,
                                 double fraction) {
  const std::size_t skip = burn_in_count(series.size(), fraction);
  return {series.begin() + static_cast<std::ptrdiff_t>(skip), series.end()};
}

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of empty series");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("variance needs two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

std::vector<double> autocorrelation(std::span<const double> series,
                                    std::size_t max_lag) {
  return ensemble_autocorrelation({{series.begin(), series.end()}}, max_lag);
}

std::vector<double> ensemble_autocorrelation(
    const std::vector<std::vector<double>>& walkers, std::size_t max_lag) {
  const std::size_t n = common_length(walkers);
  if (max_lag >= n)
    throw InvalidArgument("autocorrelation: max_lag must be below series length");
  double center = 0.0;
  for (const auto& w : walkers) center += std::accumulate(w.begin(), w.end(), 0.0);
  center /= static_cast<double>(n * walkers.size());

  std::vector<double> acov(max_lag + 1, 0.0);
  for (const auto& w : walkers) {
    const auto a = autocovariance(w, center, max_lag);
    for (std::size_t k = 0; k <= max_lag; ++k) acov[k] += a[k];
  }
  const double scale = std::max(std::abs(center), 1.0);
  if (!(acov[0] > 1e-24 * scale * scale * static_cast<double>(walkers.size())))
    throw DegenerateSeries("autocorrelation of a zero-variance series");
  std::vector<double> rho(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) rho[k] = acov[k] / acov[0];
  rho[0] = 1.0;
  return rho;
}

IatEstimate sokal_window(std::span<const double> acf, double window_constant) {
  if (acf.empty()) throw InvalidArgument("sokal_window: empty ACF");
  double tau = 1.0;
  for (std::size_t w = 1; w < acf.size(); ++w) {
    tau += 2.0 * acf[w];
    // Antithetic series can drive the sum below 1; the floor keeps the
    // corrected standard error no smaller than the iid one.
    if (static_cast<double>(w) >= window_constant * tau)
      return {std::max(tau, 1.0), w};
  }
  // The truncated sum already exceeds W_max / c; mean subtraction biases
  // long-lag ACF estimates low, so it is a conservative lower bound.
  const double bound = std::max(
      tau, static_cast<double>(acf.size() - 1) / window_constant);
  throw ChainTooShort("no self-consistent window up to lag " +
                          std::to_string(acf.size() - 1) +
                          "; integrated autocorrelation time exceeds " +
                          std::to_string(bound),
                      bound);
}

IatEstimate iat_sokal_detail(const std::vector<std::vector<double>>& walkers,
                             const SokalOptions& opt) {
  const std::size_t n = common_length(walkers);
  if (n < 2) throw ChainTooShort("series shorter than two samples", 0.0);
  const auto acf = ensemble_autocorrelation(walkers, max_window(n, opt));
  return sokal_window(acf, opt.window_constant);
}

double iat_sokal(const std::vector<std::vector<double>>& walkers,
                 const SokalOptions& opt) {
  return iat_sokal_detail(walkers, opt).tau;
}

double iat_sokal(std::span<const double> series, const SokalOptions& opt) {
  return iat_sokal(std::vector<std::vector<double>>{{series.begin(), series.end()}},
                   opt);
}

double effective_sample_size(std::span<const double> series,
                             const SokalOptions& opt) {
  return static_cast<double>(series.size()) / iat_sokal(series, opt);
}

double effective_sample_size(const std::vector<std::vector<double>>& walkers,
                             const SokalOptions& opt) {
  const double total =
      static_cast<double>(common_length(walkers) * walkers.size());
  return total / iat_sokal(walkers, opt);
}

double corrected_standard_error(std::span<const double> series,
                                const SokalOptions& opt) {
  const double tau = iat_sokal(series, opt);
  return std::sqrt(tau * variance(series) / static_cast<double>(series.size()));
}

double corrected_standard_error(const std::vector<std::vector<double>>& walkers,
                                const SokalOptions& opt) {
  const double tau = iat_sokal(walkers, opt);
  std::vector<double> pooled;
  for (const auto& w : walkers) pooled.insert(pooled.end(), w.begin(), w.end());
  return std::sqrt(tau * variance(pooled) / static_cast<double>(pooled.size()));
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo,
                    double hi) {
  if (bins == 0 || !(hi > lo))
    throw InvalidArgument("histogram: need bins > 0 and hi > lo");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  const double width = h.bin_width();
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    h.counts[std::min(b, bins - 1)] += 1;
  }
  return h;
}

std::vector<std::size_t> separated_modes(const Histogram& h, double dip_ratio,
                                         double min_fraction) {
  const auto& c = h.counts;
  const std::size_t total = std::accumulate(c.begin(), c.end(), std::size_t{0});
  std::vector<std::size_t> peaks;
  for (std::size_t b = 0; b < c.size(); ++b) {
    const bool left_ok = b == 0 || c[b] > c[b - 1];
    // Plateaus count once, at their right edge.
    const bool right_ok = b + 1 == c.size() || c[b] >= c[b + 1];
    if (!left_ok || !right_ok) continue;
    if (static_cast<double>(c[b]) < min_fraction * static_cast<double>(total))
      continue;
    peaks.push_back(b);
  }
  // Greedily merge peaks that are not separated by a deep enough dip,
  // keeping the taller one.
  std::vector<std::size_t> kept;
  for (std::size_t p : peaks) {
    if (kept.empty()) {
      kept.push_back(p);
      continue;
    }
    const std::size_t q = kept.back();
    const std::size_t valley = *std::min_element(c.begin() + static_cast<std::ptrdiff_t>(q),
                                                 c.begin() + static_cast<std::ptrdiff_t>(p) + 1);
    const double lower = static_cast<double>(std::min(c[p], c[q]));
    if (static_cast<double>(valley) <= dip_ratio * lower) {
      kept.push_back(p);
    } else if (c[p] > c[q]) {
      kept.back() = p;
    }
  }
  return kept;
}

}  // namespace fes
