// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fes {

/// One step of the omega autotuner.
struct TuningStep {
  std::size_t iteration = 0;
  double rate = 0.0;   // acceptance over the batch that ended here
  double omega = 0.0;  // value after the update
};

/// Per-iteration observables of every walker plus sampler bookkeeping.
///
/// values[obs][row * walkers + walker]; row 0 holds the initial ensemble.
struct ChainRecord {
  std::vector<std::string> names;
  std::size_t walkers = 0;
  std::size_t rows = 0;
  std::vector<std::vector<double>> values;
  /// Acceptance rate per stage ("aies", "pcn", "joint", "rw", ...) measured
  /// after burn-in, or over the whole run when there is no post-burn-in part.
  std::map<std::string, double> acceptance;
  double burn_in_fraction = 0.10;
  double omega = 0.0;
  std::vector<TuningStep> tuning;
  std::map<std::string, std::string> meta;

  std::size_t observable_index(const std::string& name) const;
  double at(std::size_t obs, std::size_t row, std::size_t walker) const {
    return values[obs][row * walkers + walker];
  }
  std::vector<double> walker_series(std::size_t obs, std::size_t walker) const;
  /// Every walker's series with the leading burn-in rows removed.
  std::vector<std::vector<double>> post_burn_in(std::size_t obs) const;
};

/// Number of leading rows removed as burn-in: floor(fraction * n).
std::size_t burn_in_count(std::size_t n, double fraction);

/// Drops the leading floor(fraction * n) entries.
std::vector<double> drop_burn_in(std::span<const double> series,
                                 double fraction = 0.10);

/// Normalized autocorrelation of one series at lags 0..max_lag (biased,
/// mean-subtracted estimator). Throws DegenerateSeries for constant input
/// and InvalidArgument when max_lag >= length.
std::vector<double> autocorrelation(std::span<const double> series,
                                    std::size_t max_lag);

/// Ensemble autocorrelation: each walker's autocovariance about the pooled
/// mean, averaged over walkers, normalized at lag 0. Walkers stuck in
/// different places therefore show persistent correlation.
std::vector<double> ensemble_autocorrelation(
    const std::vector<std::vector<double>>& walkers, std::size_t max_lag);

struct SokalOptions {
  double window_constant = 5.0;
  /// Largest window considered, as a fraction of the series length.
  double max_window_fraction = 0.25;
};

struct IatEstimate {
  double tau = 0.0;
  std::size_t window = 0;
};

/// Self-consistent window applied to a precomputed ACF:
/// tau(W) = 1 + 2 sum_{k=1..W} rho(k), smallest W with W >= c tau(W).
/// The reported tau is at least 1.
IatEstimate sokal_window(std::span<const double> acf, double window_constant);

/// Integrated autocorrelation time by Sokal's windowing.
double iat_sokal(std::span<const double> series, const SokalOptions& opt = {});
double iat_sokal(const std::vector<std::vector<double>>& walkers,
                 const SokalOptions& opt = {});
IatEstimate iat_sokal_detail(const std::vector<std::vector<double>>& walkers,
                             const SokalOptions& opt = {});

/// N / tau.
double effective_sample_size(std::span<const double> series,
                             const SokalOptions& opt = {});
/// Total draws over all walkers divided by the ensemble IAT.
double effective_sample_size(const std::vector<std::vector<double>>& walkers,
                             const SokalOptions& opt = {});

/// sqrt(tau * var / N).
double corrected_standard_error(std::span<const double> series,
                                const SokalOptions& opt = {});
double corrected_standard_error(const std::vector<std::vector<double>>& walkers,
                                const SokalOptions& opt = {});

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double center(std::size_t b) const { return lo + (static_cast<double>(b) + 0.5) * bin_width(); }
};

/// Equal-width histogram on [lo, hi]; values outside are ignored.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo,
                    double hi);

/// Local maxima of the bin counts that are separated from each other by a
/// dip: between two accepted peaks some bin falls to at most `dip_ratio`
/// times the smaller peak. Peaks holding fewer than `min_fraction` of all
/// counts in their bin are ignored.
std::vector<std::size_t> separated_modes(const Histogram& h,
                                         double dip_ratio = 0.5,
                                         double min_fraction = 0.01);

}  // namespace fes
