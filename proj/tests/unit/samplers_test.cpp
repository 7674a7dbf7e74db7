// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fes/diagnostics.hpp"
#include "fes/error.hpp"
#include "fes/problems.hpp"
#include "fes/rng.hpp"
#include "fes/samplers.hpp"
#include "fixtures.hpp"

namespace fes {
namespace {

using testing::correlated_gaussian;
using testing::flat_prior_target;
using testing::product_gaussian;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<ParameterState> prior_states(const TargetProblem& p, std::size_t L,
                                         std::uint64_t seed) {
  std::vector<ParameterState> out(L);
  for (std::size_t w = 0; w < L; ++w) {
    Stream rng(seed, static_cast<std::uint32_t>(w), 0, Stage::test);
    out[w].scalars = p.sample_scalars(rng);
    out[w].coefs = sample_prior_coefficients(p.coef_dim, rng);
  }
  return out;
}

std::vector<std::string> all_observables(const TargetProblem& p) {
  std::vector<std::string> names = p.scalar_names;
  for (std::size_t i = 1; i <= p.coef_dim; ++i) names.push_back("eta_" + std::to_string(i));
  return names;
}

// |mean(x^2) - v| in units of the IAT-corrected standard error.
double variance_z_score(const ChainRecord& r, const std::string& obs, double v) {
  auto series = r.post_burn_in(r.observable_index(obs));
  std::vector<double> flat;
  for (auto& w : series)
    for (auto& x : w) {
      x = x * x;
      flat.push_back(x);
    }
  const double se = corrected_standard_error(series);
  return std::abs(mean(flat) - v) / se;
}

// --- stretch distribution ------------------------------------------------

TEST(Stretch, InverseCdfBoundaries) {
  EXPECT_DOUBLE_EQ(stretch_from_uniform(2.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(stretch_from_uniform(2.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(stretch_from_uniform(1.0, 0.3), 1.0);
}

TEST(Stretch, RejectsBoundBelowOne) {
  EXPECT_THROW(stretch_from_uniform(0.5, 0.2), InvalidArgument);
  Stream rng(1);
  EXPECT_THROW(sample_stretch(0.99, rng), InvalidArgument);
}

TEST(Stretch, SampleMeanMatchesQuadrature) {
  const double a = 2.0;
  // Midpoint quadrature of z g(z) with g = z^{-1/2} / norm on [1/a, a].
  const std::size_t n = 200000;
  const double lo = 1.0 / a, h = (a - lo) / static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = lo + (static_cast<double>(k) + 0.5) * h;
    num += std::sqrt(z) * h;
    den += h / std::sqrt(z);
  }
  const double oracle = num / den;
  ASSERT_NEAR(oracle, 7.0 / 6.0, 1e-9);

  Stream rng(42);
  const std::size_t draws = 1000000;
  std::vector<double> z(draws);
  for (auto& v : z) {
    v = sample_stretch(a, rng);
    ASSERT_GE(v, 0.5);
    ASSERT_LE(v, 2.0);
  }
  const double se = std::sqrt(variance(z) / static_cast<double>(draws));
  EXPECT_LT(std::abs(mean(z) - oracle), 3.0 * se);
}

TEST(Stretch, CdfAtOne) {
  // P(Z <= 1) = (1 - a^{-1/2}) / (a^{1/2} - a^{-1/2}).
  const double a = 3.0;
  const double p = (1.0 - 1.0 / std::sqrt(a)) / (std::sqrt(a) - 1.0 / std::sqrt(a));
  Stream rng(7);
  const std::size_t n = 200000;
  std::size_t below = 0;
  for (std::size_t k = 0; k < n; ++k) below += sample_stretch(a, rng) <= 1.0 ? 1 : 0;
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(below) / static_cast<double>(n), p, 4.0 * se);
}

// --- AIES block update ---------------------------------------------------

Ensemble one_d_normal_pair(double xi, double xj) {
  const auto p = product_gaussian({1.0}, {});
  return make_ensemble(p, CoefficientMask(0, 0),
                       {ParameterState{{xi}, {}}, ParameterState{{xj}, {}}});
}

TEST(AiesBlockUpdate, UnitStretchIsAlwaysAccepted) {
  const auto p = product_gaussian({1.0, 2.0}, {0.5, 1.0, 3.0});
  const CoefficientMask mask(2, 3);
  auto e = make_ensemble(p, mask, prior_states(p, 4, 3));
  const auto before = e.walkers[1].state;
  StretchDraw draw{2, 1.0, std::log(0.999999)};
  EXPECT_TRUE(aies_block_update(e, 1, p, mask, draw));
  EXPECT_EQ(e.walkers[1].state, before);
}

TEST(AiesBlockUpdate, OneDimensionalExample) {
  const auto p = product_gaussian({1.0}, {});
  const CoefficientMask mask(0, 0);
  auto e = one_d_normal_pair(1.0, 0.0);
  // Ratio Z^0 exp((1 - 0.25) / 2) > 1: accepted for any uniform.
  EXPECT_TRUE(aies_block_update(e, 0, p, mask, StretchDraw{1, 0.5, std::log(0.999999)}));
  EXPECT_DOUBLE_EQ(e.walkers[0].state.scalars[0], 0.5);
  EXPECT_DOUBLE_EQ(e.walkers[0].block_log_density, -0.125);
}

TEST(AiesBlockUpdate, OneDimensionalRejectionThreshold) {
  const auto p = product_gaussian({1.0}, {});
  const CoefficientMask mask(0, 0);
  // Z = 2 proposes 2: log ratio (1 - 4) / 2 = -1.5.
  auto e = one_d_normal_pair(1.0, 0.0);
  EXPECT_FALSE(aies_block_update(e, 0, p, mask, StretchDraw{1, 2.0, -1.4}));
  EXPECT_DOUBLE_EQ(e.walkers[0].state.scalars[0], 1.0);
  EXPECT_TRUE(aies_block_update(e, 0, p, mask, StretchDraw{1, 2.0, -1.6}));
  EXPECT_DOUBLE_EQ(e.walkers[0].state.scalars[0], 2.0);
}

TEST(AiesBlockUpdate, ExponentUsesAffineDimension) {
  // Flat target, d = 3: log ratio is exactly 2 log Z.
  const auto p = flat_prior_target(3, 0);
  const CoefficientMask mask(0, 0);
  auto e = make_ensemble(p, mask, prior_states(p, 3, 5));
  const double z = 0.7, lr = 2.0 * std::log(z);
  EXPECT_FALSE(aies_block_update(e, 0, p, mask, StretchDraw{1, z, lr + 1e-9}));
  EXPECT_TRUE(aies_block_update(e, 0, p, mask, StretchDraw{1, z, lr - 1e-9}));
}

TEST(AiesBlockUpdate, PartnerMustDiffer) {
  const auto p = product_gaussian({1.0}, {});
  auto e = one_d_normal_pair(1.0, 0.0);
  EXPECT_THROW(aies_block_update(e, 0, p, CoefficientMask(0, 0), StretchDraw{0, 1.0, -1.0}),
               InvalidArgument);
  EXPECT_THROW(aies_block_update(e, 0, p, CoefficientMask(0, 0), StretchDraw{5, 1.0, -1.0}),
               InvalidArgument);
}

TEST(AiesBlockUpdate, EmptyAffineBlockIsNoOp) {
  const auto p = flat_prior_target(0, 4);
  const CoefficientMask mask(0, 4);
  auto e = make_ensemble(p, mask, prior_states(p, 3, 1));
  const auto before = e.walkers[0].state;
  EXPECT_FALSE(aies_block_update(e, 0, p, mask, StretchDraw{1, 1.5, -10.0}));
  EXPECT_EQ(e.walkers[0].state, before);
}

TEST(BlockSeparation, StagesTouchOnlyTheirBlocks) {
  const auto p = product_gaussian({1.0}, {0.5, 0.8, 1.2, 2.0, 0.3, 1.0});
  const CoefficientMask mask(2, 6);
  SamplerConfig cfg;
  auto e = make_ensemble(p, mask, prior_states(p, 8, 11));
  for (std::uint32_t t = 1; t <= 200; ++t) {
    const RngContext ctx{9, t};
    auto before = e;
    aies_stage(e, p, mask, cfg, ctx);
    for (std::size_t w = 0; w < e.size(); ++w)
      for (std::size_t k = mask.low; k < mask.total; ++k)
        ASSERT_EQ(e.walkers[w].state.coefs[k], before.walkers[w].state.coefs[k]);
    before = e;
    pcn_stage(e, p, mask, 0.5, cfg, ctx);
    for (std::size_t w = 0; w < e.size(); ++w) {
      ASSERT_EQ(e.walkers[w].state.scalars, before.walkers[w].state.scalars);
      for (std::size_t k = 0; k < mask.low; ++k)
        ASSERT_EQ(e.walkers[w].state.coefs[k], before.walkers[w].state.coefs[k]);
    }
    ASSERT_NO_THROW(verify_caches(e, p, mask));
  }
}

// --- affine equivariance ---------------------------------------------------

// Target of y = A x + b when x has precision P.
TargetProblem mapped_gaussian(const Eigen::Matrix2d& A, const Eigen::Vector2d& b,
                              const Eigen::Matrix2d& P) {
  const Eigen::Matrix2d Ainv = A.inverse();
  auto t = correlated_gaussian(2, {P(0, 0), P(0, 1), P(1, 0), P(1, 1)});
  t.scalar_prior = [Ainv, b, P](std::span<const double> y) {
    const Eigen::Vector2d x = Ainv * (Eigen::Vector2d(y[0], y[1]) - b);
    return -0.5 * x.dot(P * x);
  };
  return t;
}

void check_equivariance(AiesVariant variant) {
  Eigen::Matrix2d P;
  P << 2.0, 1.2, 1.2, 1.5;
  Eigen::Matrix2d A;
  A << 3.0, -1.0, 0.5, 0.2;
  const Eigen::Vector2d b(4.0, -7.0);
  const auto px = correlated_gaussian(2, {P(0, 0), P(0, 1), P(1, 0), P(1, 1)});
  const auto py = mapped_gaussian(A, b, P);
  const CoefficientMask mask(0, 0);

  auto xs = prior_states(px, 8, 21);
  auto map = [&](const ParameterState& s) {
    const Eigen::Vector2d y = A * Eigen::Vector2d(s.scalars[0], s.scalars[1]) + b;
    return std::vector<double>{y(0), y(1)};
  };
  auto ex = make_ensemble(px, mask, xs);

  // Rounding differences are amplified by later stretch moves, so the mapped
  // ensemble is re-synchronized before each step and the drift of a single
  // step is measured.
  SamplerConfig cfg;
  cfg.variant = variant;
  double worst = 0.0;
  std::size_t accepted = 0;
  for (std::uint32_t t = 1; t <= 10000; ++t) {
    const RngContext ctx{33, t};
    std::vector<ParameterState> ys;
    for (const auto& w : ex.walkers) ys.push_back({map(w.state), {}});
    auto ey = make_ensemble(py, mask, ys);
    const auto ax = aies_stage(ex, px, mask, cfg, ctx);
    const auto ay = aies_stage(ey, py, mask, cfg, ctx);
    ASSERT_EQ(ax.accepted, ay.accepted) << "step " << t;
    accepted += ax.accepted;
    for (std::size_t w = 0; w < ex.size(); ++w) {
      const auto y = map(ex.walkers[w].state);
      const auto& got = ey.walkers[w].state.scalars;
      const double scale = std::max(1.0, std::abs(y[0]) + std::abs(y[1]));
      worst = std::max({worst, std::abs(y[0] - got[0]) / scale,
                        std::abs(y[1] - got[1]) / scale});
    }
    ASSERT_LE(worst, 1e-8) << "step " << t;
  }
  EXPECT_GT(accepted, 0u);
}

TEST(AffineEquivariance, SequentialStretchMoves) {
  check_equivariance(AiesVariant::sequential);
}

TEST(AffineEquivariance, TwoGroupStretchMoves) {
  check_equivariance(AiesVariant::parallel);
}

// --- PCN complement update -----------------------------------------------

TEST(PcnComplement, ZeroLikelihoodAlwaysAccepts) {
  const auto p = flat_prior_target(1, 10);
  const CoefficientMask mask(3, 10);
  auto e = make_ensemble(p, mask, prior_states(p, 2, 2));
  for (std::uint32_t t = 0; t < 1000; ++t) {
    Stream rng(5, 0, t, Stage::pcn);
    ASSERT_TRUE(pcn_complement_update(e.walkers[0], p, mask, 0.3, rng));
  }
}

TEST(PcnComplement, UnitStepIgnoresCurrentState) {
  const auto p = flat_prior_target(0, 6);
  const CoefficientMask mask(0, 6);
  auto e = make_ensemble(p, mask, prior_states(p, 2, 4));
  ASSERT_NE(e.walkers[0].state, e.walkers[1].state);
  Stream r0(8, 0, 1, Stage::pcn), r1(8, 0, 1, Stage::pcn);
  pcn_complement_update(e.walkers[0], p, mask, 1.0, r0);
  pcn_complement_update(e.walkers[1], p, mask, 1.0, r1);
  EXPECT_EQ(e.walkers[0].state.coefs, e.walkers[1].state.coefs);
}

TEST(PcnComplement, UnitStepDrawsFromPrior) {
  const auto p = flat_prior_target(0, 1);
  const CoefficientMask mask(0, 1);
  Walker w{{{}, {5.0}}, 0.0, -12.5};
  std::vector<double> draws;
  Stream rng(6);
  for (int k = 0; k < 100000; ++k) {
    w.state.coefs[0] = 5.0;
    pcn_complement_update(w, p, mask, 1.0, rng);
    draws.push_back(w.state.coefs[0]);
  }
  EXPECT_NEAR(mean(draws), 0.0, 4.0 / std::sqrt(1e5));
  EXPECT_NEAR(variance(draws), 1.0, 4.0 * std::sqrt(2.0 / 1e5));
}

TEST(PcnComplement, SmallStepPerturbationBound) {
  const auto p = flat_prior_target(0, 50);
  const CoefficientMask mask(0, 50);
  const double omega = 0.01;
  const double bound = 5.0 * omega * std::sqrt(50.0);
  for (std::uint32_t t = 0; t < 1000; ++t) {
    Stream init(3, 0, t, Stage::test);
    Walker w{{{}, sample_prior_coefficients(50, init)}, 0.0, 0.0};
    const auto before = w.state.coefs;
    Stream rng(3, 0, t, Stage::pcn);
    ASSERT_TRUE(pcn_complement_update(w, p, mask, omega, rng));
    double sq = 0.0;
    for (std::size_t k = 0; k < 50; ++k)
      sq += (w.state.coefs[k] - before[k]) * (w.state.coefs[k] - before[k]);
    ASSERT_LE(std::sqrt(sq), bound);
  }
}

TEST(PcnComplement, RejectsStepOutsideUnitInterval) {
  const auto p = flat_prior_target(0, 2);
  Walker w{{{}, {0.0, 0.0}}, 0.0, 0.0};
  Stream rng(1);
  EXPECT_THROW(pcn_complement_update(w, p, CoefficientMask(0, 2), 0.0, rng), InvalidArgument);
  EXPECT_THROW(pcn_complement_update(w, p, CoefficientMask(0, 2), 1.5, rng), InvalidArgument);
}

TEST(PcnComplement, AcceptanceUsesLikelihoodDifferenceOnly) {
  // phi = -x^2 / 2 on one coefficient; block density carries prior terms
  // that must not enter the PCN ratio.
  auto p = product_gaussian({}, {0.5});
  const CoefficientMask mask(0, 1);
  Walker w{{{}, {1.0}}, -0.5, -0.5};
  std::size_t accepted = 0;
  double phi_gap = 0.0;
  for (std::uint32_t t = 0; t < 2000; ++t) {
    Walker trial = w;
    Stream rng(4, 0, t, Stage::pcn);
    Stream replay(4, 0, t, Stage::pcn);
    const double prop = std::sqrt(1.0 - 0.25) * 1.0 + 0.5 * replay.normal();
    const double log_u = std::log(replay.uniform());
    const bool expect = log_u < -0.5 * prop * prop + 0.5;
    ASSERT_EQ(pcn_complement_update(trial, p, mask, 0.5, rng), expect);
    accepted += expect ? 1 : 0;
    if (expect) phi_gap = std::max(phi_gap, std::abs(trial.log_likelihood + 0.5 * prop * prop));
  }
  EXPECT_GT(accepted, 0u);
  EXPECT_LT(phi_gap, 1e-12);
}

// --- full iterations -----------------------------------------------------

TEST(FesIteration, NoAffineBlockReducesToPcn) {
  const auto p = product_gaussian({}, {0.4, 0.9, 1.5, 0.7});
  const CoefficientMask mask(0, 4);
  SamplerConfig cfg;
  cfg.kind = SamplerKind::pcn;
  auto a = make_ensemble(p, mask, prior_states(p, 5, 12));
  auto b = a;
  for (std::uint32_t t = 1; t <= 100; ++t) {
    const RngContext ctx{17, t};
    const auto sa = fes_iteration(a, p, mask, cfg, 0.4, ctx);
    const auto sb = pcn_iteration(b, p, cfg, 0.4, ctx);
    ASSERT_EQ(sa.aies.proposed, 0u);
    ASSERT_EQ(sa.pcn.accepted, sb.pcn.accepted);
    for (std::size_t w = 0; w < a.size(); ++w) ASSERT_EQ(a.walkers[w].state, b.walkers[w].state);
  }
}

TEST(FesIteration, NoLowModesMovesOnlyScalarsInAies) {
  const auto p = flat_prior_target(2, 5);
  const CoefficientMask mask(0, 5);
  SamplerConfig cfg;
  auto e = make_ensemble(p, mask, prior_states(p, 6, 13));
  const auto before = e;
  aies_stage(e, p, mask, cfg, RngContext{1, 1});
  bool moved = false;
  for (std::size_t w = 0; w < e.size(); ++w) {
    EXPECT_EQ(e.walkers[w].state.coefs, before.walkers[w].state.coefs);
    moved = moved || e.walkers[w].state.scalars != before.walkers[w].state.scalars;
  }
  EXPECT_TRUE(moved);
}

TEST(FesIteration, FlatTargetAcceptsEverything) {
  // d = 1 makes Z^{d-1} = 1, and phi = 0 makes the PCN ratio 1.
  const auto p = flat_prior_target(1, 8);
  const CoefficientMask mask(0, 8);
  SamplerConfig cfg;
  cfg.L = 10;
  auto e = make_ensemble(p, mask, prior_states(p, 10, 14));
  const auto s = fes_iteration(e, p, mask, cfg, 0.3, RngContext{2, 1});
  EXPECT_EQ(s.aies.accepted, 10u);
  EXPECT_EQ(s.aies.proposed, 10u);
  EXPECT_EQ(s.pcn.accepted, 10u);
  EXPECT_EQ(s.pcn.proposed, 10u);
}

TEST(FesIteration, PriorInvarianceOnFlatTarget) {
  const auto p = flat_prior_target(1, 4);
  SamplerConfig cfg;
  cfg.M = 0;
  cfg.L = 10;
  cfg.iterations = 3000;
  cfg.seed = 15;
  cfg.omega = 0.5;
  cfg.autotune = false;
  const auto r = run_sampler(p, cfg, std::vector<std::string>{"eta_1", "eta_2", "eta_3", "eta_4"});
  EXPECT_DOUBLE_EQ(r.acceptance.at("aies"), 1.0);
  EXPECT_DOUBLE_EQ(r.acceptance.at("pcn"), 1.0);
  for (const auto& name : r.names) EXPECT_LT(variance_z_score(r, name, 1.0), 3.0) << name;
}

class ProductGaussianMoments : public ::testing::TestWithParam<SamplerKind> {};

TEST_P(ProductGaussianMoments, VariancesWithinThreeCorrectedSe) {
  const std::vector<double> sv{2.0};
  // Posterior variances at most the prior's: wider targets make the PCN
  // move an independence sampler with heavy-tailed weights.
  const std::vector<double> cv{0.5, 0.9, 0.8, 1.0, 0.6, 0.3};
  const auto p = product_gaussian(sv, cv);
  SamplerConfig cfg;
  cfg.kind = GetParam();
  cfg.M = 2;
  cfg.L = 20;
  cfg.iterations = 20000;
  cfg.seed = 101;
  cfg.omega = 0.5;
  const auto r = run_sampler(p, cfg, all_observables(p));
  EXPECT_LT(variance_z_score(r, "x1", sv[0]), 3.0);
  for (std::size_t i = 0; i < cv.size(); ++i) {
    const std::string name = "eta_" + std::to_string(i + 1);
    EXPECT_LT(variance_z_score(r, name, cv[i]), 3.0) << name;
    const auto series = r.post_burn_in(r.observable_index(name));
    std::vector<double> flat;
    for (const auto& w : series) flat.insert(flat.end(), w.begin(), w.end());
    EXPECT_LT(std::abs(mean(flat)), 3.0 * corrected_standard_error(series)) << name;
  }
}

INSTANTIATE_TEST_SUITE_P(Samplers, ProductGaussianMoments,
                         ::testing::Values(SamplerKind::fes, SamplerKind::fes_joint),
                         [](const auto& info) {
                           return info.param == SamplerKind::fes ? std::string("Fes")
                                                                 : std::string("FesJoint");
                         });

// --- joint update --------------------------------------------------------

TEST(JointUpdate, FlatTargetAcceptanceFormula) {
  const auto p = flat_prior_target(2, 4);
  const CoefficientMask mask(1, 4);  // d = 3
  auto e = make_ensemble(p, mask, prior_states(p, 3, 16));
  const double z = 1.6;
  const double old_low = e.walkers[0].state.coefs[0];
  const double new_low = e.walkers[1].state.coefs[0] + z * (old_low - e.walkers[1].state.coefs[0]);
  const double lr = 2.0 * std::log(z) - 0.5 * (new_low * new_low - old_low * old_low);

  auto reject = e;
  Stream r1(1, 0, 1, Stage::joint);
  EXPECT_FALSE(joint_update(reject, 0, p, mask, 0.3, StretchDraw{1, z, lr + 1e-9}, r1));
  EXPECT_EQ(reject.walkers[0].state, e.walkers[0].state);

  Stream r2(1, 0, 1, Stage::joint);
  EXPECT_TRUE(joint_update(e, 0, p, mask, 0.3, StretchDraw{1, z, lr - 1e-9}, r2));
  EXPECT_NEAR(e.walkers[0].state.coefs[0], new_low, 1e-14);
  EXPECT_NO_THROW(verify_caches(e, p, mask));
}

TEST(JointUpdate, TinyMoveIsAccepted) {
  const auto p = product_gaussian({1.0}, {0.5, 0.5, 0.5});
  const CoefficientMask mask(1, 3);
  auto e = make_ensemble(p, mask, prior_states(p, 3, 17));
  std::size_t accepted = 0;
  for (std::uint32_t t = 0; t < 100; ++t) {
    Stream rng(2, 0, t, Stage::joint);
    accepted += joint_update(e, 0, p, mask, 1e-8, StretchDraw{1, 1.0, std::log(0.999)}, rng);
  }
  EXPECT_EQ(accepted, 100u);
}

// --- hybrid --------------------------------------------------------------

TEST(AdaptState, InitialProposalCovariance) {
  AdaptState s(3);
  const Eigen::MatrixXd expected = (0.01 / 3.0) * Eigen::MatrixXd::Identity(3, 3);
  EXPECT_TRUE(s.proposal_covariance().isApprox(expected, 1e-15));
  const std::vector<double> x{1.0, 2.0, 3.0};
  for (std::size_t k = 0; k + 1 < AdaptState::kWarmup; ++k) s.push(x);
  EXPECT_TRUE(s.proposal_covariance().isApprox(expected, 1e-15));
}

TEST(AdaptState, RunningMomentsMatchBatch) {
  const std::size_t n = 1500, d = 3;
  Eigen::MatrixXd data(n, d);
  Stream rng(18);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.normal(), v = rng.normal(), w = rng.normal();
    data(i, 0) = 10.0 + u;
    data(i, 1) = -3.0 + 0.5 * u + 2.0 * v;
    data(i, 2) = 0.1 * w - v;
  }
  AdaptState s(d);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd row = data.row(i).transpose();
    s.push(std::span<const double>(row.data(), d));
  }
  const Eigen::RowVectorXd mu = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  EXPECT_LT((s.mean() - mu.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.covariance() - cov).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::MatrixXd prop =
      (2.38 * 2.38 / 3.0) * cov + 1e-8 * Eigen::MatrixXd::Identity(3, 3);
  EXPECT_LT((s.proposal_covariance() - prop).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(AdaptState, DimensionMismatchThrows) {
  AdaptState s(2);
  const std::vector<double> x{1.0};
  EXPECT_THROW(s.push(x), InvalidArgument);
}

TEST(HybridIteration, TwoDimensionalGaussianAcceptance) {
  // Correlation 0.9, variances 1 and 4.
  const double r = 0.9, s1 = 1.0, s2 = 2.0;
  Eigen::Matrix2d cov;
  cov << s1 * s1, r * s1 * s2, r * s1 * s2, s2 * s2;
  const Eigen::Matrix2d P = cov.inverse();
  const auto p = correlated_gaussian(2, {P(0, 0), P(0, 1), P(1, 0), P(1, 1)});
  const CoefficientMask mask(0, 0);
  auto e = make_ensemble(p, mask, {ParameterState{{0.5, 0.5}, {}}, ParameterState{{0.0, 0.0}, {}}});
  Walker w = e.walkers[0];
  AdaptState adapt(2);
  AcceptanceCounter after;
  for (std::uint32_t t = 1; t <= 20000; ++t) {
    Stream rw(19, 0, t, Stage::hybrid), pc(19, 0, t, Stage::pcn);
    const auto st = hybrid_iteration(w, p, mask, adapt, 0.5, rw, pc);
    EXPECT_FALSE(st.pcn_proposed);
    if (t > 2 * AdaptState::kWarmup) after.add(st.rw_accepted);
  }
  EXPECT_GE(after.rate(), 0.1);
  EXPECT_LE(after.rate(), 0.5);
  EXPECT_NEAR(adapt.covariance()(1, 1), 4.0, 1.0);
}

TEST(HybridIteration, RunsPcnOnComplement) {
  const auto p = flat_prior_target(1, 3);
  const CoefficientMask mask(1, 3);
  auto e = make_ensemble(p, mask, prior_states(p, 2, 20));
  AdaptState adapt(2);
  Stream rw(1, 0, 1, Stage::hybrid), pc(1, 0, 1, Stage::pcn);
  const auto st = hybrid_iteration(e.walkers[0], p, mask, adapt, 0.5, rw, pc);
  EXPECT_TRUE(st.pcn_proposed);
  EXPECT_TRUE(st.pcn_accepted);
  EXPECT_EQ(adapt.count(), 1u);
  AdaptState wrong(5);
  EXPECT_THROW(hybrid_iteration(e.walkers[0], p, mask, wrong, 0.5, rw, pc), InvalidArgument);
}

// --- autotuning ----------------------------------------------------------

TEST(Autotune, AllAcceptGrowsToOne) {
  double omega = 0.1;
  for (int k = 0; k < 100; ++k) omega = autotune_omega({100, 100}, omega, 0.2);
  EXPECT_DOUBLE_EQ(omega, 1.0);
}

TEST(Autotune, AllRejectShrinksToFloor) {
  double omega = 0.5;
  double previous = omega;
  for (int k = 0; k < 100; ++k) {
    omega = autotune_omega({0, 100}, omega, 0.2);
    EXPECT_LE(omega, previous);
    previous = omega;
  }
  EXPECT_DOUBLE_EQ(omega, 1e-4);
}

TEST(Autotune, EmptyBatchLeavesStepUnchanged) {
  EXPECT_DOUBLE_EQ(autotune_omega({0, 0}, 0.37, 0.2), 0.37);
  EXPECT_DOUBLE_EQ(autotune_omega({20, 100}, 0.37, 0.2), 0.37);
}

TEST(Autotune, ConvergesOnSyntheticAcceptanceCurve) {
  auto p_of = [](double omega) { return std::exp(-5.0 * omega); };
  Stream rng(23);
  double omega = 0.9;
  for (int batch = 0; batch < 300; ++batch) {
    AcceptanceCounter c;
    for (std::size_t k = 0; k < kTuneBatch; ++k) c.add(rng.uniform() < p_of(omega));
    omega = autotune_omega(c, omega, 0.2);
  }
  EXPECT_NEAR(p_of(omega), 0.2, 0.05);
}

// --- run_sampler ---------------------------------------------------------

TEST(RunSampler, ZeroIterationsRecordsInitialEnsemble) {
  const auto p = product_gaussian({1.0}, {1.0, 1.0});
  SamplerConfig cfg;
  cfg.M = 1;
  cfg.L = 6;
  cfg.iterations = 0;
  const auto r = run_sampler(p, cfg, std::vector<std::string>{"x1", "eta_2"});
  EXPECT_EQ(r.rows, 1u);
  EXPECT_EQ(r.walkers, 6u);
  ASSERT_EQ(r.values.size(), 2u);
  EXPECT_EQ(r.values[0].size(), 6u);
  EXPECT_TRUE(r.tuning.empty());
  EXPECT_DOUBLE_EQ(r.omega, cfg.omega);
}

TEST(RunSampler, SameSeedIsBitIdentical) {
  const auto p = product_gaussian({1.0}, {0.5, 1.0, 2.0});
  for (auto kind : {SamplerKind::fes, SamplerKind::fes_joint, SamplerKind::pcn, SamplerKind::hybrid}) {
    SamplerConfig cfg;
    cfg.kind = kind;
    cfg.M = 1;
    cfg.L = 6;
    cfg.iterations = 300;
    cfg.seed = 77;
    const auto names = all_observables(p);
    const auto a = run_sampler(p, cfg, names);
    const auto b = run_sampler(p, cfg, names);
    EXPECT_EQ(a.values, b.values) << to_string(kind);
    EXPECT_EQ(a.acceptance, b.acceptance);
    EXPECT_EQ(a.omega, b.omega);
    cfg.seed = 78;
    EXPECT_NE(run_sampler(p, cfg, names).values, a.values);
  }
}

TEST(RunSampler, WorkerCountInvariance) {
  const auto p = product_gaussian({1.0, 3.0}, {0.5, 1.0, 2.0, 0.7});
  const auto names = all_observables(p);
  for (auto kind : {SamplerKind::fes, SamplerKind::fes_joint, SamplerKind::pcn, SamplerKind::hybrid}) {
    SamplerConfig cfg;
    cfg.kind = kind;
    cfg.variant = AiesVariant::parallel;
    cfg.M = 2;
    cfg.L = 11;
    cfg.iterations = 200;
    cfg.seed = 5;
    cfg.threads = 1;
    const auto one = run_sampler(p, cfg, names);
    for (unsigned threads : {2u, 3u, 8u}) {
      cfg.threads = threads;
      EXPECT_EQ(run_sampler(p, cfg, names).values, one.values)
          << to_string(kind) << " threads=" << threads;
    }
  }
}

TEST(RunSampler, CacheChecksHoldOnAdvection) {
  const auto prob = make_advection_problem(3, {100, false});
  const auto t = prob.target();
  for (auto kind : {SamplerKind::fes, SamplerKind::fes_joint, SamplerKind::pcn, SamplerKind::hybrid}) {
    SamplerConfig cfg;
    cfg.kind = kind;
    cfg.M = 3;
    cfg.L = 8;
    cfg.iterations = 100;
    cfg.seed = 4;
    cfg.check_caches = true;
    EXPECT_NO_THROW(run_sampler(t, cfg, std::vector<std::string>{"c"})) << to_string(kind);
  }
}

TEST(RunSampler, PcnAutotuneReachesTargetRateOnAdvection) {
  const auto prob = make_advection_problem(1, {100, false});
  const auto t = prob.target();
  SamplerConfig cfg;
  cfg.kind = SamplerKind::pcn;
  cfg.L = 10;
  cfg.iterations = 10000;
  cfg.seed = 9;
  // At most a factor e^{-0.2} per 100-iteration batch: reaching omega ~ 0.009
  // from 0.1 takes about 25 batches.
  cfg.burn_in_fraction = 0.3;
  cfg.init = InitMode::ball;
  cfg.ball_center = prob.truth;
  const auto r = run_sampler(t, cfg, std::vector<std::string>{"c"});
  ASSERT_FALSE(r.tuning.empty());
  EXPECT_GE(r.acceptance.at("pcn"), 0.15);
  EXPECT_LE(r.acceptance.at("pcn"), 0.25);
  // Frozen after burn-in.
  EXPECT_LE(r.tuning.back().iteration, 3000u);
  EXPECT_DOUBLE_EQ(r.omega, r.tuning.back().omega);
}

TEST(RunSampler, NonFiniteInitialDensityThrows) {
  auto p = flat_prior_target(1, 2);
  p.scalar_prior = [](std::span<const double> x) { return x[0] > 0.0 ? 0.0 : kNegInf; };
  SamplerConfig cfg;
  cfg.M = 0;
  cfg.L = 4;
  cfg.init = InitMode::ball;
  cfg.ball_center = ParameterState{{-1.0}, {0.0, 0.0}};
  EXPECT_THROW(run_sampler(p, cfg, std::vector<std::string>{"x1"}), InitializationError);
}

TEST(RunSampler, ConfigValidation) {
  const auto p = product_gaussian({1.0, 1.0}, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0});
  SamplerConfig ok;
  ok.M = 5;
  ok.L = 8;
  EXPECT_NO_THROW(validate(ok, p));
  auto bad = ok;
  bad.L = 7;  // not above scalar_dim + M
  EXPECT_THROW(validate(bad, p), InvalidArgument);
  bad = ok;
  bad.a = 0.9;
  EXPECT_THROW(validate(bad, p), InvalidArgument);
  bad = ok;
  bad.omega = 0.0;
  EXPECT_THROW(validate(bad, p), InvalidArgument);
  bad = ok;
  bad.M = 7;
  EXPECT_THROW(validate(bad, p), InvalidArgument);
  bad = ok;
  bad.init = InitMode::ball;
  EXPECT_THROW(validate(bad, p), InvalidArgument);
  bad = ok;
  bad.threads = 0;
  EXPECT_THROW(validate(bad, p), InvalidArgument);
}

TEST(VerifyCaches, DetectsStaleCache) {
  const auto p = product_gaussian({1.0}, {1.0, 0.5});
  const CoefficientMask mask(1, 2);
  auto e = make_ensemble(p, mask, prior_states(p, 3, 24));
  EXPECT_NO_THROW(verify_caches(e, p, mask));
  e.walkers[1].log_likelihood += 1e-3;
  EXPECT_THROW(verify_caches(e, p, mask), NumericalError);
}

// --- exchangeability -----------------------------------------------------

TEST(Exchangeability, PermutedWalkersAndStreamsGivePermutedChains) {
  const auto p = product_gaussian({1.0}, {0.5, 1.0, 2.0, 0.7});
  const CoefficientMask mask(2, 4);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  const auto states = prior_states(p, 5, 25);
  std::vector<ParameterState> permuted;
  for (std::size_t k : perm) permuted.push_back(states[k]);
  auto a = make_ensemble(p, mask, states);
  auto b = make_ensemble(p, mask, permuted);
  std::vector<AdaptState> adapt_a(5, AdaptState(3)), adapt_b(5, AdaptState(3));

  for (std::uint32_t t = 1; t <= 300; ++t) {
    const RngContext ctx{26, t};
    for (std::size_t k = 0; k < 5; ++k) {
      Stream ra = ctx.stream(perm[k], Stage::pcn), rb = ctx.stream(perm[k], Stage::pcn);
      pcn_complement_update(a.walkers[perm[k]], p, mask, 0.4, ra);
      pcn_complement_update(b.walkers[k], p, mask, 0.4, rb);
      Stream ha = ctx.stream(perm[k], Stage::hybrid), hb = ctx.stream(perm[k], Stage::hybrid);
      Stream pa = ctx.stream(perm[k], Stage::test), pb = ctx.stream(perm[k], Stage::test);
      hybrid_iteration(a.walkers[perm[k]], p, mask, adapt_a[perm[k]], 0.4, ha, pa);
      hybrid_iteration(b.walkers[k], p, mask, adapt_b[k], 0.4, hb, pb);
    }
    for (std::size_t k = 0; k < 5; ++k)
      ASSERT_EQ(b.walkers[k].state, a.walkers[perm[k]].state) << "step " << t;
  }
}

}  // namespace
}  // namespace fes
