// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fes {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Which part of an iteration a random stream feeds. Every (seed, walker,
/// iteration, stage) tuple owns an independent stream, so the draws a walker
/// sees do not depend on update order or on how many threads run.
enum class Stage : std::uint32_t {
  init = 0,
  aies = 1,
  pcn = 2,
  joint = 3,
  hybrid = 4,
  data = 5,
  test = 6,
};

/// Counter-based random stream. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint32_t;

  Stream(std::uint64_t seed, std::uint32_t walker, std::uint32_t iteration,
         Stage stage);
  explicit Stream(std::uint64_t seed)
      : Stream(seed, 0, 0, Stage::test) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; pairs are cached.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::uint32_t below(std::uint32_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  unsigned used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Streams for one iteration of a seeded run.
struct RngContext {
  std::uint64_t seed = 0;
  std::uint32_t iteration = 0;

  Stream stream(std::size_t walker, Stage stage) const {
    return Stream(seed, static_cast<std::uint32_t>(walker), iteration, stage);
  }
};

}  // namespace fes
