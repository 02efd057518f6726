#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "arw/tape.hpp"

namespace arw::testing {

// chi^2 = sum (obs - exp)^2 / exp over categories with positive expectation.
inline double chi_square_stat(const std::vector<std::int64_t>& observed,
                              const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    const double d = static_cast<double>(observed[i]) - expected[i];
    stat += d * d / expected[i];
  }
  return stat;
}

// Upper chi-square quantiles at p = 1e-4 (tests accept when the statistic
// stays below these, i.e. p-value > 1e-4).
inline constexpr double kChi2Q1e4Dof2 = 18.42068;
inline constexpr double kChi2Q1e4Dof4 = 23.51274;

// First seed whose tape satisfies `pred`; deterministic by construction.
inline std::uint64_t find_seed_where(const ModelParams& params,
                                     const std::function<bool(const InstructionTape&)>& pred) {
  for (std::uint64_t seed = 0;; ++seed) {
    const InstructionTape tape(params, seed);
    if (pred(tape)) return seed;
  }
}

}  // namespace arw::testing
