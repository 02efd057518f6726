#pragma once

#include <cmath>
#include <string>

#include "arw/error.hpp"

namespace arw {

// Sleep rate lambda > 0 and probability p in (0,1) to jump to the left.
struct ModelParams {
  double lambda = 1.0;
  double p = 0.5;

  void validate() const {
    if (!(std::isfinite(lambda) && lambda > 0.0))
      fail(Errc::invalid_argument,
           "lambda must be a positive real, got " + std::to_string(lambda));
    if (!(std::isfinite(p) && p > 0.0 && p < 1.0))
      fail(Errc::invalid_argument,
           "p must be in the open interval (0,1), got " + std::to_string(p));
  }

  double sleep_prob() const noexcept { return lambda / (1.0 + lambda); }
  double left_prob() const noexcept { return p / (1.0 + lambda); }
  double right_prob() const noexcept { return (1.0 - p) / (1.0 + lambda); }
};

}  // namespace arw
