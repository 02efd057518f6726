#pragma once

#include <cstdint>
#include <limits>

#include "arw/params.hpp"
#include "arw/rng.hpp"

namespace arw {

enum class Instruction : std::uint8_t {
  sleep = 0,
  jump_left = 1,
  jump_right = 2,
  eject = 3,  // never drawn at random, only installed by an ejector overlay
};

// Site-wise instruction stacks tau_{x,j}, j >= 1. Every cell is a pure
// function of (seed, site, j), so a replayed stabilization consumes
// bit-identical instructions and an ejector overlay shares all base draws.
// Marginals: sleep w.p. lambda/(1+lambda), jump left w.p. p/(1+lambda),
// jump right w.p. (1-p)/(1+lambda); distinct cells independent.
class InstructionTape {
 public:
  InstructionTape(ModelParams params, std::uint64_t seed) : params_(params), seed_(seed) {
    params_.validate();
    sleep_threshold_ = params_.sleep_prob();
    left_threshold_ = sleep_threshold_ + params_.left_prob();
  }

  // Copy of `base` where every instruction with index j >= threshold_k at
  // `site` is an ejector seat; all other cells are bit-identical to `base`.
  static InstructionTape with_ejector(const InstructionTape& base, std::int64_t site,
                                      std::uint64_t threshold_k) {
    if (threshold_k < 1)
      fail(Errc::invalid_argument, "ejector overlay threshold_k must be >= 1");
    InstructionTape t = base;
    t.eject_site_ = site;
    t.eject_from_ = threshold_k;
    return t;
  }

  Instruction at(std::int64_t site, std::uint64_t j) const noexcept {
    if (j >= eject_from_ && site == eject_site_) return Instruction::eject;
    const std::uint64_t cell =
        mix64(static_cast<std::uint64_t>(site) * kGolden + j * 0xD1B54A32D192ED03ULL);
    const double u = u64_to_unit(mix64(seed_ ^ cell));
    if (u < sleep_threshold_) return Instruction::sleep;
    if (u < left_threshold_) return Instruction::jump_left;
    return Instruction::jump_right;
  }

  const ModelParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool has_ejector() const noexcept {
    return eject_from_ != std::numeric_limits<std::uint64_t>::max();
  }
  std::int64_t eject_site() const noexcept { return eject_site_; }
  std::uint64_t eject_threshold() const noexcept { return eject_from_; }

 private:
  ModelParams params_;
  std::uint64_t seed_;
  double sleep_threshold_ = 0.0;
  double left_threshold_ = 0.0;
  std::int64_t eject_site_ = 0;
  std::uint64_t eject_from_ = std::numeric_limits<std::uint64_t>::max();
};

}  // namespace arw
