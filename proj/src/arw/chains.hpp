#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "arw/stabilizer.hpp"

namespace arw {

// Markov chain on stable configurations of V_n: each step adds one active
// particle at a uniformly random site (waking a sleeper there) and
// stabilizes with killing at both exits. The instruction tape persists
// across steps, so every toppling consumes fresh randomness; the uniform
// site draws come from a dedicated stream independent of the tape.
class DrivenChain {
 public:
  DrivenChain(std::int64_t n, const InstructionTape& tape, std::uint64_t drive_seed);
  DrivenChain(const DrivenChain&) = delete;
  DrivenChain& operator=(const DrivenChain&) = delete;

  // One driven-dissipative step. Returns false when the stabilization ran
  // out of fuel; the chain is then flagged and refuses further steps.
  bool step(std::uint64_t& fuel);

  std::int64_t particles() const { return config_.particle_count(region_); }  // Y_t
  const Configuration& config() const noexcept { return config_; }
  const Odometer& odometer() const noexcept { return odometer_; }
  std::uint64_t steps_taken() const noexcept { return t_; }
  std::int64_t n() const noexcept { return region_.size(); }
  bool fuel_exhausted() const noexcept { return fuel_exhausted_; }
  std::uint64_t total_topplings() const noexcept { return counters_.topplings; }

 private:
  SegmentSpec region_;
  InstructionTape tape_;
  Configuration config_;
  Odometer odometer_;
  SplitMix64 drive_;
  detail::RunCounters counters_;
  std::unique_ptr<detail::TopplingRun> run_;
  std::uint64_t t_ = 0;
  bool fuel_exhausted_ = false;
};

// Stabilizes one active particle per site of V_n with killing at both exits.
// By the exact-sampling lemma the resulting stable configuration follows the
// stationary distribution of the driven-dissipative chain, so the report's
// sleepers_remaining is a sample of S_n.
StabilizationReport sample_stationary(std::int64_t n, const InstructionTape& tape,
                                      std::uint64_t fuel);

struct HockeyTrajectory {
  std::int64_t n = 0;
  std::vector<std::int64_t> values;  // Y_0 = 0, Y_1, ..., Y_T
  bool fuel_exhausted = false;
};

// Runs the driven chain from the empty configuration for `steps` steps,
// recording the particle count after each one.
HockeyTrajectory hockey_run(std::int64_t n, std::int64_t steps, const InstructionTape& tape,
                            std::uint64_t drive_seed, std::uint64_t fuel);

enum class EjectorEval {
  full,       // evaluate N_k for every k = 1..K
  endpoints,  // evaluate only N_1 and N_K
};

struct EjectorCouplingResult {
  std::int64_t n = 0;
  std::int64_t m = 0;
  std::int64_t s_v = 0;  // Stab_V(1_V) on V = {-n,...,m}
  std::int64_t s_l = 0;  // Stab_L(1_L) on L = {-n,...,-1}
  std::int64_t s_r = 0;  // Stab_R(1_R) on R = {1,...,m}
  std::vector<std::pair<std::uint64_t, std::int64_t>> n_by_threshold;  // (k, N_k), ascending k
  std::uint64_t overlay_depth = 0;           // K actually used
  std::uint64_t base_odometer_at_pivot = 0;  // instructions used at 0 without overlay
  bool overlay_too_shallow = false;          // K did not exceed the base odometer at 0
  bool identity_sum_ok = false;              // N_1 == S_L + S_R
  std::optional<bool> identity_deep_ok;      // N_K == S_V, only checked when K deep enough
  bool fuel_exhausted = false;

  std::int64_t n_at(std::uint64_t k) const;
};

// On ONE shared tape over V = {-n,...,m}: computes S_V, the independent
// S_L/S_R pair, and N_k = Stab_V(1_V, tau_k) under ejector overlays at the
// origin. overlay_depth == 0 selects K = (base odometer at 0) + 1, which
// makes the N_K = S_V identity checkable on every replica.
EjectorCouplingResult ejector_coupling(std::int64_t n, std::int64_t m, std::uint64_t overlay_depth,
                                       const InstructionTape& tape, std::uint64_t fuel,
                                       EjectorEval eval = EjectorEval::full);

struct HoleSpreadResult {
  SegmentSpec interval;  // I: hull of the sites visited during the spreading
  Configuration config;  // parked particles, all active, one per hole of I
  Odometer odometer;
  std::int64_t holes_in_interval = 0;
  std::uint64_t topplings = 0;
  bool fuel_exhausted = false;
};

// Draws i.i.d. Bernoulli(hole_density) holes on the line and forces each of
// k particles started at the origin to walk, with acceptable topplings,
// until it reaches an unoccupied hole. Sleep instructions are consumed as
// no-op topplings so the walk never stalls.
HoleSpreadResult spread_to_holes(std::int64_t k, double hole_density, std::uint64_t hole_seed,
                                 const InstructionTape& tape, std::uint64_t fuel);

struct CoupledHockeySample {
  std::int64_t y_direct = 0;   // Y_t from plain stabilization
  std::int64_t y_coupled = 0;  // Y_t realized through the domination construction
  std::int64_t s_sample = 0;   // S_n realized on the same tape suffix
  bool fuel_exhausted = false;
};

// Domination construction behind Y_t <= S_n: place t uniform particles,
// topple multi-occupied sites until every site holds at most one active
// particle, then on the shared tape suffix realize S_n by a plain
// stabilization of 1_V and Y_t by walking out the particles missing from
// the intermediate configuration before stabilizing. The least-action
// principle forces y_coupled <= s_sample on every replica.
CoupledHockeySample coupled_hockey_sample(std::int64_t n, std::int64_t t,
                                          const InstructionTape& tape, std::uint64_t drive_seed,
                                          std::uint64_t fuel);

}  // namespace arw
