#include "arw/chains.hpp"

#include <algorithm>

namespace arw {

using detail::RunCounters;
using detail::SelectOrder;
using detail::TopplingRun;

DrivenChain::DrivenChain(std::int64_t n, const InstructionTape& tape, std::uint64_t drive_seed)
    : region_(SegmentSpec::v_n(n)), tape_(tape), drive_(drive_seed) {
  if (n < 1) fail(Errc::invalid_argument, "driven chain requires n >= 1");
  run_ = std::make_unique<TopplingRun>(config_, odometer_, tape_, region_, SelectOrder::any, 0,
                                       1, nullptr, &counters_);
}

bool DrivenChain::step(std::uint64_t& fuel) {
  if (fuel_exhausted_) return false;
  const std::int64_t site =
      region_.lo + static_cast<std::int64_t>(drive_.next_below(static_cast<std::uint64_t>(n())));
  config_.add_active(site);
  run_->begin_pass();
  run_->enqueue_if_unstable(site);
  run_->run_to_stable(fuel);
  ++t_;
  if (run_->fuel_exhausted()) {
    fuel_exhausted_ = true;
    return false;
  }
  return true;
}

StabilizationReport sample_stationary(std::int64_t n, const InstructionTape& tape,
                                      std::uint64_t fuel) {
  if (n < 1) fail(Errc::invalid_argument, "sample_stationary requires n >= 1");
  const SegmentSpec region = SegmentSpec::v_n(n);
  return stabilize_fast(Configuration::ones(region), region, tape, fuel);
}

HockeyTrajectory hockey_run(std::int64_t n, std::int64_t steps, const InstructionTape& tape,
                            std::uint64_t drive_seed, std::uint64_t fuel) {
  if (steps < 0) fail(Errc::invalid_argument, "hockey_run requires steps >= 0");
  HockeyTrajectory out;
  out.n = n;
  out.values.reserve(static_cast<std::size_t>(steps) + 1);
  out.values.push_back(0);
  DrivenChain chain(n, tape, drive_seed);
  for (std::int64_t t = 0; t < steps; ++t) {
    if (!chain.step(fuel)) {
      out.fuel_exhausted = true;
      break;
    }
    out.values.push_back(chain.particles());
  }
  return out;
}

std::int64_t EjectorCouplingResult::n_at(std::uint64_t k) const {
  for (const auto& [kk, v] : n_by_threshold)
    if (kk == k) return v;
  fail(Errc::internal, "N_k not evaluated for k = " + std::to_string(k));
}

EjectorCouplingResult ejector_coupling(std::int64_t n, std::int64_t m, std::uint64_t overlay_depth,
                                       const InstructionTape& tape, std::uint64_t fuel,
                                       EjectorEval eval) {
  if (n < 1 || m < 1) fail(Errc::invalid_argument, "ejector coupling requires n, m >= 1");
  const SegmentSpec v{-n, m};
  const SegmentSpec left{-n, -1};
  const SegmentSpec right{1, m};

  EjectorCouplingResult res;
  res.n = n;
  res.m = m;

  const StabilizationReport base = stabilize_fast(Configuration::ones(v), v, tape, fuel);
  res.s_v = base.sleepers_remaining;
  res.base_odometer_at_pivot = base.odometer.at(0);
  res.fuel_exhausted |= base.fuel_exhausted;

  const StabilizationReport l = stabilize_fast(Configuration::ones(left), left, tape, fuel);
  const StabilizationReport r = stabilize_fast(Configuration::ones(right), right, tape, fuel);
  res.s_l = l.sleepers_remaining;
  res.s_r = r.sleepers_remaining;
  res.fuel_exhausted |= l.fuel_exhausted || r.fuel_exhausted;

  res.overlay_depth = overlay_depth == 0 ? res.base_odometer_at_pivot + 1 : overlay_depth;
  res.overlay_too_shallow = res.overlay_depth <= res.base_odometer_at_pivot;

  std::vector<std::uint64_t> thresholds;
  if (eval == EjectorEval::full) {
    thresholds.resize(res.overlay_depth);
    for (std::uint64_t k = 1; k <= res.overlay_depth; ++k) thresholds[k - 1] = k;
  } else {
    thresholds.push_back(1);
    if (res.overlay_depth > 1) thresholds.push_back(res.overlay_depth);
  }

  res.n_by_threshold.reserve(thresholds.size());
  for (const std::uint64_t k : thresholds) {
    const InstructionTape overlay = InstructionTape::with_ejector(tape, 0, k);
    const StabilizationReport rep = stabilize_fast(Configuration::ones(v), v, overlay, fuel);
    res.fuel_exhausted |= rep.fuel_exhausted;
    res.n_by_threshold.emplace_back(k, rep.sleepers_remaining);
  }

  res.identity_sum_ok = res.n_at(1) == res.s_l + res.s_r;
  if (!res.overlay_too_shallow)
    res.identity_deep_ok = res.n_at(res.overlay_depth) == res.s_v;
  return res;
}

HoleSpreadResult spread_to_holes(std::int64_t k, double hole_density, std::uint64_t hole_seed,
                                 const InstructionTape& tape, std::uint64_t fuel) {
  if (k < 1) fail(Errc::invalid_argument, "spread_to_holes requires k >= 1");
  if (!(hole_density > 0.0 && hole_density < 1.0))
    fail(Errc::invalid_argument, "hole_density must be in the open interval (0,1), got " +
                                     std::to_string(hole_density));

  const auto is_hole = [hole_seed, hole_density](std::int64_t x) {
    const std::uint64_t cell = mix64(static_cast<std::uint64_t>(x) * kGolden + 0x8CB92BA72F3D8DD7ULL);
    return u64_to_unit(mix64(hole_seed ^ cell)) < hole_density;
  };

  HoleSpreadResult res;
  VisitedTracker visited;
  std::int64_t walkers_left = k;
  visited.mark(0);

  // Walkers are kept out of the configuration while in transit: they pass
  // over parked particles without interacting (everybody stays active), so
  // only the parked particles need to be materialized.
  while (walkers_left > 0) {
    std::int64_t w = 0;
    for (;;) {
      if (is_hole(w) && res.config.count_at(w) == 0) {
        res.config.add_active(w);
        --walkers_left;
        break;
      }
      if (fuel == 0) {
        res.fuel_exhausted = true;
        break;
      }
      --fuel;
      const Instruction ins = tape.at(w, res.odometer.at(w) + 1);
      res.odometer.increment(w);
      ++res.topplings;
      switch (ins) {
        case Instruction::sleep:
          break;  // consumed as a no-op toppling; the walk never stalls
        case Instruction::jump_left:
          --w;
          visited.mark(w);
          break;
        case Instruction::jump_right:
          ++w;
          visited.mark(w);
          break;
        case Instruction::eject:
          fail(Errc::internal, "ejector instruction on a plain tape");
      }
    }
    if (res.fuel_exhausted) break;
  }

  const std::vector<std::int64_t> sites = visited.sorted_sites();
  res.interval = {sites.front(), sites.back()};
  for (std::int64_t x = res.interval.lo; x <= res.interval.hi; ++x)
    if (is_hole(x)) ++res.holes_in_interval;
  return res;
}

CoupledHockeySample coupled_hockey_sample(std::int64_t n, std::int64_t t,
                                          const InstructionTape& tape, std::uint64_t drive_seed,
                                          std::uint64_t fuel) {
  if (n < 1 || t < 0) fail(Errc::invalid_argument, "coupled_hockey_sample requires n >= 1, t >= 0");
  const SegmentSpec region = SegmentSpec::v_n(n);

  Configuration config;
  SplitMix64 drive(drive_seed);
  for (std::int64_t i = 0; i < t; ++i)
    config.add_active(region.lo +
                      static_cast<std::int64_t>(drive.next_below(static_cast<std::uint64_t>(n))));

  CoupledHockeySample out;
  Odometer odometer;

  {  // flatten: topple multi-occupied sites until none remain; no particle
     // can fall asleep here, so the result holds at most one active per site
    RunCounters counters;
    TopplingRun run(config, odometer, tape, region, SelectOrder::any, 0, 2, nullptr,
                    &counters);
    run.enqueue_all_unstable();
    run.run_to_stable(fuel);
    if (run.fuel_exhausted()) {
      out.fuel_exhausted = true;
      return out;
    }
  }

  {  // Y_t: finish stabilizing the flattened configuration
    Configuration cfg = config;
    Odometer odo = odometer;
    RunCounters counters;
    TopplingRun run(cfg, odo, tape, region, SelectOrder::any, 0, 1, nullptr, &counters);
    run.enqueue_all_unstable();
    run.run_to_stable(fuel);
    out.fuel_exhausted |= run.fuel_exhausted();
    out.y_direct = cfg.particle_count(region);
  }

  {  // S_n on the shared tape suffix: plain stabilization of 1_V
    Configuration cfg = Configuration::ones(region);
    Odometer odo = odometer;
    RunCounters counters;
    TopplingRun run(cfg, odo, tape, region, SelectOrder::any, 0, 1, nullptr, &counters);
    run.enqueue_all_unstable();
    run.run_to_stable(fuel);
    out.fuel_exhausted |= run.fuel_exhausted();
    out.s_sample = cfg.particle_count(region);
  }

  {  // Y_t again, as an acceptable stabilization of 1_V: walk out the
     // particles missing from the flattened configuration, then stabilize
    Configuration cfg = Configuration::ones(region);
    Odometer odo = odometer;
    for (std::int64_t x = region.lo; x <= region.hi; ++x) {
      if (config.count_at(x) != 0) continue;
      const WalkResult walk = force_walk_out(cfg, odo, tape, x, region, fuel);
      if (walk.fuel_exhausted) {
        out.fuel_exhausted = true;
        return out;
      }
    }
    RunCounters counters;
    TopplingRun run(cfg, odo, tape, region, SelectOrder::any, 0, 1, nullptr, &counters);
    run.enqueue_all_unstable();
    run.run_to_stable(fuel);
    out.fuel_exhausted |= run.fuel_exhausted();
    out.y_coupled = cfg.particle_count(region);
  }

  return out;
}

}  // namespace arw
