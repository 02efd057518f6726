#include "arw/stabilizer.hpp"

#include <algorithm>

namespace arw {
namespace detail {

void TopplingRun::enqueue_all_unstable() {
  const std::int64_t lo = std::max(region_.lo, config_.span_lo());
  const std::int64_t hi = std::min(region_.hi, config_.span_hi());
  for (std::int64_t x = lo; x <= hi; ++x)
    if (config_.active_at(x) >= min_active_) push(x);
}

void TopplingRun::enqueue_if_unstable(std::int64_t x) {
  if (unstable(x)) push(x);
}

void TopplingRun::push(std::int64_t x) {
  if (order_ == SelectOrder::any) {
    pool_.push_back(x);  // duplicates tolerated, stale entries skipped on pop
    return;
  }
  std::uint8_t& q = queued_.ref(x);
  if (q) return;
  q = 1;
  if (order_ == SelectOrder::random) {
    pool_.push_back(x);
  } else {
    heap_.push_back(order_ == SelectOrder::leftmost ? x : -x);
    std::push_heap(heap_.begin(), heap_.end(), std::greater<std::int64_t>{});
  }
}

std::optional<std::int64_t> TopplingRun::next_site() {
  if (order_ == SelectOrder::random) {
    while (!pool_.empty()) {
      const std::size_t i = static_cast<std::size_t>(rng_.next_below(pool_.size()));
      const std::int64_t x = pool_[i];
      pool_[i] = pool_.back();
      pool_.pop_back();
      queued_.ref(x) = 0;
      if (unstable(x)) return x;  // stale entries are dropped and redrawn
    }
    return std::nullopt;
  }
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), std::greater<std::int64_t>{});
    const std::int64_t key = heap_.back();
    heap_.pop_back();
    const std::int64_t x = order_ == SelectOrder::leftmost ? key : -key;
    queued_.ref(x) = 0;
    if (unstable(x)) return x;
  }
  return std::nullopt;
}

void TopplingRun::apply(std::int64_t site) {
  const ToppleEvent ev = topple(config_, odometer_, tape_, site, ToppleMode::legal, region_);
  if (counters_) ++counters_->topplings;
  switch (ev.kind) {
    case ToppleEvent::Kind::slept:
    case ToppleEvent::Kind::sleep_noop:
      break;
    case ToppleEvent::Kind::moved:
      if (visited_) visited_->mark(ev.to);
      enqueue_if_unstable(ev.to);
      break;
    case ToppleEvent::Kind::exit_left:
      if (counters_) ++counters_->exits_left;
      break;
    case ToppleEvent::Kind::exit_right:
      if (counters_) ++counters_->exits_right;
      break;
    case ToppleEvent::Kind::ejected:
      if (counters_) ++counters_->exits_ejected;
      break;
  }
  enqueue_if_unstable(site);
}

}  // namespace detail

namespace {

using detail::RunCounters;
using detail::SelectOrder;
using detail::TopplingRun;

StabilizationReport finish_report(Configuration&& config, Odometer&& odometer,
                                  const RunCounters& counters, const VisitedTracker& visited,
                                  SegmentSpec region, std::int64_t initial_particles,
                                  bool fuel_exhausted, bool stable) {
  StabilizationReport report;
  report.exits_left = counters.exits_left;
  report.exits_right = counters.exits_right;
  report.exits_ejected = counters.exits_ejected;
  report.topplings = counters.topplings;
  report.fuel_exhausted = fuel_exhausted;
  report.stable = stable;
  report.visited = visited.sorted_sites();
  report.sleepers_remaining = config.particle_count(region);

  const std::int64_t remaining = config.total_particles();
  if (remaining + report.exits_total() != initial_particles)
    fail(Errc::conservation_violation,
         "particle conservation violated: started with " + std::to_string(initial_particles) +
             ", ended with " + std::to_string(remaining) + " plus " +
             std::to_string(report.exits_total()) + " exits");

  report.final = std::move(config);
  report.odometer = std::move(odometer);
  return report;
}

StabilizationReport run_plain(const Configuration& initial, SegmentSpec region,
                              const InstructionTape& tape, SelectOrder order,
                              std::uint64_t policy_seed, std::uint64_t fuel) {
  Configuration config = initial;
  Odometer odometer;
  VisitedTracker visited;
  visited.mark_occupied(config);
  RunCounters counters;
  const std::int64_t initial_particles = config.total_particles();

  TopplingRun run(config, odometer, tape, region, order, policy_seed, 1, &visited, &counters);
  run.enqueue_all_unstable();
  run.run_to_stable(fuel);

  return finish_report(std::move(config), std::move(odometer), counters, visited, region,
                       initial_particles, run.fuel_exhausted(), run.stable());
}

}  // namespace

StabilizationReport stabilize(const Configuration& initial, SegmentSpec region,
                              const InstructionTape& tape, const TopplingPolicy& policy,
                              std::uint64_t fuel) {
  region.validate();
  if (std::holds_alternative<Leftmost>(policy))
    return run_plain(initial, region, tape, SelectOrder::leftmost, 0, fuel);
  if (std::holds_alternative<Rightmost>(policy))
    return run_plain(initial, region, tape, SelectOrder::rightmost, 0, fuel);
  if (const auto* random = std::get_if<RandomUnstable>(&policy))
    return run_plain(initial, region, tape, SelectOrder::random, random->policy_seed, fuel);
  const auto& staged = std::get<StagedLeftRight>(policy);
  return staged_stabilize(region, tape, staged.target_left, staged.target_right, fuel).second;
}

StabilizationReport stabilize_fast(const Configuration& initial, SegmentSpec region,
                                   const InstructionTape& tape, std::uint64_t fuel) {
  region.validate();
  return run_plain(initial, region, tape, SelectOrder::any, 0, fuel);
}

std::pair<StabilizationReport, StabilizationReport> staged_stabilize(SegmentSpec region,
                                                                     const InstructionTape& tape,
                                                                     std::int64_t target_left,
                                                                     std::int64_t target_right,
                                                                     std::uint64_t fuel) {
  region.validate();
  if (region.size() > (std::int64_t{1} << 32))
    fail(Errc::invalid_argument, "staged stabilization requires a finite segment");

  Configuration config = Configuration::ones(region);
  Odometer odometer;
  VisitedTracker visited;
  visited.mark_occupied(config);
  RunCounters counters;
  const std::int64_t initial_particles = config.total_particles();
  bool exhausted = false;

  {  // stage 1: leftmost active, until target_left exits on the left
    TopplingRun run(config, odometer, tape, region, SelectOrder::leftmost, 0, 1, &visited,
                    &counters);
    run.enqueue_all_unstable();
    run.run(fuel, [&] { return counters.exits_left >= target_left; });
    exhausted |= run.fuel_exhausted();
  }
  if (!exhausted && counters.exits_right < target_right && !config.is_stable_in(region)) {
    // stage 2: rightmost active, until target_right cumulative right exits
    TopplingRun run(config, odometer, tape, region, SelectOrder::rightmost, 0, 1, &visited,
                    &counters);
    run.enqueue_all_unstable();
    run.run(fuel, [&] { return counters.exits_right >= target_right; });
    exhausted |= run.fuel_exhausted();
  }

  Configuration mid_config = config;
  Odometer mid_odometer = odometer;
  StabilizationReport mid =
      finish_report(std::move(mid_config), std::move(mid_odometer), counters, visited, region,
                    initial_particles, exhausted, config.is_stable_in(region));

  if (!exhausted) {  // stage 3: finish with any legal order
    TopplingRun run(config, odometer, tape, region, SelectOrder::any, 0, 1, &visited,
                    &counters);
    run.enqueue_all_unstable();
    run.run_to_stable(fuel);
    exhausted |= run.fuel_exhausted();
  }

  StabilizationReport last = finish_report(std::move(config), std::move(odometer), counters,
                                           visited, region, initial_particles, exhausted,
                                           !exhausted);
  return {std::move(mid), std::move(last)};
}

WalkResult force_walk_out(Configuration& config, Odometer& odometer, const InstructionTape& tape,
                          std::int64_t site, SegmentSpec region, std::uint64_t& fuel,
                          VisitedTracker* visited) {
  if (config.count_at(site) == 0)
    fail(Errc::empty_toppling, "force_walk_out requires a particle at site " + std::to_string(site));

  WalkResult res;
  std::int64_t walker = site;
  if (visited) visited->mark(walker);
  for (;;) {
    if (fuel == 0) {
      res.fuel_exhausted = true;
      return res;
    }
    --fuel;
    const ToppleEvent ev = topple(config, odometer, tape, walker, ToppleMode::acceptable, region);
    ++res.topplings;
    res.odometer_delta.increment(walker);
    switch (ev.kind) {
      case ToppleEvent::Kind::slept:
      case ToppleEvent::Kind::sleep_noop:
        break;  // the walker stays; a lone walker sleeps and is woken next call
      case ToppleEvent::Kind::moved:
        walker = ev.to;
        if (visited) visited->mark(walker);
        break;
      case ToppleEvent::Kind::exit_left:
      case ToppleEvent::Kind::exit_right:
      case ToppleEvent::Kind::ejected:
        res.exit_kind = ev.kind;
        return res;
    }
  }
}

StabilizationReport stabilize_point_source(std::int64_t k, const InstructionTape& tape,
                                           std::uint64_t fuel) {
  if (k < 1) fail(Errc::invalid_argument, "point source requires k >= 1 particles");
  Configuration initial;
  initial.add_active(0, static_cast<std::int32_t>(k));
  return stabilize_fast(initial, SegmentSpec::whole_line(), tape, fuel);
}

}  // namespace arw
