#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "arw/lattice.hpp"

namespace arw {

// Site-selection policies. Each one, given a non-stable configuration,
// selects a site where toppling is legal; by the Abelian property they all
// reach the same final state.
struct Leftmost {};
struct Rightmost {};
struct RandomUnstable {
  std::uint64_t policy_seed = 0;
};
// Topple the leftmost active site until target_left particles exited left,
// then the rightmost active site until target_right exited right in total,
// then finish in any order.
struct StagedLeftRight {
  std::int64_t target_left = 0;
  std::int64_t target_right = 0;
};

using TopplingPolicy = std::variant<Leftmost, Rightmost, RandomUnstable, StagedLeftRight>;

struct StabilizationReport {
  Configuration final;
  Odometer odometer;
  std::int64_t exits_left = 0;    // L_n
  std::int64_t exits_right = 0;   // R_n
  std::int64_t exits_ejected = 0;
  std::vector<std::int64_t> visited;  // sorted; includes initially occupied sites
  std::int64_t sleepers_remaining = 0;
  std::uint64_t topplings = 0;
  bool fuel_exhausted = false;
  bool stable = false;

  std::int64_t exits_total() const noexcept { return exits_left + exits_right + exits_ejected; }
};

// Tracks the set of sites where a particle has stood at least once.
class VisitedTracker {
 public:
  void mark(std::int64_t x) {
    std::uint8_t& f = flags_.ref(x);
    if (!f) {
      f = 1;
      ++count_;
    }
  }

  void mark_occupied(const Configuration& config) {
    for (std::int64_t x = config.span_lo(); x <= config.span_hi(); ++x)
      if (config.count_at(x) > 0) mark(x);
  }

  std::int64_t count() const noexcept { return count_; }

  std::vector<std::int64_t> sorted_sites() const {
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(count_));
    if (flags_.untouched()) return out;
    for (std::int64_t x = flags_.touched_lo(); x <= flags_.touched_hi(); ++x)
      if (flags_.get(x)) out.push_back(x);
    return out;
  }

 private:
  detail::SiteArray<std::uint8_t> flags_;
  std::int64_t count_ = 0;
};

namespace detail {

struct RunCounters {
  std::int64_t exits_left = 0;
  std::int64_t exits_right = 0;
  std::int64_t exits_ejected = 0;
  std::uint64_t topplings = 0;
};

enum class SelectOrder { leftmost, rightmost, random, any };

// One toppling pass over externally owned state. Keeps a queue of candidate
// unstable sites; every site of `region` holding at least `min_active`
// active particles is queued (possibly lazily re-checked on selection).
class TopplingRun {
 public:
  TopplingRun(Configuration& config, Odometer& odometer, const InstructionTape& tape,
              SegmentSpec region, SelectOrder order, std::uint64_t policy_seed = 0,
              std::int64_t min_active = 1, VisitedTracker* visited = nullptr,
              RunCounters* counters = nullptr)
      : config_(config),
        odometer_(odometer),
        tape_(tape),
        region_(region),
        order_(order),
        rng_(policy_seed),
        min_active_(min_active),
        visited_(visited),
        counters_(counters) {}

  void enqueue_all_unstable();
  void enqueue_if_unstable(std::int64_t x);

  // Topples until the region is stable (w.r.t. min_active), `stop` returns
  // true, or fuel runs out. `stop` is consulted before every toppling.
  template <class Stop>
  void run(std::uint64_t& fuel, Stop&& stop) {
    if (order_ == SelectOrder::any) {
      run_any(fuel, stop);
      return;
    }
    for (;;) {
      if (stop()) return;
      const std::optional<std::int64_t> site = next_site();
      if (!site) {
        stable_ = true;
        return;
      }
      if (fuel == 0) {
        fuel_exhausted_ = true;
        // The popped site is still unstable; keep the queue's invariant.
        push(*site);
        return;
      }
      --fuel;
      apply(*site);
    }
  }

  void run_to_stable(std::uint64_t& fuel) {
    run(fuel, [] { return false; });
  }

  // Clears per-pass flags so one run object can drive many passes (the
  // candidate queue is empty whenever the region is stable, so reuse is
  // allocation-free).
  void begin_pass() {
    fuel_exhausted_ = false;
    stable_ = false;
  }

  bool fuel_exhausted() const noexcept { return fuel_exhausted_; }
  bool stable() const noexcept { return stable_; }

 private:
  std::optional<std::int64_t> next_site();
  void push(std::int64_t x);
  void apply(std::int64_t site);
  bool unstable(std::int64_t x) const noexcept {
    return config_.active_at(x) >= min_active_ && region_.contains(x);
  }

  // Order-free fast path: plain LIFO worklist (duplicates tolerated), and
  // each popped site is drained in place. Correct for full stabilizations by
  // the Abelian property; not used where the toppling order is observable.
  template <class Stop>
  void run_any(std::uint64_t& fuel, Stop&& stop) {
    for (;;) {
      if (stop()) return;
      std::int64_t x;
      do {
        if (pool_.empty()) {
          stable_ = true;
          return;
        }
        x = pool_.back();
        pool_.pop_back();
      } while (!unstable(x));
      for (;;) {  // drain this site
        if (fuel == 0) {
          fuel_exhausted_ = true;
          pool_.push_back(x);
          return;
        }
        --fuel;
        const ToppleEvent ev = topple(config_, odometer_, tape_, x, ToppleMode::legal, region_);
        if (counters_) {
          ++counters_->topplings;
          if (ev.kind == ToppleEvent::Kind::exit_left) ++counters_->exits_left;
          else if (ev.kind == ToppleEvent::Kind::exit_right) ++counters_->exits_right;
          else if (ev.kind == ToppleEvent::Kind::ejected) ++counters_->exits_ejected;
        }
        if (ev.kind == ToppleEvent::Kind::moved) {
          if (visited_) visited_->mark(ev.to);
          pool_.push_back(ev.to);
        }
        if (ev.remaining_active < min_active_) break;
        if (stop()) {
          pool_.push_back(x);
          return;
        }
      }
    }
  }

  Configuration& config_;
  Odometer& odometer_;
  const InstructionTape& tape_;
  SegmentSpec region_;
  SelectOrder order_;
  SplitMix64 rng_;
  std::int64_t min_active_;
  VisitedTracker* visited_;
  RunCounters* counters_;

  // leftmost/rightmost: binary heap of candidates (keys negated for
  // rightmost); random: flat pool sampled uniformly. `queued_` deduplicates.
  std::vector<std::int64_t> heap_;
  std::vector<std::int64_t> pool_;
  detail::SiteArray<std::uint8_t> queued_;
  bool fuel_exhausted_ = false;
  bool stable_ = false;
};

}  // namespace detail

// Drives legal topplings in `region` until no active particle remains there,
// consuming instructions from `tape`. Particles jumping out of `region` are
// killed and tallied by exit side. Fuel bounds the number of topplings;
// exhaustion is reported, never silently truncated.
StabilizationReport stabilize(const Configuration& initial, SegmentSpec region,
                              const InstructionTape& tape, const TopplingPolicy& policy,
                              std::uint64_t fuel);

// Same final state as any policy (Abelian property), reached through the
// order-free worklist. This is the entry the Monte Carlo loops use.
StabilizationReport stabilize_fast(const Configuration& initial, SegmentSpec region,
                                   const InstructionTape& tape, std::uint64_t fuel);

// Three-step procedure on the all-active initial configuration 1_region:
// returns the state after stage 2 and the final report.
std::pair<StabilizationReport, StabilizationReport> staged_stabilize(SegmentSpec region,
                                                                     const InstructionTape& tape,
                                                                     std::int64_t target_left,
                                                                     std::int64_t target_right,
                                                                     std::uint64_t fuel);

struct WalkResult {
  ToppleEvent::Kind exit_kind = ToppleEvent::Kind::exit_left;
  std::uint64_t topplings = 0;
  Odometer odometer_delta;
  bool fuel_exhausted = false;
};

// Forces one particle to walk from `site`, with acceptable topplings of its
// current site, until it jumps out of `region`. A consumed sleep instruction
// puts the lone walker to sleep; the next acceptable toppling wakes it.
// Other particles stay in place, but a sleeper the walker lands on is woken.
WalkResult force_walk_out(Configuration& config, Odometer& odometer, const InstructionTape& tape,
                          std::int64_t site, SegmentSpec region, std::uint64_t& fuel,
                          VisitedTracker* visited = nullptr);

// Stabilizes k active particles at the origin on the full line (no killing).
// The report's visited set is the aggregate A_k, origin included.
StabilizationReport stabilize_point_source(std::int64_t k, const InstructionTape& tape,
                                           std::uint64_t fuel);

}  // namespace arw
