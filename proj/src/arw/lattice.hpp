#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "arw/error.hpp"
#include "arw/tape.hpp"

namespace arw {

// Inclusive integer interval {lo, ..., hi}; lo == hi + 1 denotes the empty
// segment. V_n is {1, ..., n}.
struct SegmentSpec {
  std::int64_t lo = 1;
  std::int64_t hi = 0;

  static SegmentSpec v_n(std::int64_t n) { return {1, n}; }

  // A window so wide that nearest-neighbour dynamics started near the origin
  // can never reach its boundary; stands in for the full line.
  static SegmentSpec whole_line() { return {-(std::int64_t{1} << 62), std::int64_t{1} << 62}; }

  bool contains(std::int64_t x) const noexcept { return x >= lo && x <= hi; }
  bool empty() const noexcept { return lo > hi; }
  std::int64_t size() const noexcept { return empty() ? 0 : hi - lo + 1; }

  void validate() const {
    if (lo > hi + 1) fail(Errc::invalid_argument, "segment must satisfy lo <= hi + 1");
  }

  bool operator==(const SegmentSpec&) const = default;
};

namespace detail {

// Growable array keyed by lattice site; grows by amortized doubling when a
// write touches a site outside the current window. Reads outside return T{}.
template <class T>
class SiteArray {
 public:
  T get(std::int64_t x) const noexcept {
    if (cells_.empty() || x < origin_ || x >= origin_ + static_cast<std::int64_t>(cells_.size()))
      return T{};
    return cells_[static_cast<std::size_t>(x - origin_)];
  }

  T& ref(std::int64_t x) {
    ensure(x);
    if (x < touched_lo_) touched_lo_ = x;
    if (x > touched_hi_) touched_hi_ = x;
    return cells_[static_cast<std::size_t>(x - origin_)];
  }

  bool untouched() const noexcept { return touched_lo_ > touched_hi_; }
  std::int64_t touched_lo() const noexcept { return touched_lo_; }
  std::int64_t touched_hi() const noexcept { return touched_hi_; }

 private:
  void ensure(std::int64_t x) {
    if (cells_.empty()) {
      origin_ = x - 8;
      cells_.assign(16, T{});
      return;
    }
    const std::int64_t end = origin_ + static_cast<std::int64_t>(cells_.size());
    if (x >= origin_ && x < end) return;
    const std::int64_t new_lo = std::min(origin_, x) - static_cast<std::int64_t>(cells_.size());
    const std::int64_t new_hi = std::max(end - 1, x) + static_cast<std::int64_t>(cells_.size());
    std::vector<T> grown(static_cast<std::size_t>(new_hi - new_lo + 1), T{});
    std::copy(cells_.begin(), cells_.end(), grown.begin() + static_cast<std::size_t>(origin_ - new_lo));
    cells_ = std::move(grown);
    origin_ = new_lo;
  }

  std::vector<T> cells_;
  std::int64_t origin_ = 0;
  std::int64_t touched_lo_ = 1;
  std::int64_t touched_hi_ = 0;
};

}  // namespace detail

// Particle configuration eta: per site either k active particles (k >= 0) or
// one sleeping particle. A sleeping particle is always alone on its site.
class Configuration {
 public:
  static Configuration ones(SegmentSpec region) {
    Configuration c;
    for (std::int64_t x = region.lo; x <= region.hi; ++x) c.cells_.ref(x) = 1;
    return c;
  }

  std::int64_t active_at(std::int64_t x) const noexcept {
    const std::int32_t v = cells_.get(x);
    return v > 0 ? v : 0;
  }

  bool is_asleep(std::int64_t x) const noexcept { return cells_.get(x) == kSleeping; }

  std::int64_t count_at(std::int64_t x) const noexcept {
    const std::int32_t v = cells_.get(x);
    return v == kSleeping ? 1 : v;
  }

  // Adds k active particles, waking a sleeper already there.
  void add_active(std::int64_t x, std::int32_t k = 1) {
    std::int32_t& v = cells_.ref(x);
    v = (v == kSleeping) ? 1 + k : v + k;
  }

  void remove_one_active(std::int64_t x) {
    std::int32_t& v = cells_.ref(x);
    if (v <= 0) fail(Errc::internal, "remove_one_active at a site without active particles");
    --v;
  }

  void set_sleeping(std::int64_t x) {
    std::int32_t& v = cells_.ref(x);
    if (v != 1) fail(Errc::internal, "only a lone active particle can fall asleep");
    v = kSleeping;
  }

  void wake(std::int64_t x) {
    std::int32_t& v = cells_.ref(x);
    if (v != kSleeping) fail(Errc::internal, "wake at a site without a sleeping particle");
    v = 1;
  }

  // True iff no site of `region` holds an active particle.
  bool is_stable_in(SegmentSpec region) const noexcept {
    const std::int64_t lo = std::max(region.lo, span_lo());
    const std::int64_t hi = std::min(region.hi, span_hi());
    for (std::int64_t x = lo; x <= hi; ++x)
      if (active_at(x) > 0) return false;
    return true;
  }

  // Total particles in `region`; a sleeping particle counts as one.
  std::int64_t particle_count(SegmentSpec region) const noexcept {
    const std::int64_t lo = std::max(region.lo, span_lo());
    const std::int64_t hi = std::min(region.hi, span_hi());
    std::int64_t total = 0;
    for (std::int64_t x = lo; x <= hi; ++x) total += count_at(x);
    return total;
  }

  std::int64_t total_particles() const noexcept {
    return particle_count({span_lo(), span_hi()});
  }

  // Bounds of the window ever written; sites outside are empty.
  std::int64_t span_lo() const noexcept { return cells_.untouched() ? 1 : cells_.touched_lo(); }
  std::int64_t span_hi() const noexcept { return cells_.untouched() ? 0 : cells_.touched_hi(); }

  bool operator==(const Configuration& other) const noexcept {
    const std::int64_t lo = std::min(span_lo(), other.span_lo());
    const std::int64_t hi = std::max(span_hi(), other.span_hi());
    for (std::int64_t x = lo; x <= hi; ++x)
      if (cells_.get(x) != other.cells_.get(x)) return false;
    return true;
  }

 private:
  static constexpr std::int32_t kSleeping = -1;
  detail::SiteArray<std::int32_t> cells_;
};

// Per-site count of instructions already consumed.
class Odometer {
 public:
  std::uint64_t at(std::int64_t x) const noexcept { return cells_.get(x); }

  void increment(std::int64_t x) {
    ++cells_.ref(x);
    ++total_;
  }

  // Bumps the count and returns the new value (the index of the instruction
  // being consumed).
  std::uint64_t consume(std::int64_t x) {
    ++total_;
    return ++cells_.ref(x);
  }

  std::uint64_t total() const noexcept { return total_; }

  std::int64_t span_lo() const noexcept { return cells_.untouched() ? 1 : cells_.touched_lo(); }
  std::int64_t span_hi() const noexcept { return cells_.untouched() ? 0 : cells_.touched_hi(); }

  // Sites with a positive count, ascending.
  std::vector<std::pair<std::int64_t, std::uint64_t>> support() const {
    std::vector<std::pair<std::int64_t, std::uint64_t>> rows;
    for (std::int64_t x = span_lo(); x <= span_hi(); ++x)
      if (const std::uint64_t h = cells_.get(x); h > 0) rows.emplace_back(x, h);
    return rows;
  }

  bool pointwise_leq(const Odometer& other) const noexcept {
    const std::int64_t lo = std::min(span_lo(), other.span_lo());
    const std::int64_t hi = std::max(span_hi(), other.span_hi());
    for (std::int64_t x = lo; x <= hi; ++x)
      if (cells_.get(x) > other.cells_.get(x)) return false;
    return true;
  }

  bool operator==(const Odometer& other) const noexcept {
    return pointwise_leq(other) && other.pointwise_leq(*this);
  }

 private:
  detail::SiteArray<std::uint64_t> cells_;
  std::uint64_t total_ = 0;
};

enum class ToppleMode { legal, acceptable };

struct ToppleEvent {
  enum class Kind : std::uint8_t { slept, sleep_noop, moved, exit_left, exit_right, ejected };

  Instruction instruction;
  Kind kind;
  std::int64_t from = 0;
  std::int64_t to = 0;               // destination, meaningful for `moved`
  std::int64_t remaining_active = 0; // active particles left at `from`
  bool woke_target = false;          // the move landed on a sleeping particle
};

// Applies the next unused instruction tau_{site, h(site)+1}. Legal mode
// requires an active particle; acceptable mode accepts a sleeping one, which
// is woken before the instruction is read. A jump landing outside `region`
// removes the particle (exit on the corresponding side); an ejector
// instruction removes it and is tallied separately.
inline ToppleEvent topple(Configuration& config, Odometer& odometer, const InstructionTape& tape,
                          std::int64_t site, ToppleMode mode, SegmentSpec region) {
  if (mode == ToppleMode::legal) {
    if (config.active_at(site) == 0)
      fail(Errc::illegal_toppling, "legal toppling requires an active particle at site " +
                                       std::to_string(site));
  } else {
    if (config.count_at(site) == 0)
      fail(Errc::empty_toppling,
           "acceptable toppling requires a particle at site " + std::to_string(site));
    if (config.is_asleep(site)) config.wake(site);
  }

  const Instruction ins = tape.at(site, odometer.consume(site));

  ToppleEvent ev{ins, ToppleEvent::Kind::sleep_noop, site, site, 0, false};
  switch (ins) {
    case Instruction::sleep:
      if (config.active_at(site) == 1) {
        config.set_sleeping(site);
        ev.kind = ToppleEvent::Kind::slept;
      } else {
        ev.kind = ToppleEvent::Kind::sleep_noop;  // eta(x) >= 2: nothing happens
        ev.remaining_active = config.active_at(site);
      }
      break;
    case Instruction::jump_left:
    case Instruction::jump_right: {
      const std::int64_t dest = site + (ins == Instruction::jump_left ? -1 : +1);
      config.remove_one_active(site);
      ev.remaining_active = config.active_at(site);
      if (!region.contains(dest)) {
        ev.kind = dest < region.lo ? ToppleEvent::Kind::exit_left : ToppleEvent::Kind::exit_right;
      } else {
        ev.woke_target = config.is_asleep(dest);
        config.add_active(dest);
        ev.kind = ToppleEvent::Kind::moved;
        ev.to = dest;
      }
      break;
    }
    case Instruction::eject:
      config.remove_one_active(site);
      ev.remaining_active = config.active_at(site);
      ev.kind = ToppleEvent::Kind::ejected;
      break;
  }
  return ev;
}

}  // namespace arw
