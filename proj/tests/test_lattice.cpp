#include <doctest.h>

#include "arw/lattice.hpp"
#include "test_helpers.hpp"

using namespace arw;

TEST_CASE("stability and particle counts") {
  Configuration c;
  const SegmentSpec region{1, 3};
  CHECK(c.is_stable_in(region));
  CHECK(c.particle_count(region) == 0);

  c.add_active(1);
  CHECK_FALSE(c.is_stable_in({1, 1}));
  c.set_sleeping(1);
  CHECK(c.is_stable_in({1, 1}));

  c.add_active(3, 2);
  CHECK(c.particle_count({1, 3}) == 3);  // one sleeper plus two active
  CHECK(c.particle_count({2, 2}) == 0);
  CHECK(c.particle_count({2, 1}) == 0);  // empty segment
}

TEST_CASE("adding onto a sleeper wakes it") {
  Configuration c;
  c.add_active(5);
  c.set_sleeping(5);
  CHECK(c.is_asleep(5));
  c.add_active(5);
  CHECK_FALSE(c.is_asleep(5));
  CHECK(c.active_at(5) == 2);
}

TEST_CASE("topple applies sleep instructions per occupancy") {
  const ModelParams params{1.0, 0.5};
  const std::uint64_t seed = testing::find_seed_where(
      params, [](const InstructionTape& t) { return t.at(1, 1) == Instruction::sleep; });
  const InstructionTape tape(params, seed);
  const SegmentSpec region{1, 3};

  SUBCASE("a lone particle falls asleep") {
    Configuration c;
    c.add_active(1);
    Odometer h;
    const ToppleEvent ev = topple(c, h, tape, 1, ToppleMode::legal, region);
    CHECK(ev.kind == ToppleEvent::Kind::slept);
    CHECK(c.is_asleep(1));
    CHECK(h.at(1) == 1);
  }
  SUBCASE("with two particles nothing happens") {
    Configuration c;
    c.add_active(1, 2);
    Odometer h;
    const ToppleEvent ev = topple(c, h, tape, 1, ToppleMode::legal, region);
    CHECK(ev.kind == ToppleEvent::Kind::sleep_noop);
    CHECK(c.active_at(1) == 2);
    CHECK(h.at(1) == 1);
  }
}

TEST_CASE("a jump onto a sleeping particle wakes it") {
  const ModelParams params{1.0, 0.5};
  const std::uint64_t seed = testing::find_seed_where(
      params, [](const InstructionTape& t) { return t.at(1, 1) == Instruction::jump_right; });
  const InstructionTape tape(params, seed);

  Configuration c;
  c.add_active(1);
  c.add_active(2);
  c.set_sleeping(2);
  Odometer h;
  const ToppleEvent ev = topple(c, h, tape, 1, ToppleMode::legal, {1, 3});
  CHECK(ev.kind == ToppleEvent::Kind::moved);
  CHECK(ev.to == 2);
  CHECK(ev.woke_target);
  CHECK(c.active_at(2) == 2);
  CHECK(c.count_at(1) == 0);
}

TEST_CASE("jumps crossing the segment boundary are exits with the right side") {
  const ModelParams params{1.0, 0.5};
  const std::uint64_t left_seed = testing::find_seed_where(
      params, [](const InstructionTape& t) { return t.at(1, 1) == Instruction::jump_left; });
  const std::uint64_t right_seed = testing::find_seed_where(
      params, [](const InstructionTape& t) { return t.at(2, 1) == Instruction::jump_right; });

  Configuration c;
  c.add_active(1);
  Odometer h;
  CHECK(topple(c, h, InstructionTape(params, left_seed), 1, ToppleMode::legal, {1, 2}).kind ==
        ToppleEvent::Kind::exit_left);
  CHECK(c.total_particles() == 0);

  Configuration c2;
  c2.add_active(2);
  Odometer h2;
  CHECK(topple(c2, h2, InstructionTape(params, right_seed), 2, ToppleMode::legal, {1, 2}).kind ==
        ToppleEvent::Kind::exit_right);
}

TEST_CASE("toppling mode preconditions") {
  const InstructionTape tape(ModelParams{1.0, 0.5}, 3);
  const SegmentSpec region{1, 2};
  Odometer h;

  Configuration empty;
  CHECK_THROWS_AS(topple(empty, h, tape, 1, ToppleMode::legal, region), Error);
  CHECK_THROWS_AS(topple(empty, h, tape, 1, ToppleMode::acceptable, region), Error);

  Configuration sleeping;
  sleeping.add_active(1);
  sleeping.set_sleeping(1);
  CHECK_THROWS_AS(topple(sleeping, h, tape, 1, ToppleMode::legal, region), Error);
  // Acceptable mode wakes the sleeper, then applies the next instruction.
  CHECK_NOTHROW(topple(sleeping, h, tape, 1, ToppleMode::acceptable, region));
}

TEST_CASE("random toppling sequences conserve particles and sleep safety") {
  const ModelParams params{1.0, 0.5};
  SplitMix64 gen(31337);
  for (int trial = 0; trial < 200; ++trial) {
    const InstructionTape tape(params, gen.next());
    const SegmentSpec region{1, 6};
    Configuration c;
    const std::int64_t initial = 3 + static_cast<std::int64_t>(gen.next_below(6));
    for (std::int64_t i = 0; i < initial; ++i)
      c.add_active(1 + static_cast<std::int64_t>(gen.next_below(6)));
    Odometer h;
    std::int64_t exits = 0;
    for (int step = 0; step < 60; ++step) {
      std::vector<std::int64_t> unstable;
      for (std::int64_t x = 1; x <= 6; ++x)
        if (c.active_at(x) > 0) unstable.push_back(x);
      if (unstable.empty()) break;
      const std::int64_t site =
          unstable[static_cast<std::size_t>(gen.next_below(unstable.size()))];
      const ToppleEvent ev = topple(c, h, tape, site, ToppleMode::legal, region);
      if (ev.kind == ToppleEvent::Kind::exit_left || ev.kind == ToppleEvent::Kind::exit_right)
        ++exits;
      // Sleep safety: a sleeping particle is always alone.
      for (std::int64_t x = 1; x <= 6; ++x)
        if (c.is_asleep(x)) CHECK(c.count_at(x) == 1);
      CHECK(c.total_particles() + exits == initial);
    }
  }
}

TEST_CASE("odometer additivity over consecutive sequences") {
  const ModelParams params{1.0, 0.5};
  const InstructionTape tape(params, 8);
  Configuration c;
  c.add_active(1, 4);
  c.add_active(2, 4);
  Odometer total;
  Odometer first;
  const SegmentSpec region{1, 2};

  // Sequence alpha: four topplings recorded in both odometers.
  for (int i = 0; i < 4; ++i) {
    topple(c, total, tape, 1 + i % 2, ToppleMode::acceptable, region);
    first.increment(1 + i % 2);
  }
  // Sequence beta: continue on `total` only.
  Odometer second;
  for (int i = 0; i < 3; ++i) {
    if (c.count_at(1) == 0) break;
    topple(c, total, tape, 1, ToppleMode::acceptable, region);
    second.increment(1);
  }
  for (std::int64_t x = 1; x <= 2; ++x) CHECK(total.at(x) == first.at(x) + second.at(x));
  CHECK(total.total() == first.total() + second.total());
}

TEST_CASE("segment validation") {
  CHECK_NOTHROW(SegmentSpec{3, 2}.validate());  // empty segment allowed
  CHECK_THROWS_AS(SegmentSpec({5, 2}).validate(), Error);
  CHECK(SegmentSpec{3, 2}.empty());
  CHECK(SegmentSpec::v_n(4).size() == 4);
}
