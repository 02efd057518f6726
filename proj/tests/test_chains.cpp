#include <doctest.h>

#include <map>

#include "arw/chains.hpp"
#include "arw/stats.hpp"
#include "oracle.hpp"
#include "test_helpers.hpp"

using namespace arw;

namespace {
constexpr std::uint64_t kFuel = 1'000'000'000;
}

TEST_CASE("dd step on V_1 from empty sleeps with probability lambda/(1+lambda)") {
  const ModelParams params{1.0, 0.5};
  std::int64_t slept = 0;
  const std::int64_t replicas = 100'000;
  for (std::int64_t r = 0; r < replicas; ++r) {
    const std::uint64_t seed = derive_replica_seed(17, static_cast<std::uint64_t>(r));
    const InstructionTape tape(params, substream(seed, Stream::tape));
    DrivenChain chain(1, tape, substream(seed, Stream::drive));
    std::uint64_t fuel = kFuel;
    REQUIRE(chain.step(fuel));
    slept += chain.particles();
  }
  const double p = params.sleep_prob();
  const double se = std::sqrt(p * (1 - p) * static_cast<double>(replicas));
  CHECK(std::abs(static_cast<double>(slept) - p * static_cast<double>(replicas)) < 4.0 * se);
}

TEST_CASE("dd steps never gain more than one particle and stay stable") {
  const InstructionTape tape(ModelParams{0.5, 0.5}, 4);
  DrivenChain chain(6, tape, 40);
  std::uint64_t fuel = kFuel;
  std::int64_t prev = 0;
  for (int t = 0; t < 300; ++t) {
    REQUIRE(chain.step(fuel));
    const std::int64_t now = chain.particles();
    CHECK(now <= prev + 1);
    CHECK(chain.config().is_stable_in(SegmentSpec::v_n(6)));
    prev = now;
  }
}

TEST_CASE("sample_stationary matches the exact law of S_1 and S_2") {
  const ModelParams params{1.0, 0.5};
  for (const int n : {1, 2}) {
    const std::vector<double> exact = oracle::sn_distribution(n, params);
    std::map<std::int64_t, double> exact_map;
    for (std::size_t v = 0; v < exact.size(); ++v)
      if (exact[v] > 0) exact_map[static_cast<std::int64_t>(v)] = exact[v];

    std::vector<std::int64_t> sample;
    const std::uint64_t replicas = 30'000;
    for (std::uint64_t r = 0; r < replicas; ++r) {
      const InstructionTape tape(params, derive_replica_seed(5'000 + n, r));
      sample.push_back(sample_stationary(n, tape, kFuel).sleepers_remaining);
      CHECK(sample.back() >= 0);
      CHECK(sample.back() <= n);
    }
    CHECK(oracle::tv_distance(exact_map, sample) < 0.02);
  }
  // Spot value: P(S_1 = 1) = lambda/(1+lambda) = 1/2 at lambda = 1.
  CHECK(oracle::sn_distribution(1, params)[1] == doctest::Approx(0.5));
}

TEST_CASE("driven chain occupancy matches the exact stationary distribution on V_2") {
  const ModelParams params{1.0, 0.5};
  const std::map<oracle::Config, double> exact = oracle::dd_stationary(2, params);

  const InstructionTape tape(params, substream(991, Stream::tape));
  DrivenChain chain(2, tape, substream(991, Stream::drive));
  std::uint64_t fuel = 100 * kFuel;
  std::map<oracle::Config, std::int64_t> visits;
  const std::int64_t steps = 100'000;
  for (std::int64_t t = 0; t < steps; ++t) {
    REQUIRE(chain.step(fuel));
    oracle::Config c(2);
    for (int x = 1; x <= 2; ++x)
      c[static_cast<std::size_t>(x - 1)] = chain.config().is_asleep(x) ? -1 : 0;
    ++visits[c];
  }
  double tv = 0.0;
  for (const auto& [config, p] : exact) {
    const auto it = visits.find(config);
    const double emp =
        it == visits.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(steps);
    tv += std::abs(p - emp);
  }
  CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("hockey trajectory basics") {
  const InstructionTape tape(ModelParams{1.0, 0.5}, 12);
  SUBCASE("zero steps gives the single value 0") {
    const HockeyTrajectory tr = hockey_run(5, 0, tape, 3, kFuel);
    CHECK(tr.values == std::vector<std::int64_t>{0});
  }
  SUBCASE("Y_t <= t always") {
    const HockeyTrajectory tr = hockey_run(8, 200, tape, 3, kFuel);
    REQUIRE(tr.values.size() == 201);
    for (std::size_t t = 0; t < tr.values.size(); ++t)
      CHECK(tr.values[t] <= static_cast<std::int64_t>(t));
  }
}

TEST_CASE("hockey domination: coupled Y_t never exceeds the matched S_n sample") {
  const ModelParams params{1.0, 0.5};
  std::vector<std::int64_t> y_direct, s_samples;
  for (std::uint64_t r = 0; r < 500; ++r) {
    const std::uint64_t seed = derive_replica_seed(777, r);
    const InstructionTape tape(params, substream(seed, Stream::tape));
    const CoupledHockeySample s =
        coupled_hockey_sample(12, 30, tape, substream(seed, Stream::drive), kFuel);
    REQUIRE_FALSE(s.fuel_exhausted);
    CHECK(s.y_coupled <= s.s_sample);  // exact per replica, least action
    y_direct.push_back(s.y_direct);
    s_samples.push_back(s.s_sample);
  }
  // And in distribution, S_n dominates the directly sampled Y_t.
  const DominanceResult res = ecdf_dominates(EmpiricalDist(std::move(s_samples)),
                                             EmpiricalDist(std::move(y_direct)), 0.01);
  CHECK(res.verdict == DominanceVerdict::dominates_not_rejected);
}

TEST_CASE("ejector coupling identities on shared tapes") {
  const ModelParams params{1.0, 0.5};
  SUBCASE("N_1 = S_L + S_R and N_K = S_V on every replica") {
    for (std::uint64_t r = 0; r < 300; ++r) {
      const InstructionTape tape(params, derive_replica_seed(31, r));
      const EjectorCouplingResult res = ejector_coupling(4, 5, 0, tape, kFuel);
      CHECK(res.identity_sum_ok);
      REQUIRE(res.identity_deep_ok.has_value());
      CHECK(*res.identity_deep_ok);
      CHECK_FALSE(res.overlay_too_shallow);
      CHECK(res.n_at(1) == res.s_l + res.s_r);
      // All counts bounded by the particle count of V.
      CHECK(res.s_v <= 4 + 5 + 1);
      for (const auto& [k, nk] : res.n_by_threshold) CHECK(nk <= 4 + 5 + 1);
    }
  }
  SUBCASE("tiny segment: V = {-1,0,1} keeps every count at most 3") {
    for (std::uint64_t r = 0; r < 200; ++r) {
      const InstructionTape tape(params, derive_replica_seed(77, r));
      const EjectorCouplingResult res = ejector_coupling(1, 1, 0, tape, kFuel);
      CHECK(res.s_v <= 3);
      CHECK(res.s_l <= 1);
      CHECK(res.s_r <= 1);
      CHECK(res.identity_sum_ok);
    }
  }
  SUBCASE("a fixed shallow overlay is flagged") {
    // Find a tape where the base stabilization uses at least 2 instructions
    // at the pivot, then request K = 1.
    for (std::uint64_t r = 0;; ++r) {
      const InstructionTape tape(params, derive_replica_seed(555, r));
      const EjectorCouplingResult probe = ejector_coupling(3, 3, 0, tape, kFuel);
      if (probe.base_odometer_at_pivot < 2) continue;
      const EjectorCouplingResult res = ejector_coupling(3, 3, 1, tape, kFuel);
      CHECK(res.overlay_too_shallow);
      CHECK_FALSE(res.identity_deep_ok.has_value());
      CHECK(res.identity_sum_ok);  // N_1 identity holds regardless
      break;
    }
  }
  SUBCASE("endpoint evaluation matches the full sequence at the endpoints") {
    const InstructionTape tape(params, 909);
    const EjectorCouplingResult full = ejector_coupling(3, 4, 0, tape, kFuel, EjectorEval::full);
    const EjectorCouplingResult ends =
        ejector_coupling(3, 4, 0, tape, kFuel, EjectorEval::endpoints);
    CHECK(full.n_at(1) == ends.n_at(1));
    CHECK(full.n_at(full.overlay_depth) == ends.n_at(ends.overlay_depth));
    CHECK(full.n_by_threshold.size() == full.overlay_depth);
  }
}

TEST_CASE("spread_to_holes parks k particles on exactly k holes of the visited interval") {
  const ModelParams params{1.0, 0.5};
  SUBCASE("a hole at the origin parks the single particle immediately") {
    // Scan hole seeds until the origin is a hole.
    for (std::uint64_t hole_seed = 0;; ++hole_seed) {
      const InstructionTape tape(params, 1);
      const HoleSpreadResult res = spread_to_holes(1, 0.5, hole_seed, tape, kFuel);
      if (res.topplings == 0) {
        CHECK(res.interval == SegmentSpec{0, 0});
        CHECK(res.config.count_at(0) == 1);
        CHECK(res.holes_in_interval == 1);
        break;
      }
      REQUIRE(hole_seed < 64);  // a hole at 0 has probability 1/2 per seed
    }
  }
  SUBCASE("interval holds exactly k holes and k parked particles") {
    for (std::uint64_t r = 0; r < 100; ++r) {
      const std::uint64_t seed = derive_replica_seed(888, r);
      const InstructionTape tape(params, substream(seed, Stream::tape));
      const std::int64_t k = 1 + static_cast<std::int64_t>(r % 6);
      const HoleSpreadResult res =
          spread_to_holes(k, 0.4, substream(seed, Stream::holes), tape, kFuel);
      REQUIRE_FALSE(res.fuel_exhausted);
      CHECK(res.holes_in_interval == k);
      CHECK(res.config.particle_count(res.interval) == k);
      CHECK(res.interval.contains(0));
    }
  }
}

TEST_CASE("spreading then stabilizing covers the plain aggregate on the same tape") {
  // B_k, realized by an acceptable spreading stage plus stabilization,
  // contains A_k whenever both are driven by the same instruction tape.
  const ModelParams params{1.0, 0.5};
  for (std::uint64_t r = 0; r < 60; ++r) {
    const std::uint64_t seed = derive_replica_seed(4321, r);
    const InstructionTape tape(params, substream(seed, Stream::tape));
    const std::int64_t k = 2 + static_cast<std::int64_t>(r % 4);

    const StabilizationReport direct = stabilize_point_source(k, tape, kFuel);

    HoleSpreadResult spread =
        spread_to_holes(k, 0.3, substream(seed, Stream::holes), tape, kFuel);
    Odometer odo = spread.odometer;
    Configuration cfg = spread.config;
    detail::RunCounters counters;
    VisitedTracker visited;
    // Every site of the spreading interval was visited during the walks.
    for (std::int64_t x = spread.interval.lo; x <= spread.interval.hi; ++x) visited.mark(x);
    detail::TopplingRun run(cfg, odo, tape, SegmentSpec::whole_line(), detail::SelectOrder::any, 0,
                            1, &visited, &counters);
    run.enqueue_all_unstable();
    std::uint64_t fuel = kFuel;
    run.run_to_stable(fuel);

    const std::vector<std::int64_t> b_sites = visited.sorted_sites();
    CHECK(b_sites.front() <= direct.visited.front());
    CHECK(b_sites.back() >= direct.visited.back());
  }
}
