#include <doctest.h>

#include <map>
#include <set>

#include "arw/tape.hpp"
#include "test_helpers.hpp"

using namespace arw;

TEST_CASE("instruction_at is deterministic") {
  const InstructionTape tape(ModelParams{1.0, 0.5}, 12345);
  for (std::int64_t x : {-10, 0, 3, 1000000}) {
    for (std::uint64_t j : {std::uint64_t{1}, std::uint64_t{2}, std::uint64_t{999}}) {
      CHECK(tape.at(x, j) == tape.at(x, j));
    }
  }
  const InstructionTape copy = tape;
  CHECK(copy.at(17, 4) == tape.at(17, 4));
}

TEST_CASE("instruction frequencies match sleep/left/right marginals") {
  // lambda = 1, p = 1/2: (1/2, 1/4, 1/4) over 10^6 draws, within 4 standard
  // errors and with a chi-square p-value above 1e-4.
  const ModelParams params{1.0, 0.5};
  const InstructionTape tape(params, 2024);
  const std::int64_t n = 1'000'000;
  std::vector<std::int64_t> counts(3, 0);
  std::int64_t drawn = 0;
  for (std::int64_t x = -500; x < 500; ++x)
    for (std::uint64_t j = 1; j <= 1000; ++j) {
      ++counts[static_cast<std::size_t>(tape.at(x, j))];
      ++drawn;
    }
  REQUIRE(drawn == n);

  const double expected[3] = {0.5, 0.25, 0.25};
  for (int i = 0; i < 3; ++i) {
    const double p = expected[i];
    const double se = std::sqrt(p * (1 - p) * static_cast<double>(n));
    CHECK(std::abs(static_cast<double>(counts[static_cast<std::size_t>(i)]) -
                   p * static_cast<double>(n)) < 4.0 * se);
  }
  const double chi2 = testing::chi_square_stat(
      counts, {0.5 * static_cast<double>(n), 0.25 * static_cast<double>(n),
               0.25 * static_cast<double>(n)});
  CHECK(chi2 < testing::kChi2Q1e4Dof2);
}

TEST_CASE("instruction frequencies for asymmetric parameters") {
  const ModelParams params{0.5, 0.3};
  const InstructionTape tape(params, 77);
  const std::int64_t n = 300'000;
  std::vector<std::int64_t> counts(3, 0);
  for (std::int64_t x = 0; x < 300; ++x)
    for (std::uint64_t j = 1; j <= 1000; ++j) ++counts[static_cast<std::size_t>(tape.at(x, j))];
  const std::vector<double> expected = {params.sleep_prob() * static_cast<double>(n),
                                        params.left_prob() * static_cast<double>(n),
                                        params.right_prob() * static_cast<double>(n)};
  CHECK(testing::chi_square_stat(counts, expected) < testing::kChi2Q1e4Dof2);
}

TEST_CASE("ejector overlay replaces exactly the deep instructions at the pivot") {
  const InstructionTape base(ModelParams{1.0, 0.5}, 99);
  const InstructionTape overlay = InstructionTape::with_ejector(base, 4, 3);

  CHECK(overlay.at(4, 3) == Instruction::eject);
  CHECK(overlay.at(4, 5) == Instruction::eject);
  CHECK(overlay.at(4, 1) == base.at(4, 1));
  CHECK(overlay.at(4, 2) == base.at(4, 2));
  for (std::int64_t x = -20; x <= 20; ++x) {
    if (x == 4) continue;
    for (std::uint64_t j = 1; j <= 50; ++j) CHECK(overlay.at(x, j) == base.at(x, j));
  }
  CHECK(base.at(4, 3) != Instruction::eject);  // the base never draws ejectors
  CHECK_THROWS_AS(InstructionTape::with_ejector(base, 0, 0), Error);
}

TEST_CASE("derive_replica_seed is stable and collision-free across replicas") {
  CHECK(derive_replica_seed(123, 0) == derive_replica_seed(123, 0));
  SplitMix64 gen(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10'000; ++i) {
    const std::uint64_t master = gen.next();
    const std::uint64_t s0 = derive_replica_seed(master, 0);
    const std::uint64_t s1 = derive_replica_seed(master, 1);
    CHECK(s0 != s1);
    seen.insert(s0);
    seen.insert(s1);
  }
  CHECK(seen.size() == 20'000);
}

TEST_CASE("tapes from sibling replica seeds are independent") {
  // 3x3 contingency of paired instruction draws at matched (site, j);
  // chi-square independence with 4 dof, p-value above 1e-4.
  const ModelParams params{1.0, 0.5};
  const InstructionTape a(params, derive_replica_seed(4242, 0));
  const InstructionTape b(params, derive_replica_seed(4242, 1));

  std::int64_t table[3][3] = {};
  const std::int64_t n = 100'000;
  for (std::int64_t x = 0; x < 100; ++x)
    for (std::uint64_t j = 1; j <= 1000; ++j)
      ++table[static_cast<int>(a.at(x, j))][static_cast<int>(b.at(x, j))];

  std::int64_t row[3] = {}, col[3] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      row[i] += table[i][j];
      col[j] += table[i][j];
    }
  double chi2 = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double expected = static_cast<double>(row[i]) * static_cast<double>(col[j]) /
                              static_cast<double>(n);
      const double d = static_cast<double>(table[i][j]) - expected;
      chi2 += d * d / expected;
    }
  CHECK(chi2 < testing::kChi2Q1e4Dof4);
}

TEST_CASE("model parameter validation") {
  CHECK_THROWS_AS(InstructionTape(ModelParams{0.0, 0.5}, 1), Error);
  CHECK_THROWS_AS(InstructionTape(ModelParams{-1.0, 0.5}, 1), Error);
  CHECK_THROWS_AS(InstructionTape(ModelParams{1.0, 0.0}, 1), Error);
  CHECK_THROWS_AS(InstructionTape(ModelParams{1.0, 1.0}, 1), Error);
  CHECK_NOTHROW(InstructionTape(ModelParams{0.001, 0.999}, 1));
}
