#include <doctest.h>

#include <cmath>

#include "arw/stats.hpp"

using namespace arw;

TEST_CASE("ecdf matches brute-force counting") {
  SplitMix64 gen(51);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::int64_t> values;
    const std::size_t n = 1 + gen.next_below(100);
    for (std::size_t i = 0; i < n; ++i)
      values.push_back(static_cast<std::int64_t>(gen.next_below(20)) - 10);
    const EmpiricalDist dist(values);
    for (std::int64_t t = -12; t <= 12; ++t) {
      std::size_t count = 0;
      for (const std::int64_t v : values) count += v <= t ? 1 : 0;
      CHECK(dist.ecdf(t) ==
            doctest::Approx(static_cast<double>(count) / static_cast<double>(n)));
    }
  }
}

TEST_CASE("dominance verdicts on the reference examples") {
  SUBCASE("sample ECDFs already ordered: not rejected") {
    const EmpiricalDist a({1, 2, 3});
    const EmpiricalDist b({0, 1, 2});
    const DominanceResult res = ecdf_dominates(a, b, 0.01);
    CHECK(res.verdict == DominanceVerdict::dominates_not_rejected);
    CHECK(res.max_gap <= 0.0);
  }
  SUBCASE("a sample trivially dominates itself") {
    const EmpiricalDist a({3, 1, 4, 1, 5});
    CHECK(ecdf_dominates(a, a, 0.01).verdict == DominanceVerdict::dominates_not_rejected);
  }
  SUBCASE("separated supports reject the wrong direction only") {
    std::vector<std::int64_t> zeros(1000, 0), fives(1000, 5);
    const EmpiricalDist lo(zeros), hi(fives);
    CHECK(ecdf_dominates(lo, hi, 0.01).verdict == DominanceVerdict::rejected);
    CHECK(ecdf_dominates(hi, lo, 0.1).verdict == DominanceVerdict::dominates_not_rejected);
  }
  SUBCASE("tiny samples with a positive gap are inconclusive") {
    const EmpiricalDist a({0, 1});
    const EmpiricalDist b({1, 2});
    const DominanceResult res = ecdf_dominates(a, b, 0.01);
    CHECK(res.band >= 1.0);
    CHECK(res.verdict == DominanceVerdict::inconclusive);
  }
  SUBCASE("empty samples are an error") {
    CHECK_THROWS_AS(ecdf_dominates(EmpiricalDist{}, EmpiricalDist({1}), 0.05), Error);
  }
}

TEST_CASE("independent convolution") {
  CHECK(convolve_independent(EmpiricalDist({0}), EmpiricalDist({0}), 1).sorted_samples() ==
        std::vector<std::int64_t>{0});
  CHECK(convolve_independent(EmpiricalDist({1}), EmpiricalDist({2}), 1).sorted_samples() ==
        std::vector<std::int64_t>{3});

  // Full pairing of equal-size samples adds the means exactly.
  SplitMix64 gen(77);
  std::vector<std::int64_t> a, b;
  for (int i = 0; i < 500; ++i) {
    a.push_back(static_cast<std::int64_t>(gen.next_below(50)));
    b.push_back(static_cast<std::int64_t>(gen.next_below(50)));
  }
  const EmpiricalDist da(a), db(b);
  const EmpiricalDist sum = convolve_independent(da, db, 99);
  CHECK(sum.size() == 500);
  CHECK(sum.mean() == doctest::Approx(da.mean() + db.mean()));
}

TEST_CASE("rho_star estimation") {
  SUBCASE("single ladder point: estimate is mean over n") {
    std::map<std::int64_t, EmpiricalDist> dists;
    dists.emplace(4, EmpiricalDist({1, 2, 3, 2}));
    const RhoStarEstimate est = estimate_rho_star(dists);
    CHECK(est.estimate == doctest::Approx(2.0 / 4.0));
    CHECK(est.curve.size() == 1);
  }
  SUBCASE("adding ladder points can only raise the sup") {
    std::map<std::int64_t, EmpiricalDist> dists;
    dists.emplace(2, EmpiricalDist({1, 1, 0, 1}));
    const double first = estimate_rho_star(dists).estimate;
    dists.emplace(4, EmpiricalDist({3, 3, 2, 3}));
    const double second = estimate_rho_star(dists).estimate;
    CHECK(second >= first);
    dists.emplace(8, EmpiricalDist({0, 0, 0, 0}));
    CHECK(estimate_rho_star(dists).estimate == doctest::Approx(second));
  }
}

TEST_CASE("tail-rate estimator") {
  const std::vector<double> thetas{0.0, 0.1, 0.2, 0.5, 1.0};
  SUBCASE("Lambda(0) = 0 and degenerate samples give theta*c/n") {
    const std::int64_t c = 7;
    const EmpiricalDist dist(std::vector<std::int64_t>(100, c));
    const TailRateReport rep = tail_rate(dist, 10, thetas, {0.5});
    CHECK(rep.lambda_hat[0] == doctest::Approx(0.0));
    for (std::size_t i = 0; i < thetas.size(); ++i)
      CHECK(rep.lambda_hat[i] ==
            doctest::Approx(thetas[i] * static_cast<double>(c) / 10.0));
  }
  SUBCASE("isotonic smoothing is monotone and Chernoff consistency holds") {
    SplitMix64 gen(13);
    std::vector<std::int64_t> values;
    for (int i = 0; i < 20'000; ++i)
      values.push_back(static_cast<std::int64_t>(gen.next_below(8)) +
                       static_cast<std::int64_t>(gen.next_below(8)));
    const std::int64_t n = 14;
    const std::vector<double> rhos{0.1, 0.2, 0.3, 0.5};
    const TailRateReport rep = tail_rate(EmpiricalDist(values), n, thetas, rhos);
    for (std::size_t i = 1; i < rep.lambda_isotonic.size(); ++i)
      CHECK(rep.lambda_isotonic[i] >= rep.lambda_isotonic[i - 1]);
    // Empirical tail exponent dominates the Chernoff lower bound
    // Lambda(theta) - theta*rho for every grid pair (up to tiny noise).
    for (std::size_t ri = 0; ri < rhos.size(); ++ri)
      for (std::size_t ti = 0; ti < thetas.size(); ++ti)
        CHECK(rep.tail_exponent[ri] >=
              rep.lambda_hat[ti] - thetas[ti] * rhos[ri] - 1e-9);
  }
}

TEST_CASE("geometric sum CDF") {
  CHECK(geometric_sum_cdf(0, 0, 1.0) == doctest::Approx(1.0));
  CHECK(geometric_sum_cdf(0, 5, 2.0) == doctest::Approx(1.0));
  CHECK(geometric_sum_cdf(1, 0, 1.0) == doctest::Approx(0.5));
  CHECK(geometric_sum_cdf(2, 1, 1.0) == doctest::Approx(0.5));

  SUBCASE("shifted convention counts trials instead of failures") {
    CHECK(geometric_sum_cdf(2, 1, 1.0, GeomConvention::one) == doctest::Approx(0.0));
    CHECK(geometric_sum_cdf(2, 3, 1.0, GeomConvention::one) ==
          doctest::Approx(geometric_sum_cdf(2, 1, 1.0)));
  }

  SUBCASE("agrees with Monte Carlo within 4 standard errors") {
    for (const double lambda : {0.5, 1.0, 2.0}) {
      const double q = lambda / (1.0 + lambda);
      const std::int64_t draws = 1'000'000;
      // Tally partial sums G_1 + ... + G_i for i = 1..5 per draw.
      std::vector<std::vector<std::int64_t>> hits(6, std::vector<std::int64_t>(11, 0));
      SplitMix64 gen(static_cast<std::uint64_t>(lambda * 1000));
      for (std::int64_t d = 0; d < draws; ++d) {
        std::int64_t sum = 0;
        for (int i = 1; i <= 5; ++i) {
          std::int64_t g = 0;
          while (gen.next_unit() >= q) ++g;  // failures before success
          sum += g;
          for (std::int64_t j = sum; j <= 10; ++j) ++hits[static_cast<std::size_t>(i)]
                                                         [static_cast<std::size_t>(j)];
        }
      }
      for (int i = 1; i <= 5; ++i)
        for (std::int64_t j = 0; j <= 10; ++j) {
          const double exact = geometric_sum_cdf(i, j, lambda);
          const double emp = static_cast<double>(hits[static_cast<std::size_t>(i)]
                                                     [static_cast<std::size_t>(j)]) /
                             static_cast<double>(draws);
          const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(draws));
          CHECK(std::abs(emp - exact) <= 4.0 * se + 1e-12);
        }
    }
  }

  CHECK_THROWS_AS(geometric_sum_cdf(-1, 0, 1.0), Error);
  CHECK_THROWS_AS(geometric_sum_cdf(1, 0, 0.0), Error);
}
