#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arw/error.hpp"
#include "arw/rng.hpp"

namespace arw {

// Empirical distribution of integer-valued samples, stored exactly (no
// binning). The ECDF is the usual right-continuous step function.
class EmpiricalDist {
 public:
  EmpiricalDist() = default;
  explicit EmpiricalDist(std::vector<std::int64_t> samples);

  std::size_t size() const noexcept { return sorted_.size(); }
  bool empty() const noexcept { return sorted_.empty(); }
  const std::vector<std::int64_t>& sorted_samples() const noexcept { return sorted_; }

  double ecdf(std::int64_t t) const noexcept;  // P_hat(X <= t)
  double mean() const noexcept;
  double variance() const noexcept;  // unbiased sample variance
  std::int64_t min() const;
  std::int64_t max() const;

 private:
  std::vector<std::int64_t> sorted_;
};

enum class DominanceVerdict { dominates_not_rejected, rejected, inconclusive };

inline const char* to_string(DominanceVerdict v) {
  switch (v) {
    case DominanceVerdict::dominates_not_rejected: return "dominates-not-rejected";
    case DominanceVerdict::rejected: return "rejected";
    case DominanceVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct DominanceResult {
  DominanceVerdict verdict = DominanceVerdict::inconclusive;
  double max_gap = 0.0;  // max_t (F_a(t) - F_b(t)); <= 0 means the sample ECDFs are ordered
  double band = 0.0;     // one-sided two-sample DKW band at the requested level
};

// Tests H0: F_a(t) <= F_b(t) for all t, i.e. "a stochastically dominates b".
// Rejects when the largest one-sided ECDF gap exceeds the combined DKW band
// (each sample gets a one-sided band at level alpha/2). Conservative and
// finite-sample valid.
DominanceResult ecdf_dominates(const EmpiricalDist& a, const EmpiricalDist& b, double alpha);

// Distribution of X + Y for independent X ~ a, Y ~ b, realized by a seeded
// random pairing; with equal sizes every element is used exactly once, so
// sample means add exactly.
EmpiricalDist convolve_independent(const EmpiricalDist& a, const EmpiricalDist& b,
                                   std::uint64_t pair_seed);

struct RhoStarEstimate {
  double estimate = 0.0;  // max over n of (sample mean of X_n) / n
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  struct CurvePoint {
    std::int64_t n;
    double mean_over_n;
    double ci_lo;
    double ci_hi;
    std::size_t n_samples;
  };
  std::vector<CurvePoint> curve;
};

// Superadditive-limit estimator rho_star = sup_n E X_n / n from samples at a
// ladder of sizes, with a bootstrap confidence interval for the sup and a
// normal-approximation CI per ladder point. `level` is the two-sided
// confidence level (e.g. 0.99).
RhoStarEstimate estimate_rho_star(const std::map<std::int64_t, EmpiricalDist>& dists,
                                  double level = 0.99, std::size_t bootstrap_rounds = 400,
                                  std::uint64_t seed = 0);

struct TailRateReport {
  std::int64_t n = 0;
  std::vector<double> theta;
  std::vector<double> lambda_hat;       // -(1/n) ln mean(exp(-theta X))
  std::vector<double> lambda_isotonic;  // lambda_hat after isotonic (PAVA) smoothing
  std::vector<double> rho;
  std::vector<double> tail_exponent;  // -(1/n) ln P_hat(X <= rho n); +inf when the tail is empty
};

// Normalized moment-generating-function estimator and the matching empirical
// lower-tail exponents. The population Lambda is non-decreasing and concave
// in theta; the isotonic smoothing removes the sampling noise so the
// monotonicity can be asserted.
TailRateReport tail_rate(const EmpiricalDist& dist, std::int64_t n,
                         const std::vector<double>& theta_grid,
                         const std::vector<double>& rho_grid);

// Convention for the geometric variables with parameter q = lambda/(1+lambda).
enum class GeomConvention {
  zero,  // failures before success: P(G = g) = q (1-q)^g, g >= 0
  one,   // trials until success:    P(G = g) = q (1-q)^(g-1), g >= 1
};

inline const char* to_string(GeomConvention c) {
  return c == GeomConvention::zero ? "zero" : "one";
}

// P(G_1 + ... + G_i <= j) for i.i.d. geometric variables with parameter
// lambda/(1+lambda); exact negative-binomial CDF evaluated in log space.
double geometric_sum_cdf(std::int64_t i, std::int64_t j, double lambda,
                         GeomConvention convention = GeomConvention::zero);

// Two-sided normal quantile: z such that P(|Z| <= z) = level.
double normal_quantile_two_sided(double level);

}  // namespace arw
