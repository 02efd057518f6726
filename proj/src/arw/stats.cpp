#include "arw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace arw {

EmpiricalDist::EmpiricalDist(std::vector<std::int64_t> samples) : sorted_(std::move(samples)) {
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDist::ecdf(std::int64_t t) const noexcept {
  if (sorted_.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalDist::mean() const noexcept {
  if (sorted_.empty()) return 0.0;
  double acc = 0.0;
  for (const std::int64_t v : sorted_) acc += static_cast<double>(v);
  return acc / static_cast<double>(sorted_.size());
}

double EmpiricalDist::variance() const noexcept {
  if (sorted_.size() < 2) return 0.0;
  const double m = mean();
  double acc = 0.0;
  for (const std::int64_t v : sorted_) {
    const double d = static_cast<double>(v) - m;
    acc += d * d;
  }
  return acc / static_cast<double>(sorted_.size() - 1);
}

std::int64_t EmpiricalDist::min() const {
  if (sorted_.empty()) fail(Errc::empty_sample, "min of an empty sample");
  return sorted_.front();
}

std::int64_t EmpiricalDist::max() const {
  if (sorted_.empty()) fail(Errc::empty_sample, "max of an empty sample");
  return sorted_.back();
}

DominanceResult ecdf_dominates(const EmpiricalDist& a, const EmpiricalDist& b, double alpha) {
  if (a.empty() || b.empty()) fail(Errc::empty_sample, "dominance test requires non-empty samples");
  if (!(alpha > 0.0 && alpha < 1.0))
    fail(Errc::invalid_argument, "alpha must be in (0,1), got " + std::to_string(alpha));

  // For integer samples the supremum of F_a - F_b over the reals is attained
  // at a sample point, so evaluating at the merged supports is exhaustive.
  const auto& va = a.sorted_samples();
  const auto& vb = b.sorted_samples();
  double gap = -1.0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < va.size() || ib < vb.size()) {
    std::int64_t t;
    if (ib >= vb.size() || (ia < va.size() && va[ia] <= vb[ib]))
      t = va[ia];
    else
      t = vb[ib];
    while (ia < va.size() && va[ia] <= t) ++ia;
    while (ib < vb.size() && vb[ib] <= t) ++ib;
    const double fa = static_cast<double>(ia) / static_cast<double>(va.size());
    const double fb = static_cast<double>(ib) / static_cast<double>(vb.size());
    gap = std::max(gap, fa - fb);
  }

  // One-sided DKW (Massart constant): P(sup F_hat - F > eps) <= exp(-2 n eps^2).
  const auto one_sided = [](std::size_t n, double level) {
    return std::sqrt(std::log(1.0 / level) / (2.0 * static_cast<double>(n)));
  };
  DominanceResult res;
  res.max_gap = gap;
  res.band = one_sided(a.size(), alpha / 2.0) + one_sided(b.size(), alpha / 2.0);
  if (gap <= 0.0)
    res.verdict = DominanceVerdict::dominates_not_rejected;
  else if (gap > res.band)
    res.verdict = DominanceVerdict::rejected;
  else if (res.band >= 1.0)
    res.verdict = DominanceVerdict::inconclusive;  // no power at this size and level
  else
    res.verdict = DominanceVerdict::dominates_not_rejected;
  return res;
}

EmpiricalDist convolve_independent(const EmpiricalDist& a, const EmpiricalDist& b,
                                   std::uint64_t pair_seed) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) fail(Errc::empty_sample, "convolution requires non-empty samples");
  SplitMix64 rng(pair_seed);
  const auto shuffled_indices = [&rng](std::size_t count) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = count; i > 1; --i)
      std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.next_below(i))]);
    return idx;
  };
  const std::vector<std::size_t> ia = shuffled_indices(a.size());
  const std::vector<std::size_t> ib = shuffled_indices(b.size());
  std::vector<std::int64_t> sums(n);
  for (std::size_t i = 0; i < n; ++i)
    sums[i] = a.sorted_samples()[ia[i]] + b.sorted_samples()[ib[i]];
  return EmpiricalDist(std::move(sums));
}

double normal_quantile_two_sided(double level) {
  if (level >= 0.989 && level <= 0.991) return 2.5758293035489004;  // 99%
  if (level >= 0.949 && level <= 0.951) return 1.959963984540054;   // 95%
  // Fallback: Abramowitz-Stegun 26.2.22 rational approximation.
  const double p = 1.0 - (1.0 - level) / 2.0;
  const double t = std::sqrt(-2.0 * std::log(1.0 - p));
  return t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t);
}

RhoStarEstimate estimate_rho_star(const std::map<std::int64_t, EmpiricalDist>& dists, double level,
                                  std::size_t bootstrap_rounds, std::uint64_t seed) {
  if (dists.empty()) fail(Errc::empty_sample, "rho_star estimate requires at least one sample set");
  RhoStarEstimate out;
  const double z = normal_quantile_two_sided(level);

  out.estimate = -std::numeric_limits<double>::infinity();
  for (const auto& [n, dist] : dists) {
    if (dist.empty()) fail(Errc::empty_sample, "empty sample set at n = " + std::to_string(n));
    const double mean_over_n = dist.mean() / static_cast<double>(n);
    const double se =
        std::sqrt(dist.variance() / static_cast<double>(dist.size())) / static_cast<double>(n);
    out.curve.push_back({n, mean_over_n, mean_over_n - z * se, mean_over_n + z * se, dist.size()});
    out.estimate = std::max(out.estimate, mean_over_n);
  }

  // Bootstrap over replicas, jointly across the ladder.
  std::vector<double> sup_samples(bootstrap_rounds);
  SplitMix64 rng(substream(seed, Stream::bootstrap));
  for (std::size_t b = 0; b < bootstrap_rounds; ++b) {
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& [n, dist] : dists) {
      const auto& vals = dist.sorted_samples();
      double acc = 0.0;
      for (std::size_t i = 0; i < vals.size(); ++i)
        acc += static_cast<double>(vals[static_cast<std::size_t>(rng.next_below(vals.size()))]);
      sup = std::max(sup, acc / static_cast<double>(vals.size()) / static_cast<double>(n));
    }
    sup_samples[b] = sup;
  }
  std::sort(sup_samples.begin(), sup_samples.end());
  const auto quantile = [&sup_samples](double q) {
    const double pos = q * static_cast<double>(sup_samples.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= sup_samples.size()) return sup_samples.back();
    return sup_samples[i] * (1.0 - frac) + sup_samples[i + 1] * frac;
  };
  out.ci_lo = quantile((1.0 - level) / 2.0);
  out.ci_hi = quantile(1.0 - (1.0 - level) / 2.0);
  return out;
}

TailRateReport tail_rate(const EmpiricalDist& dist, std::int64_t n,
                         const std::vector<double>& theta_grid,
                         const std::vector<double>& rho_grid) {
  if (dist.empty()) fail(Errc::empty_sample, "tail_rate requires a non-empty sample");
  if (n < 1) fail(Errc::invalid_argument, "tail_rate requires n >= 1");

  TailRateReport rep;
  rep.n = n;
  rep.theta = theta_grid;
  rep.rho = rho_grid;

  const auto& vals = dist.sorted_samples();
  rep.lambda_hat.reserve(theta_grid.size());
  for (const double theta : theta_grid) {
    // log mean exp(-theta x) via log-sum-exp; x >= 0 so the max exponent is
    // at the smallest sample.
    const double m = -theta * static_cast<double>(vals.front());
    double acc = 0.0;
    for (const std::int64_t v : vals) acc += std::exp(-theta * static_cast<double>(v) - m);
    const double log_mean = m + std::log(acc) - std::log(static_cast<double>(vals.size()));
    rep.lambda_hat.push_back(-log_mean / static_cast<double>(n));
  }

  // Isotonic regression (pool adjacent violators), non-decreasing in theta.
  rep.lambda_isotonic = rep.lambda_hat;
  {
    std::vector<double> value;
    std::vector<std::size_t> weight;
    for (const double v : rep.lambda_isotonic) {
      value.push_back(v);
      weight.push_back(1);
      while (value.size() >= 2 && value[value.size() - 2] > value.back()) {
        const double merged = (value[value.size() - 2] * static_cast<double>(weight[weight.size() - 2]) +
                               value.back() * static_cast<double>(weight.back())) /
                              static_cast<double>(weight[weight.size() - 2] + weight.back());
        weight[weight.size() - 2] += weight.back();
        value[value.size() - 2] = merged;
        value.pop_back();
        weight.pop_back();
      }
    }
    std::size_t pos = 0;
    for (std::size_t blk = 0; blk < value.size(); ++blk)
      for (std::size_t i = 0; i < weight[blk]; ++i) rep.lambda_isotonic[pos++] = value[blk];
  }

  rep.tail_exponent.reserve(rho_grid.size());
  for (const double rho : rho_grid) {
    const double p = dist.ecdf(static_cast<std::int64_t>(std::floor(rho * static_cast<double>(n))));
    rep.tail_exponent.push_back(p == 0.0 ? std::numeric_limits<double>::infinity()
                                         : -std::log(p) / static_cast<double>(n));
  }
  return rep;
}

double geometric_sum_cdf(std::int64_t i, std::int64_t j, double lambda,
                         GeomConvention convention) {
  if (i < 0 || j < 0) fail(Errc::invalid_argument, "geometric_sum_cdf requires i, j >= 0");
  if (!(lambda > 0.0)) fail(Errc::invalid_argument, "geometric_sum_cdf requires lambda > 0");
  if (convention == GeomConvention::one) {
    // Each trial-counting variable is 1 + a failure-counting one.
    if (j < i) return 0.0;
    return geometric_sum_cdf(i, j - i, lambda, GeomConvention::zero);
  }
  if (i == 0) return 1.0;  // empty sum

  const double q = lambda / (1.0 + lambda);
  const double log_q = std::log(q);
  const double log_1mq = -std::log1p(lambda);  // log(1/(1+lambda))
  // P(sum = g) = C(g+i-1, i-1) q^i (1-q)^g, summed for g = 0..j in log space.
  double acc = 0.0;
  for (std::int64_t g = 0; g <= j; ++g) {
    const double log_term = std::lgamma(static_cast<double>(g + i)) -
                            std::lgamma(static_cast<double>(i)) -
                            std::lgamma(static_cast<double>(g + 1)) +
                            static_cast<double>(i) * log_q + static_cast<double>(g) * log_1mq;
    acc += std::exp(log_term);
  }
  return std::min(acc, 1.0);
}

}  // namespace arw
