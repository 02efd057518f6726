#include "arw/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <thread>

#include "arw/version.hpp"

namespace arw {

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::sample_sn: return "sample-sn";
    case ExperimentKind::dd_run: return "dd-run";
    case ExperimentKind::hockey: return "hockey";
    case ExperimentKind::ball: return "ball";
    case ExperimentKind::dominance: return "dominance";
    case ExperimentKind::ejector: return "ejector";
    case ExperimentKind::exit_fraction: return "exit-fraction";
    case ExperimentKind::nml_check: return "nml-check";
    case ExperimentKind::inner_bound: return "inner-bound";
    case ExperimentKind::abelian_check: return "abelian-check";
    case ExperimentKind::monotonicity_check: return "monotonicity-check";
    case ExperimentKind::estimate_rhoc: return "estimate-rhoc";
  }
  return "?";
}

namespace {

ExperimentKind kind_from_string(const std::string& s) {
  for (const ExperimentKind k :
       {ExperimentKind::sample_sn, ExperimentKind::dd_run, ExperimentKind::hockey,
        ExperimentKind::ball, ExperimentKind::dominance, ExperimentKind::ejector,
        ExperimentKind::exit_fraction, ExperimentKind::nml_check, ExperimentKind::inner_bound,
        ExperimentKind::abelian_check, ExperimentKind::monotonicity_check,
        ExperimentKind::estimate_rhoc})
    if (s == to_string(k)) return k;
  fail(Errc::invalid_argument, "command: unknown experiment '" + s + "'");
}

std::int64_t parse_i64(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    fail(Errc::invalid_argument, key + ": expected an integer, got '" + value + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    fail(Errc::invalid_argument, key + ": expected a non-negative integer, got '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    fail(Errc::invalid_argument, key + ": expected a real number, got '" + value + "'");
  }
}

std::vector<std::string> split(const std::string& value, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t end = value.find(sep, start);
    if (end == std::string::npos) {
      parts.push_back(value.substr(start));
      break;
    }
    parts.push_back(value.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

std::vector<std::int64_t> parse_i64_list(const std::string& key, const std::string& value) {
  std::vector<std::int64_t> out;
  for (const std::string& part : split(value, ',')) out.push_back(parse_i64(key, part));
  if (out.empty()) fail(Errc::invalid_argument, key + ": expected a comma-separated list");
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& part : split(value, ',')) out.push_back(parse_double(key, part));
  if (out.empty()) fail(Errc::invalid_argument, key + ": expected a comma-separated list");
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> parse_pairs(const std::string& key,
                                                               const std::string& value) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (const std::string& part : split(value, ',')) {
    const std::vector<std::string> nm = split(part, ':');
    if (nm.size() != 2)
      fail(Errc::invalid_argument, key + ": expected n:m pairs like '1:1,5:5', got '" + part + "'");
    out.emplace_back(parse_i64(key, nm[0]), parse_i64(key, nm[1]));
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  fail(Errc::invalid_argument, key + ": expected true/false, got '" + value + "'");
}

// Deterministic seed for a named arm of an experiment (e.g. the independent
// S_n / S_m / S_{n+m+1} sample sets of one dominance pair).
std::uint64_t scoped_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return mix64(master ^ mix64((a + 1) * kGolden + (b + 1) * 0xD1B54A32D192ED03ULL));
}

// Runs fn(replica_index, replica_seed) for every replica, spreading work
// over `workers` threads. The output vector is indexed by replica, so the
// aggregate is independent of scheduling.
template <class T, class Fn>
std::vector<T> map_replicas(std::uint64_t master_seed, std::uint64_t count, int workers, Fn fn) {
  std::vector<T> out(count);
  std::atomic<std::uint64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;

  const auto worker = [&] {
    for (;;) {
      const std::uint64_t r = next.fetch_add(1);
      if (r >= count) return;
      try {
        out[r] = fn(r, derive_replica_seed(master_seed, r));
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };

  const std::uint64_t n_threads =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(std::max(workers, 1)), count);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::uint64_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

struct MeanCI {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;
};

MeanCI mean_ci(const std::vector<double>& xs, double z) {
  MeanCI out;
  if (xs.empty()) return out;
  double acc = 0.0;
  for (const double x : xs) acc += x;
  out.mean = acc / static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double var = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  out.lo = out.mean - z * out.se;
  out.hi = out.mean + z * out.se;
  return out;
}

std::string join_i64(const std::vector<std::int64_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

Configuration bernoulli_initial(SegmentSpec region, double density, std::uint64_t seed) {
  Configuration c;
  SplitMix64 rng(seed);
  for (std::int64_t x = region.lo; x <= region.hi; ++x)
    if (rng.next_unit() < density) c.add_active(x);
  return c;
}

ResultDocument make_doc(const ExperimentPlan& plan) {
  ResultDocument doc;
  doc.add_meta("arw_version", kVersion);
  doc.add_meta("command", to_string(plan.kind));
  doc.add_meta("lambda", plan.params.lambda);
  doc.add_meta("p", plan.params.p);
  doc.add_meta("seed", plan.master_seed);
  doc.add_meta("fuel", plan.fuel);
  doc.add_meta("geom_convention", to_string(plan.geom));
  // Note: the worker count only affects scheduling, never results, so it is
  // deliberately absent from the resolved configuration.
  return doc;
}

struct ValueSample {
  std::int64_t value = 0;
  bool fuel_exhausted = false;
};

std::vector<ValueSample> sample_sn_values(std::int64_t n, const ExperimentPlan& plan,
                                          std::uint64_t arm_seed) {
  return map_replicas<ValueSample>(
      arm_seed, plan.replicas, plan.workers, [&plan, n](std::uint64_t, std::uint64_t seed) {
        const InstructionTape tape(plan.params, substream(seed, Stream::tape));
        const StabilizationReport rep = sample_stationary(n, tape, plan.fuel);
        return ValueSample{rep.sleepers_remaining, rep.fuel_exhausted};
      });
}

EmpiricalDist to_dist(const std::vector<ValueSample>& samples) {
  std::vector<std::int64_t> values;
  values.reserve(samples.size());
  for (const ValueSample& s : samples) values.push_back(s.value);
  return EmpiricalDist(std::move(values));
}

std::int64_t count_exhausted(const std::vector<ValueSample>& samples) {
  std::int64_t c = 0;
  for (const ValueSample& s : samples) c += s.fuel_exhausted ? 1 : 0;
  return c;
}

ResultDocument run_sample_sn(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  doc.add_meta("n", plan.n);
  doc.add_meta("replicas", plan.replicas);

  const std::vector<ValueSample> samples = sample_sn_values(plan.n, plan, plan.master_seed);
  Table& t = doc.add_table("samples", {"replica_index", "value"});
  std::vector<double> ratios;
  ratios.reserve(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    t.rows.push_back({static_cast<std::int64_t>(r), samples[r].value});
    ratios.push_back(static_cast<double>(samples[r].value) / static_cast<double>(plan.n));
  }
  const MeanCI ci = mean_ci(ratios, normal_quantile_two_sided(1.0 - plan.alpha));
  doc.add_meta("mean_sn_over_n", ci.mean);
  doc.add_meta("se_sn_over_n", ci.se);
  doc.add_meta("fuel_exhausted_replicas", count_exhausted(samples));
  return doc;
}

ResultDocument run_estimate_rhoc(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  const std::vector<std::int64_t> sizes =
      plan.sizes.empty() ? std::vector<std::int64_t>{25, 50, 100, 200} : plan.sizes;
  doc.add_meta("sizes", join_i64(sizes));
  doc.add_meta("replicas", plan.replicas);

  std::map<std::int64_t, EmpiricalDist> dists;
  std::int64_t exhausted = 0;
  for (const std::int64_t n : sizes) {
    const std::vector<ValueSample> samples =
        sample_sn_values(n, plan, scoped_seed(plan.master_seed, 10, static_cast<std::uint64_t>(n)));
    exhausted += count_exhausted(samples);
    dists.emplace(n, to_dist(samples));
  }

  const RhoStarEstimate est = estimate_rho_star(dists, 1.0 - plan.alpha, 400, plan.master_seed);
  doc.add_meta("rho_star_estimate", est.estimate);
  doc.add_meta("rho_star_ci_lo", est.ci_lo);
  doc.add_meta("rho_star_ci_hi", est.ci_hi);
  doc.add_meta("fuel_exhausted_replicas", exhausted);

  Table& t = doc.add_table("curve", {"n_or_k", "mean", "ci_lo", "ci_hi", "n_samples"});
  for (const auto& pt : est.curve)
    t.rows.push_back(
        {pt.n, pt.mean_over_n, pt.ci_lo, pt.ci_hi, static_cast<std::int64_t>(pt.n_samples)});
  return doc;
}

ResultDocument run_dd(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  doc.add_meta("n", plan.n);
  doc.add_meta("steps", plan.steps);
  doc.add_meta("replicas", plan.replicas);

  const auto trajectories = map_replicas<HockeyTrajectory>(
      plan.master_seed, plan.replicas, plan.workers, [&plan](std::uint64_t, std::uint64_t seed) {
        const InstructionTape tape(plan.params, substream(seed, Stream::tape));
        return hockey_run(plan.n, plan.steps, tape, substream(seed, Stream::drive), plan.fuel);
      });

  Table& t = doc.add_table("trajectory", {"replica_index", "t", "value"});
  std::int64_t exhausted = 0;
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    exhausted += trajectories[r].fuel_exhausted ? 1 : 0;
    for (std::size_t i = 0; i < trajectories[r].values.size(); ++i)
      t.rows.push_back({static_cast<std::int64_t>(r), static_cast<std::int64_t>(i),
                        trajectories[r].values[i]});
  }
  doc.add_meta("fuel_exhausted_replicas", exhausted);
  return doc;
}

ResultDocument run_hockey(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  doc.add_meta("n", plan.n);
  doc.add_meta("rho_max", plan.rho_max);
  doc.add_meta("rho_step", plan.rho_step);
  doc.add_meta("replicas", plan.replicas);

  std::vector<double> rhos;
  for (double rho = 0.0; rho <= plan.rho_max + 1e-9; rho += plan.rho_step) rhos.push_back(rho);
  const std::int64_t t_max =
      static_cast<std::int64_t>(std::ceil(plan.rho_max * static_cast<double>(plan.n)));

  const auto trajectories = map_replicas<HockeyTrajectory>(
      plan.master_seed, plan.replicas, plan.workers, [&plan, t_max](std::uint64_t, std::uint64_t seed) {
        const InstructionTape tape(plan.params, substream(seed, Stream::tape));
        return hockey_run(plan.n, t_max, tape, substream(seed, Stream::drive), plan.fuel);
      });

  Table& t = doc.add_table("curve", {"rho", "t", "mean", "ci_lo", "ci_hi", "n_samples"});
  const double z = normal_quantile_two_sided(1.0 - plan.alpha);
  std::int64_t exhausted = 0;
  for (const HockeyTrajectory& tr : trajectories) exhausted += tr.fuel_exhausted ? 1 : 0;
  for (const double rho : rhos) {
    const std::int64_t steps =
        static_cast<std::int64_t>(std::ceil(rho * static_cast<double>(plan.n)));
    std::vector<double> ys;
    ys.reserve(trajectories.size());
    for (const HockeyTrajectory& tr : trajectories)
      if (static_cast<std::size_t>(steps) < tr.values.size())
        ys.push_back(static_cast<double>(tr.values[static_cast<std::size_t>(steps)]) /
                     static_cast<double>(plan.n));
    const MeanCI ci = mean_ci(ys, z);
    t.rows.push_back(
        {rho, steps, ci.mean, ci.lo, ci.hi, static_cast<std::int64_t>(ys.size())});
  }
  doc.add_meta("fuel_exhausted_replicas", exhausted);
  return doc;
}

ResultDocument run_ball(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  doc.add_meta("k", plan.k);
  doc.add_meta("replicas", plan.replicas);

  struct BallSample {
    std::int64_t a_size = 0;
    double center = 0.0;
    bool fuel_exhausted = false;
  };
  const auto samples = map_replicas<BallSample>(
      plan.master_seed, plan.replicas, plan.workers, [&plan](std::uint64_t, std::uint64_t seed) {
        const InstructionTape tape(plan.params, substream(seed, Stream::tape));
        const StabilizationReport rep = stabilize_point_source(plan.k, tape, plan.fuel);
        BallSample s;
        s.a_size = static_cast<std::int64_t>(rep.visited.size());
        s.center = (static_cast<double>(rep.visited.front()) +
                    static_cast<double>(rep.visited.back())) /
                   2.0;
        s.fuel_exhausted = rep.fuel_exhausted;
        return s;
      });

  Table& t = doc.add_table("samples", {"replica_index", "a_size", "k_over_a", "center"});
  std::vector<double> ratios, centers;
  std::int64_t exhausted = 0;
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const double ratio = static_cast<double>(plan.k) / static_cast<double>(samples[r].a_size);
    t.rows.push_back({static_cast<std::int64_t>(r), samples[r].a_size, ratio, samples[r].center});
    ratios.push_back(ratio);
    centers.push_back(samples[r].center);
    exhausted += samples[r].fuel_exhausted ? 1 : 0;
  }
  const double z = normal_quantile_two_sided(1.0 - plan.alpha);
  const MeanCI ci = mean_ci(ratios, z);
  Table& s = doc.add_table("summary", {"n_or_k", "mean", "ci_lo", "ci_hi", "n_samples"});
  s.rows.push_back({plan.k, ci.mean, ci.lo, ci.hi, static_cast<std::int64_t>(ratios.size())});
  doc.add_meta("mean_center", mean_ci(centers, z).mean);
  doc.add_meta("fuel_exhausted_replicas", exhausted);
  return doc;
}

ResultDocument run_dominance(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  const auto pairs = plan.pairs.empty()
                         ? std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 1}, {5, 5}, {20, 30}}
                         : plan.pairs;
  {
    std::string repr;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (i) repr += ',';
      repr += std::to_string(pairs[i].first) + ":" + std::to_string(pairs[i].second);
    }
    doc.add_meta("pairs", repr);
  }
  doc.add_meta("replicas", plan.replicas);
  doc.add_meta("alpha", plan.alpha);

  Table& t = doc.add_table("dominance", {"n", "m", "max_gap", "band", "verdict"});
  bool any_rejected = false;
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [n, m] = pairs[q];
    if (n < 1 || m < 1) fail(Errc::invalid_argument, "pairs: n and m must be >= 1");
    const EmpiricalDist dist_n =
        to_dist(sample_sn_values(n, plan, scoped_seed(plan.master_seed, q, 0)));
    const EmpiricalDist dist_m =
        to_dist(sample_sn_values(m, plan, scoped_seed(plan.master_seed, q, 1)));
    const EmpiricalDist dist_sum =
        to_dist(sample_sn_values(n + m + 1, plan, scoped_seed(plan.master_seed, q, 2)));
    const EmpiricalDist conv =
        convolve_independent(dist_n, dist_m, scoped_seed(plan.master_seed, q, 3));
    const DominanceResult res = ecdf_dominates(dist_sum, conv, plan.alpha);
    any_rejected |= res.verdict == DominanceVerdict::rejected;
    t.rows.push_back({n, m, res.max_gap, res.band, std::string(to_string(res.verdict))});
  }
  doc.check_failed = any_rejected;
  if (any_rejected) doc.check_summary = "stochastic dominance of S_(n+m+1) over S_n + S_m rejected";
  return doc;
}

ResultDocument run_ejector(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  doc.add_meta("n", plan.n);
  doc.add_meta("m", plan.m);
  doc.add_meta("overlay_depth", plan.overlay_depth);
  doc.add_meta("sequence",
               plan.ejector_eval == EjectorEval::full ? "full" : "endpoints");
  doc.add_meta("replicas", plan.replicas);

  const auto results = map_replicas<EjectorCouplingResult>(
      plan.master_seed, plan.replicas, plan.workers, [&plan](std::uint64_t, std::uint64_t seed) {
        const InstructionTape tape(plan.params, substream(seed, Stream::tape));
        return ejector_coupling(plan.n, plan.m, plan.overlay_depth, tape, plan.fuel,
                                plan.ejector_eval);
      });

  Table& t = doc.add_table("replicas", {"replica_index", "s_v", "s_l", "s_r", "base_h0", "K",
                                        "n_1", "n_K", "sum_ok", "deep_ok", "shallow"});
  Table* seq = plan.ejector_eval == EjectorEval::full
                   ? &doc.add_table("sequence", {"replica_index", "k", "n_k"})
                   : nullptr;
  std::int64_t sum_failures = 0;
  std::int64_t deep_checked = 0;
  std::int64_t deep_failures = 0;
  std::int64_t shallow = 0;
  std::int64_t exhausted = 0;
  for (std::size_t r = 0; r < results.size(); ++r) {
    const EjectorCouplingResult& res = results[r];
    sum_failures += res.identity_sum_ok ? 0 : 1;
    if (res.identity_deep_ok.has_value()) {
      ++deep_checked;
      deep_failures += *res.identity_deep_ok ? 0 : 1;
    }
    shallow += res.overlay_too_shallow ? 1 : 0;
    exhausted += res.fuel_exhausted ? 1 : 0;
    t.rows.push_back({static_cast<std::int64_t>(r), res.s_v, res.s_l, res.s_r,
                      static_cast<std::int64_t>(res.base_odometer_at_pivot),
                      static_cast<std::int64_t>(res.overlay_depth), res.n_at(1),
                      res.n_at(res.overlay_depth),
                      static_cast<std::int64_t>(res.identity_sum_ok ? 1 : 0),
                      res.identity_deep_ok.has_value()
                          ? static_cast<std::int64_t>(*res.identity_deep_ok ? 1 : 0)
                          : static_cast<std::int64_t>(-1),
                      static_cast<std::int64_t>(res.overlay_too_shallow ? 1 : 0)});
    if (seq)
      for (const auto& [k, nk] : res.n_by_threshold)
        seq->rows.push_back(
            {static_cast<std::int64_t>(r), static_cast<std::int64_t>(k), nk});
  }
  doc.add_meta("identity_sum_failures", sum_failures);
  doc.add_meta("identity_deep_checked", deep_checked);
  doc.add_meta("identity_deep_failures", deep_failures);
  doc.add_meta("overlay_too_shallow_replicas", shallow);
  doc.add_meta("fuel_exhausted_replicas", exhausted);
  doc.check_failed = sum_failures > 0 || deep_failures > 0;
  if (doc.check_failed) doc.check_summary = "per-tape ejector identities violated";
  return doc;
}

ResultDocument run_exit_fraction(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  const std::vector<std::int64_t> sizes =
      plan.sizes.empty() ? std::vector<std::int64_t>{50, 100, 200, 400} : plan.sizes;
  doc.add_meta("sizes", join_i64(sizes));
  doc.add_meta("initial", plan.initial == InitialKind::ones ? "ones" : "bernoulli");
  if (plan.initial == InitialKind::bernoulli) doc.add_meta("density", plan.density);
  doc.add_meta("replicas", plan.replicas);
  {
    std::string eps;
    for (std::size_t i = 0; i < plan.eps_grid.size(); ++i) {
      if (i) eps += ',';
      char buf[32];
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), plan.eps_grid[i]);
      (void)ec;
      eps.append(buf, ptr);
    }
    doc.add_meta("eps_grid", eps);
  }

  Table& samples_table = doc.add_table("samples", {"n", "replica_index", "value"});
  Table& summary = doc.add_table("summary", {"n", "mean_ratio", "ci_lo", "ci_hi", "n_samples"});
  Table& exceed = doc.add_table("exceed", {"n", "eps", "p_hat", "se"});
  const double z = normal_quantile_two_sided(1.0 - plan.alpha);
  std::int64_t exhausted = 0;

  for (const std::int64_t n : sizes) {
    const SegmentSpec region = SegmentSpec::v_n(n);
    const auto samples = map_replicas<ValueSample>(
        scoped_seed(plan.master_seed, 20, static_cast<std::uint64_t>(n)), plan.replicas,
        plan.workers, [&plan, n, region](std::uint64_t, std::uint64_t seed) {
          const InstructionTape tape(plan.params, substream(seed, Stream::tape));
          const Configuration initial =
              plan.initial == InitialKind::ones
                  ? Configuration::ones(region)
                  : bernoulli_initial(region, plan.density, substream(seed, Stream::init));
          const StabilizationReport rep = stabilize_fast(initial, region, tape, plan.fuel);
          return ValueSample{rep.exits_left + rep.exits_right, rep.fuel_exhausted};
        });
    exhausted += count_exhausted(samples);

    std::vector<double> ratios;
    ratios.reserve(samples.size());
    for (std::size_t r = 0; r < samples.size(); ++r) {
      samples_table.rows.push_back({n, static_cast<std::int64_t>(r), samples[r].value});
      ratios.push_back(static_cast<double>(samples[r].value) / static_cast<double>(n));
    }
    const MeanCI ci = mean_ci(ratios, z);
    summary.rows.push_back({n, ci.mean, ci.lo, ci.hi, static_cast<std::int64_t>(ratios.size())});
    for (const double eps : plan.eps_grid) {
      std::int64_t count = 0;
      for (const ValueSample& s : samples)
        if (static_cast<double>(s.value) > eps * static_cast<double>(n)) ++count;
      const double p_hat = static_cast<double>(count) / static_cast<double>(samples.size());
      const double se = std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(samples.size()));
      exceed.rows.push_back({n, eps, p_hat, se});
    }
  }
  doc.add_meta("fuel_exhausted_replicas", exhausted);
  return doc;
}

ResultDocument run_nml(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  const std::int64_t n = plan.n;
  // Default grids scale with n; at lambda = 1 they straddle the typical M_n
  // and the mean of the matching geometric sums.
  const auto scaled = [n](double f) {
    return static_cast<std::int64_t>(std::ceil(f * static_cast<double>(n)));
  };
  const std::vector<std::int64_t> i_grid =
      plan.i_grid.empty() ? std::vector<std::int64_t>{scaled(0.55), scaled(0.65), scaled(0.75)}
                          : plan.i_grid;
  const std::vector<std::int64_t> j_grid =
      plan.j_grid.empty() ? std::vector<std::int64_t>{scaled(0.5), scaled(0.65), scaled(0.95)}
                          : plan.j_grid;
  doc.add_meta("n", n);
  doc.add_meta("initial", plan.initial == InitialKind::ones ? "ones" : "bernoulli");
  if (plan.initial == InitialKind::bernoulli) doc.add_meta("density", plan.density);
  doc.add_meta("i_grid", join_i64(i_grid));
  doc.add_meta("j_grid", join_i64(j_grid));
  doc.add_meta("replicas", plan.replicas);

  struct NmlSample {
    std::int64_t m = 0;       // exits of the killed stabilization on V_n
    std::int64_t a_lo = 1;    // hull of A(eta) for the free stabilization
    std::int64_t a_hi = 0;
    bool fuel_exhausted = false;
  };
  const SegmentSpec region = SegmentSpec::v_n(n);
  const auto samples = map_replicas<NmlSample>(
      plan.master_seed, plan.replicas, plan.workers,
      [&plan, region](std::uint64_t, std::uint64_t seed) {
        const InstructionTape tape(plan.params, substream(seed, Stream::tape));
        const Configuration initial =
            plan.initial == InitialKind::ones
                ? Configuration::ones(region)
                : bernoulli_initial(region, plan.density, substream(seed, Stream::init));
        NmlSample s;
        const StabilizationReport killed = stabilize_fast(initial, region, tape, plan.fuel);
        s.m = killed.exits_left + killed.exits_right;
        const StabilizationReport free_run =
            stabilize_fast(initial, SegmentSpec::whole_line(), tape, plan.fuel);
        if (!free_run.visited.empty()) {
          s.a_lo = free_run.visited.front();
          s.a_hi = free_run.visited.back();
        }
        s.fuel_exhausted = killed.fuel_exhausted || free_run.fuel_exhausted;
        return s;
      });

  const double r_count = static_cast<double>(samples.size());
  Table& t = doc.add_table("grid", {"i", "j", "p_contained", "bound", "se_combined", "satisfied"});
  bool violated = false;
  std::int64_t exhausted = 0;
  for (const NmlSample& s : samples) exhausted += s.fuel_exhausted ? 1 : 0;
  for (const std::int64_t i : i_grid) {
    std::int64_t m_le_i = 0;
    for (const NmlSample& s : samples)
      if (s.m <= i) ++m_le_i;
    const double p_m = static_cast<double>(m_le_i) / r_count;
    const double se_m = std::sqrt(p_m * (1.0 - p_m) / r_count);
    for (const std::int64_t j : j_grid) {
      std::int64_t contained = 0;
      for (const NmlSample& s : samples)
        if (s.a_lo > s.a_hi || (s.a_lo >= 1 - 2 * j && s.a_hi <= n + 2 * j)) ++contained;
      const double p_c = static_cast<double>(contained) / r_count;
      const double se_c = std::sqrt(p_c * (1.0 - p_c) / r_count);
      const double g = geometric_sum_cdf(i, j, plan.params.lambda, plan.geom);
      const double bound = p_m * g;
      const double se = std::sqrt(se_c * se_c + g * g * se_m * se_m);
      const bool ok = p_c >= bound - 3.0 * se;
      violated |= !ok;
      t.rows.push_back({i, j, p_c, bound, se, static_cast<std::int64_t>(ok ? 1 : 0)});
    }
  }
  doc.add_meta("fuel_exhausted_replicas", exhausted);
  doc.check_failed = violated;
  if (violated) doc.check_summary = "enlargement lower bound violated beyond 3 standard errors";
  return doc;
}

ResultDocument run_inner_bound(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  doc.add_meta("n_grid", join_i64(plan.n_grid));
  doc.add_meta("k_grid", join_i64(plan.k_grid));
  if (!plan.x_grid.empty()) doc.add_meta("x_grid", join_i64(plan.x_grid));
  doc.add_meta("replicas", plan.replicas);

  struct Hull {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    bool fuel_exhausted = false;
  };

  // S_n samples per n and aggregate hulls per k, shared across the grid.
  std::map<std::int64_t, std::vector<ValueSample>> s_samples;
  for (const std::int64_t n : plan.n_grid)
    s_samples.emplace(
        n, sample_sn_values(n, plan, scoped_seed(plan.master_seed, 30, static_cast<std::uint64_t>(n))));
  std::map<std::int64_t, std::vector<Hull>> hulls;
  for (const std::int64_t k : plan.k_grid) {
    hulls.emplace(k, map_replicas<Hull>(
                         scoped_seed(plan.master_seed, 31, static_cast<std::uint64_t>(k)),
                         plan.replicas, plan.workers,
                         [&plan, k](std::uint64_t, std::uint64_t seed) {
                           const InstructionTape tape(plan.params, substream(seed, Stream::tape));
                           const StabilizationReport rep =
                               stabilize_point_source(k, tape, plan.fuel);
                           return Hull{rep.visited.front(), rep.visited.back(),
                                       rep.fuel_exhausted};
                         }));
  }

  Table& t = doc.add_table(
      "grid", {"n", "k", "x", "p_contained", "p_sn_ge_k", "se_combined", "satisfied"});
  bool violated = false;
  for (const std::int64_t n : plan.n_grid) {
    const std::vector<ValueSample>& sn = s_samples.at(n);
    const double r_s = static_cast<double>(sn.size());
    const std::vector<std::int64_t> xs =
        plan.x_grid.empty()
            ? std::vector<std::int64_t>{(n + 3) / 4, (n + 1) / 2, std::max<std::int64_t>(1, (3 * n) / 4)}
            : plan.x_grid;
    for (const std::int64_t k : plan.k_grid) {
      std::int64_t ge = 0;
      for (const ValueSample& s : sn)
        if (s.value >= k) ++ge;
      const double p_s = static_cast<double>(ge) / r_s;
      const double se_s = std::sqrt(p_s * (1.0 - p_s) / r_s);
      const std::vector<Hull>& hk = hulls.at(k);
      const double r_a = static_cast<double>(hk.size());
      for (const std::int64_t x : xs) {
        std::int64_t fit = 0;
        for (const Hull& h : hk)
          if (h.lo >= 1 - x && h.hi <= n - x) ++fit;
        const double p_a = static_cast<double>(fit) / r_a;
        const double se_a = std::sqrt(p_a * (1.0 - p_a) / r_a);
        const double se = std::sqrt(se_a * se_a + se_s * se_s);
        const bool ok = p_a <= p_s + 3.0 * se;
        violated |= !ok;
        t.rows.push_back({n, k, x, p_a, p_s, se, static_cast<std::int64_t>(ok ? 1 : 0)});
      }
    }
  }
  doc.check_failed = violated;
  if (violated) doc.check_summary = "inner-bound inequality violated beyond 3 standard errors";
  return doc;
}

bool reports_identical(const StabilizationReport& a, const StabilizationReport& b) {
  return a.final == b.final && a.odometer == b.odometer && a.exits_left == b.exits_left &&
         a.exits_right == b.exits_right && a.exits_ejected == b.exits_ejected &&
         a.visited == b.visited && a.topplings == b.topplings &&
         a.sleepers_remaining == b.sleepers_remaining;
}

ResultDocument run_abelian_check(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  doc.add_meta("instances", plan.instances);
  doc.add_meta("max_n", plan.max_n);
  doc.add_meta("max_particles", plan.max_particles);
  doc.add_meta("vary_params", plan.vary_params ? "true" : "false");

  static constexpr double kLambdaGrid[3] = {0.5, 1.0, 2.0};
  static constexpr double kPGrid[3] = {0.3, 0.5, 0.7};

  const auto outcomes = map_replicas<std::uint8_t>(
      plan.master_seed, plan.instances, plan.workers,
      [&plan](std::uint64_t idx, std::uint64_t seed) -> std::uint8_t {
        SplitMix64 gen(substream(seed, Stream::instance));
        const std::int64_t n =
            1 + static_cast<std::int64_t>(gen.next_below(static_cast<std::uint64_t>(plan.max_n)));
        const std::int64_t particles = static_cast<std::int64_t>(
            gen.next_below(static_cast<std::uint64_t>(plan.max_particles) + 1));
        Configuration initial;
        for (std::int64_t i = 0; i < particles; ++i)
          initial.add_active(1 + static_cast<std::int64_t>(
                                     gen.next_below(static_cast<std::uint64_t>(n))));
        for (std::int64_t x = 1; x <= n; ++x)
          if (initial.count_at(x) == 1 && !initial.is_asleep(x) && gen.next_unit() < 0.25)
            initial.set_sleeping(x);

        ModelParams params = plan.params;
        if (plan.vary_params) {
          params.lambda = kLambdaGrid[idx % 3];
          params.p = kPGrid[(idx / 3) % 3];
        }
        const InstructionTape tape(params, substream(seed, Stream::tape));
        const SegmentSpec region = SegmentSpec::v_n(n);
        const StabilizationReport a = stabilize(initial, region, tape, Leftmost{}, plan.fuel);
        const StabilizationReport b = stabilize(initial, region, tape, Rightmost{}, plan.fuel);
        const StabilizationReport c = stabilize(
            initial, region, tape, RandomUnstable{substream(seed, Stream::policy)}, plan.fuel);
        return reports_identical(a, b) && reports_identical(a, c) ? 1 : 0;
      });

  std::int64_t failures = 0;
  for (const std::uint8_t ok : outcomes) failures += ok ? 0 : 1;
  Table& t = doc.add_table("summary", {"instances", "failures"});
  t.rows.push_back({static_cast<std::int64_t>(plan.instances), failures});
  doc.check_failed = failures > 0;
  if (doc.check_failed) doc.check_summary = "policy choice changed a stabilization outcome";
  return doc;
}

ResultDocument run_monotonicity_check(const ExperimentPlan& plan) {
  ResultDocument doc = make_doc(plan);
  const std::int64_t n = plan.n;
  const std::int64_t x = plan.extra_site > 0 ? plan.extra_site : (n + 1) / 2;
  if (x < 1 || x > n) fail(Errc::invalid_argument, "x: extra site must lie in {1,...,n}");
  doc.add_meta("n", n);
  doc.add_meta("x", x);
  doc.add_meta("replicas", plan.replicas);
  doc.add_meta("alpha", plan.alpha);

  struct PairSample {
    std::int64_t with_extra = 0;
    std::int64_t base = 0;
  };
  const SegmentSpec region = SegmentSpec::v_n(n);
  const auto samples = map_replicas<PairSample>(
      plan.master_seed, plan.replicas, plan.workers, [&plan, region, x](std::uint64_t, std::uint64_t seed) {
        const InstructionTape tape(plan.params, substream(seed, Stream::tape));
        Configuration eta = Configuration::ones(region);
        eta.add_active(x);
        const StabilizationReport rep_eta = stabilize_fast(eta, region, tape, plan.fuel);
        const StabilizationReport rep_xi =
            stabilize_fast(Configuration::ones(region), region, tape, plan.fuel);
        return PairSample{rep_eta.sleepers_remaining, rep_xi.sleepers_remaining};
      });

  std::vector<std::int64_t> with_extra, base;
  with_extra.reserve(samples.size());
  base.reserve(samples.size());
  for (const PairSample& s : samples) {
    with_extra.push_back(s.with_extra);
    base.push_back(s.base);
  }
  const DominanceResult res = ecdf_dominates(EmpiricalDist(std::move(with_extra)),
                                             EmpiricalDist(std::move(base)), plan.alpha);
  Table& t = doc.add_table("result", {"n", "x", "max_gap", "band", "verdict"});
  t.rows.push_back({n, x, res.max_gap, res.band, std::string(to_string(res.verdict))});
  doc.check_failed = res.verdict == DominanceVerdict::rejected;
  if (doc.check_failed)
    doc.check_summary = "dominance of Stab(eta) over Stab(xi) rejected on matched tapes";
  return doc;
}

}  // namespace

void ExperimentPlan::validate() const {
  params.validate();
  if (replicas < 1) fail(Errc::invalid_argument, "replicas: must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    fail(Errc::invalid_argument, "alpha: must be in (0,1), got " + std::to_string(alpha));
  if (workers < 1) fail(Errc::invalid_argument, "workers: must be >= 1");
  if (!(rho_step > 0.0)) fail(Errc::invalid_argument, "rho-step: must be positive");
  if (!(rho_max >= 0.0)) fail(Errc::invalid_argument, "rho-max: must be non-negative");
  if (!(density >= 0.0 && density < 1.0))
    fail(Errc::invalid_argument, "density: must be in [0,1), got " + std::to_string(density));
  if (n < 1) fail(Errc::invalid_argument, "n: must be >= 1");
  if (m < 1) fail(Errc::invalid_argument, "m: must be >= 1");
  if (k < 1) fail(Errc::invalid_argument, "k: must be >= 1");
  if (steps < 0) fail(Errc::invalid_argument, "steps: must be >= 0");
  if (max_n < 1 || max_n > 64) fail(Errc::invalid_argument, "max-n: must be in {1,...,64}");
  if (max_particles < 0) fail(Errc::invalid_argument, "max-particles: must be >= 0");
  for (const std::int64_t s : sizes)
    if (s < 1) fail(Errc::invalid_argument, "sizes: entries must be >= 1");
  for (const std::int64_t s : n_grid)
    if (s < 1) fail(Errc::invalid_argument, "n-grid: entries must be >= 1");
  for (const std::int64_t s : k_grid)
    if (s < 1) fail(Errc::invalid_argument, "k-grid: entries must be >= 1");
  for (const std::int64_t s : i_grid)
    if (s < 0) fail(Errc::invalid_argument, "i-grid: entries must be >= 0");
  for (const std::int64_t s : j_grid)
    if (s < 0) fail(Errc::invalid_argument, "j-grid: entries must be >= 0");
  for (const double e : eps_grid)
    if (!(e > 0.0)) fail(Errc::invalid_argument, "eps-grid: entries must be positive");
}

ExperimentPlan plan_from_kv(const std::vector<std::pair<std::string, std::string>>& kv) {
  ExperimentPlan plan;
  bool have_command = false;
  for (const auto& [key, value] : kv) {
    if (key == "command") {
      plan.kind = kind_from_string(value);
      have_command = true;
    } else if (key == "lambda") {
      plan.params.lambda = parse_double(key, value);
    } else if (key == "p") {
      plan.params.p = parse_double(key, value);
    } else if (key == "seed") {
      plan.master_seed = parse_u64(key, value);
    } else if (key == "replicas") {
      plan.replicas = parse_u64(key, value);
    } else if (key == "fuel") {
      plan.fuel = parse_u64(key, value);
    } else if (key == "workers") {
      plan.workers = static_cast<int>(parse_i64(key, value));
    } else if (key == "alpha") {
      plan.alpha = parse_double(key, value);
    } else if (key == "geom-convention") {
      if (value == "zero")
        plan.geom = GeomConvention::zero;
      else if (value == "one")
        plan.geom = GeomConvention::one;
      else
        fail(Errc::invalid_argument, "geom-convention: expected 'zero' or 'one', got '" + value + "'");
    } else if (key == "n") {
      plan.n = parse_i64(key, value);
    } else if (key == "m") {
      plan.m = parse_i64(key, value);
    } else if (key == "k") {
      plan.k = parse_i64(key, value);
    } else if (key == "steps") {
      plan.steps = parse_i64(key, value);
    } else if (key == "sizes") {
      plan.sizes = parse_i64_list(key, value);
    } else if (key == "pairs") {
      plan.pairs = parse_pairs(key, value);
    } else if (key == "overlay-depth") {
      plan.overlay_depth = parse_u64(key, value);
    } else if (key == "sequence") {
      if (value == "full")
        plan.ejector_eval = EjectorEval::full;
      else if (value == "endpoints")
        plan.ejector_eval = EjectorEval::endpoints;
      else
        fail(Errc::invalid_argument, "sequence: expected 'full' or 'endpoints', got '" + value + "'");
    } else if (key == "rho-max") {
      plan.rho_max = parse_double(key, value);
    } else if (key == "rho-step") {
      plan.rho_step = parse_double(key, value);
    } else if (key == "eps-grid") {
      plan.eps_grid = parse_double_list(key, value);
    } else if (key == "initial") {
      if (value == "ones")
        plan.initial = InitialKind::ones;
      else if (value == "bernoulli")
        plan.initial = InitialKind::bernoulli;
      else
        fail(Errc::invalid_argument, "initial: expected 'ones' or 'bernoulli', got '" + value + "'");
    } else if (key == "density") {
      plan.density = parse_double(key, value);
      plan.initial = InitialKind::bernoulli;
    } else if (key == "i-grid") {
      plan.i_grid = parse_i64_list(key, value);
    } else if (key == "j-grid") {
      plan.j_grid = parse_i64_list(key, value);
    } else if (key == "n-grid") {
      plan.n_grid = parse_i64_list(key, value);
    } else if (key == "k-grid") {
      plan.k_grid = parse_i64_list(key, value);
    } else if (key == "x-grid") {
      plan.x_grid = parse_i64_list(key, value);
    } else if (key == "instances") {
      plan.instances = parse_u64(key, value);
    } else if (key == "max-n") {
      plan.max_n = parse_i64(key, value);
    } else if (key == "max-particles") {
      plan.max_particles = parse_i64(key, value);
    } else if (key == "vary-params") {
      plan.vary_params = parse_bool(key, value);
    } else if (key == "x") {
      plan.extra_site = parse_i64(key, value);
    } else {
      fail(Errc::invalid_argument, "unknown configuration key '" + key + "'");
    }
  }
  if (!have_command) fail(Errc::invalid_argument, "command: missing");
  plan.validate();
  return plan;
}

ResultDocument run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  switch (plan.kind) {
    case ExperimentKind::sample_sn: return run_sample_sn(plan);
    case ExperimentKind::dd_run: return run_dd(plan);
    case ExperimentKind::hockey: return run_hockey(plan);
    case ExperimentKind::ball: return run_ball(plan);
    case ExperimentKind::dominance: return run_dominance(plan);
    case ExperimentKind::ejector: return run_ejector(plan);
    case ExperimentKind::exit_fraction: return run_exit_fraction(plan);
    case ExperimentKind::nml_check: return run_nml(plan);
    case ExperimentKind::inner_bound: return run_inner_bound(plan);
    case ExperimentKind::abelian_check: return run_abelian_check(plan);
    case ExperimentKind::monotonicity_check: return run_monotonicity_check(plan);
    case ExperimentKind::estimate_rhoc: return run_estimate_rhoc(plan);
  }
  fail(Errc::internal, "unhandled experiment kind");
}

}  // namespace arw
