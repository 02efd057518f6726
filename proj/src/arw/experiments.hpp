#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "arw/chains.hpp"
#include "arw/result.hpp"
#include "arw/stats.hpp"

namespace arw {

enum class ExperimentKind {
  sample_sn,
  dd_run,
  hockey,
  ball,
  dominance,
  ejector,
  exit_fraction,
  nml_check,
  inner_bound,
  abelian_check,
  monotonicity_check,
  estimate_rhoc,
};

const char* to_string(ExperimentKind kind);

enum class InitialKind { ones, bernoulli };

// Fully resolved experiment configuration. Built either directly or from
// key=value pairs (the CLI and the C API both speak key=value).
struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::sample_sn;
  ModelParams params;
  std::uint64_t master_seed = 1;
  std::uint64_t replicas = 1000;
  std::uint64_t fuel = 1'000'000'000;  // per-stabilization toppling budget
  int workers = 1;
  double alpha = 0.01;
  GeomConvention geom = GeomConvention::zero;

  std::int64_t n = 100;
  std::int64_t m = 5;
  std::int64_t k = 100;
  std::int64_t steps = 100;
  std::vector<std::int64_t> sizes;                        // estimate-rhoc, exit-fraction ladders
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;  // dominance (n, m) pairs
  std::uint64_t overlay_depth = 0;                        // ejector K; 0 selects auto depth
  EjectorEval ejector_eval = EjectorEval::full;
  double rho_max = 2.0;
  double rho_step = 0.1;
  std::vector<double> eps_grid{0.01, 0.02, 0.05, 0.1};
  InitialKind initial = InitialKind::ones;
  double density = 0.5;
  std::vector<std::int64_t> i_grid;  // nml-check; empty selects n-scaled defaults
  std::vector<std::int64_t> j_grid;
  std::vector<std::int64_t> n_grid{20, 40, 60};  // inner-bound
  std::vector<std::int64_t> k_grid{3, 6, 12};
  std::vector<std::int64_t> x_grid;  // empty selects quarter points of each n
  std::uint64_t instances = 1000;    // abelian-check
  std::int64_t max_n = 12;
  std::int64_t max_particles = 12;
  bool vary_params = true;           // abelian-check: cycle a (lambda, p) grid
  std::int64_t extra_site = 0;       // monotonicity-check; 0 selects the middle

  void validate() const;
};

// Builds a plan from key=value pairs; unknown keys and malformed values
// raise invalid_argument errors naming the key. The "command" key is
// required.
ExperimentPlan plan_from_kv(const std::vector<std::pair<std::string, std::string>>& kv);

// Runs the experiment. Results are byte-identical for identical plans,
// whatever the worker count (replica streams are counter-seeded and merged
// by replica index).
ResultDocument run_experiment(const ExperimentPlan& plan);

}  // namespace arw
