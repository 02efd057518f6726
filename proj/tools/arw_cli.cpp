// Command-line front end for the arw shared library. All simulation work
// happens behind the C API; this binary only parses flags, resolves the
// configuration and writes the rendered result file.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "arw.h"

namespace {

struct PendingOption {
  std::string key;
  CLI::Option* opt;
  std::shared_ptr<std::string> value;
};

struct CommandCtx {
  CLI::App* app = nullptr;
  std::vector<PendingOption> options;
  std::shared_ptr<std::string> out = std::make_shared<std::string>();
  std::shared_ptr<std::string> format = std::make_shared<std::string>("csv");
  std::shared_ptr<std::string> config = std::make_shared<std::string>();
  CLI::Option* seed_opt = nullptr;
};

void add_plan_option(CommandCtx& ctx, const std::string& flag, const std::string& key,
                     const std::string& desc) {
  auto store = std::make_shared<std::string>();
  CLI::Option* opt = ctx.app->add_option(flag, *store, desc);
  if (key == "seed") ctx.seed_opt = opt;
  ctx.options.push_back({key, opt, store});
}

void add_common_options(CommandCtx& ctx) {
  add_plan_option(ctx, "--lambda", "lambda", "sleep rate (positive real)");
  add_plan_option(ctx, "--p", "p", "probability to jump left, in (0,1)");
  add_plan_option(ctx, "--seed", "seed", "master seed (default from ARW_SEED, else 1)");
  add_plan_option(ctx, "--replicas", "replicas", "number of Monte Carlo replicas");
  add_plan_option(ctx, "--fuel", "fuel", "per-stabilization toppling budget");
  add_plan_option(ctx, "--workers", "workers",
                  "worker threads; results are identical for any value");
  add_plan_option(ctx, "--alpha", "alpha", "significance level for statistical verdicts");
  add_plan_option(ctx, "--geom-convention", "geom-convention",
                  "geometric variable convention: zero (support {0,1,...}) or one");
  ctx.app->add_option("--config", *ctx.config, "key=value configuration file; flags override");
  ctx.app->add_option("-o,--out", *ctx.out, "output file (default <command>.<format>)");
  ctx.app->add_option("--format", *ctx.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

bool parse_config_file(const std::string& path,
                       std::vector<std::pair<std::string, std::string>>& kv, std::string& error) {
  std::ifstream in(path);
  if (!in) {
    error = "cannot open config file '" + path + "'";
    return false;
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      error = path + ":" + std::to_string(lineno) + ": expected key=value";
      return false;
    }
    auto trim = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t");
      const std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return true;
}

int run_command(const std::string& command, const CommandCtx& ctx) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("command", command);
  bool seed_provided = ctx.seed_opt != nullptr && ctx.seed_opt->count() > 0;
  if (!ctx.config->empty()) {
    std::string error;
    std::vector<std::pair<std::string, std::string>> file_kv;
    if (!parse_config_file(*ctx.config, file_kv, error)) {
      std::cerr << "error: " << error << "\n";
      return 2;
    }
    for (auto& [key, value] : file_kv) {
      if (key == "seed") seed_provided = true;
      kv.emplace_back(std::move(key), std::move(value));
    }
  }
  for (const PendingOption& po : ctx.options)
    if (po.opt->count() > 0) kv.emplace_back(po.key, *po.value);
  if (!seed_provided) {
    if (const char* env_seed = std::getenv("ARW_SEED"); env_seed && *env_seed)
      kv.emplace_back("seed", env_seed);
  }

  arw_plan* plan = nullptr;
  if (arw_plan_create(&plan) != ARW_OK) {
    std::cerr << "error: " << arw_last_error() << "\n";
    return 1;
  }
  for (const auto& [key, value] : kv) arw_plan_set(plan, key.c_str(), value.c_str());

  arw_result* result = nullptr;
  const arw_status status = arw_plan_run(plan, &result);
  arw_plan_destroy(plan);
  if (status == ARW_EINVAL) {
    std::cerr << "error: " << arw_last_error() << "\n";
    return 2;
  }
  if (status != ARW_OK && status != ARW_ECHECK) {
    std::cerr << "error: " << arw_last_error() << "\n";
    return 1;
  }

  const char* text = nullptr;
  if (arw_result_render(result, ctx.format->c_str(), &text) != ARW_OK) {
    std::cerr << "error: " << arw_last_error() << "\n";
    arw_result_destroy(result);
    return 1;
  }
  const std::string out_path = ctx.out->empty() ? command + "." + *ctx.format : *ctx.out;
  {
    std::ofstream out(out_path, std::ios::binary);
    out << text;
    if (!out) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      arw_result_destroy(result);
      return 1;
    }
  }

  const char* meta = nullptr;
  if (arw_result_meta(result, &meta) == ARW_OK) std::cout << meta;
  std::cout << "# output = " << out_path << "\n";
  const bool check_failed = arw_result_check_failed(result) != 0;
  if (check_failed) std::cout << "# check failed: " << arw_last_error() << "\n";
  arw_result_destroy(result);
  return check_failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("arw ") + arw_version() +
               " - activated random walk simulation laboratory"};
  app.require_subcommand(1);

  struct Sub {
    std::string name;
    std::string desc;
    std::vector<std::pair<std::string, std::string>> extra;  // (flag, plan key)
  };
  const std::vector<Sub> subs = {
      {"sample-sn", "sample the stationary sleeper count S_n", {{"--n", "n"}}},
      {"dd-run", "record driven-dissipative trajectories", {{"--n", "n"}, {"--steps", "steps"}}},
      {"hockey",
       "mean retained density along the driven trajectory over a rho grid",
       {{"--n", "n"}, {"--rho-max", "rho-max"}, {"--rho-step", "rho-step"}}},
      {"ball", "aggregate of k particles started at the origin", {{"--k", "k"}}},
      {"dominance",
       "test stochastic dominance of S_(n+m+1) over S_n + S_m",
       {{"--pairs", "pairs"}}},
      {"ejector",
       "per-tape ejector-seat coupling identities",
       {{"--n", "n"}, {"--m", "m"}, {"--overlay-depth", "overlay-depth"}, {"--sequence", "sequence"}}},
      {"exit-fraction",
       "exit counts M_n over a size ladder",
       {{"--sizes", "sizes"},
        {"--initial", "initial"},
        {"--density", "density"},
        {"--eps-grid", "eps-grid"}}},
      {"nml-check",
       "no-particle-leaves enlargement bound",
       {{"--n", "n"},
        {"--initial", "initial"},
        {"--density", "density"},
        {"--i-grid", "i-grid"},
        {"--j-grid", "j-grid"}}},
      {"inner-bound",
       "aggregate containment vs stationary tail inequality",
       {{"--n-grid", "n-grid"}, {"--k-grid", "k-grid"}, {"--x-grid", "x-grid"}}},
      {"abelian-check",
       "exact policy-independence of stabilization",
       {{"--instances", "instances"},
        {"--max-n", "max-n"},
        {"--max-particles", "max-particles"},
        {"--vary-params", "vary-params"}}},
      {"monotonicity-check",
       "dominance of sleeper counts under an extra particle",
       {{"--n", "n"}, {"--x", "x"}}},
      {"estimate-rhoc",
       "estimate rho_c from S_n/n over a size ladder",
       {{"--sizes", "sizes"}}},
  };

  std::vector<std::unique_ptr<CommandCtx>> contexts;
  for (const Sub& sub : subs) {
    auto ctx = std::make_unique<CommandCtx>();
    ctx->app = app.add_subcommand(sub.name, sub.desc);
    for (const auto& [flag, key] : sub.extra) add_plan_option(*ctx, flag, key, "");
    add_common_options(*ctx);
    contexts.push_back(std::move(ctx));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (std::size_t i = 0; i < subs.size(); ++i)
    if (contexts[i]->app->parsed()) return run_command(subs[i].name, *contexts[i]);
  std::cerr << "error: no command given\n";
  return 2;
}
