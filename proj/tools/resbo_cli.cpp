// resbo: run robust BO experiments, compute reference optima, plot results.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 numerical failure.

#include "resbo/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

struct RunArgs {
  std::string config;
  std::optional<std::string> problem, acq, out;
  std::optional<int> iters, reps;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a) {
  resbo::RunConfig cfg = resbo::load_config(a.config);
  if (a.problem) cfg.problem = *a.problem;
  if (a.acq) cfg.acquisition = *a.acq;
  if (a.iters) cfg.iterations = *a.iters;
  if (a.reps) {
    cfg.repetitions = *a.reps;
    if (static_cast<int>(cfg.seeds.size()) != cfg.repetitions) cfg.seeds.clear();
  }
  if (a.seed) {
    cfg.seed = *a.seed;
    cfg.seeds.clear();
  }
  if (a.out) cfg.out_dir = *a.out;
  cfg.validate();
  const int workers = resbo::worker_count_from_env();
  const auto records = resbo::run_experiment(cfg, workers);
  for (const auto& r : records) {
    const auto& last = r.iterations.back();
    const auto regret = last.robust_regret ? last.robust_regret : last.inference_regret;
    std::printf("run %d seed %llu: %zu iterations, final regret %s\n", r.run_id,
                static_cast<unsigned long long>(r.seed), r.iterations.size(),
                regret ? resbo::format_double(*regret).c_str() : "n/a");
  }
  std::printf("wrote %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_reference(const std::string& problem, int grid, std::uint64_t seed, std::string cache) {
  const resbo::ProblemSpec p = resbo::make_problem(problem, seed);
  if (grid <= 0) grid = resbo::default_reference_grid(problem);
  if (cache.empty()) {
    const char* env = std::getenv("RESBO_CACHE_DIR");
    cache = env && *env ? env : ".resbo_cache";
  }
  const resbo::RobustReference ref = resbo::cached_reference(p, grid, cache, seed);
  std::printf("problem %s grid %d\nf_star %s\nx_star", problem.c_str(), grid,
              resbo::format_double(ref.f_star).c_str());
  for (Eigen::Index i = 0; i < ref.x_star.size(); ++i)
    std::printf(" %s", resbo::format_double(ref.x_star[i]).c_str());
  std::printf("\ntheta_star");
  for (Eigen::Index i = 0; i < ref.theta_star.size(); ++i)
    std::printf(" %s", resbo::format_double(ref.theta_star[i]).c_str());
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust Bayesian optimization experiments"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run BO repetitions and write CSV records");
  run->add_option("--config", run_args.config, "JSON config file")->required();
  run->add_option("--problem", run_args.problem, "Problem name");
  run->add_option("--acq", run_args.acq, "Acquisition")
      ->check(CLI::IsMember({"res", "stableopt", "ucb", "ei", "mes", "kg", "random"}));
  run->add_option("--iters", run_args.iters, "Iterations T");
  run->add_option("--reps", run_args.reps, "Repetitions R");
  run->add_option("--seed", run_args.seed, "Base seed S");
  run->add_option("--out", run_args.out, "Output directory");

  std::string ref_problem, ref_cache;
  int ref_grid = 0;
  std::uint64_t ref_seed = 0;
  auto* reference = app.add_subcommand("reference", "Compute or load a brute-force robust optimum");
  reference->add_option("--problem", ref_problem, "Problem name")->required();
  reference->add_option("--grid", ref_grid, "Grid points per continuous dimension");
  reference->add_option("--seed", ref_seed, "Seed for seeded problems");
  reference->add_option("--cache", ref_cache, "Cache directory");

  std::string plot_in;
  bool linear = false;
  auto* plot = app.add_subcommand("plot", "Aggregate run CSVs and draw the regret plot");
  plot->add_option("--in", plot_in, "Directory with run_*.csv")->required();
  plot->add_flag("--linear", linear, "Linear y axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*reference) return cmd_reference(ref_problem, ref_grid, ref_seed, ref_cache);
    if (*plot) {
      const auto records = resbo::plot_directory(plot_in, !linear);
      std::printf("aggregated %zu runs into %s\n", records.size(), plot_in.c_str());
      return 0;
    }
  } catch (const resbo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const resbo::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
