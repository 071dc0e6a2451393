#pragma once

// Experiment orchestration: configuration, the BO loop, reference optima,
// per-run CSV records, aggregation and the regret plot.

#include "resbo/acq_opt.hpp"
#include "resbo/baselines.hpp"
#include "resbo/gp.hpp"
#include "resbo/problems.hpp"
#include "resbo/res.hpp"
#include "resbo/robust.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace resbo {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr int kReferenceCacheVersion = 1;

struct RunConfig {
  std::string problem = "branin";
  std::string acquisition = "res";  // res, stableopt, ucb, ei, mes, kg, random
  int iterations = 10;
  std::optional<int> initial_design;  // default: the problem's
  int repetitions = 1;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;   // one per repetition; default seed + r

  ResOptions res;
  BaselineConfig baseline;

  std::string hyper_policy = "auto";  // auto (problem default), fit, fixed
  std::optional<KernelParams> fixed_params;
  HyperparameterBounds bounds;
  HyperparameterOptions hyper;
  double noise_variance = 0.001;

  AcqOptimOptions acq_opt;
  RobustOptions robust;

  int reference_grid = 0;  // 0: problem default
  std::string out_dir = "results";
  std::string cache_dir;   // default: $RESBO_CACHE_DIR, else <out_dir>/cache
  bool timing = false;     // write wall-clock columns (otherwise zeros)

  /// Throws ConfigError.
  void validate() const;
  std::vector<std::uint64_t> run_seeds() const;
};

/// Parses a JSON config document. Unknown keys are rejected.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

struct IterationRecord {
  int iteration = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd theta;
  double y = 0.0;
  Eigen::VectorXd x_star;
  Eigen::VectorXd theta_star;
  std::optional<double> robust_regret;
  std::optional<double> inference_regret;
  double t_fit_s = 0.0;
  double t_sample_s = 0.0;
  double t_ep_s = 0.0;
  double t_acqopt_s = 0.0;
};

struct RunRecord {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string problem;
  std::string acquisition;
  std::vector<IterationRecord> iterations;
  bool complete = false;
  std::string error;   // set when the run aborted
  bool numerical_failure = false;
};

int default_reference_grid(const std::string& problem);

/// Loads the cached reference for (problem, grid[, seed]) or computes and
/// stores it. The seed only matters for seeded problems.
RobustReference cached_reference(const ProblemSpec& problem, int grid,
                                 const std::filesystem::path& cache_dir, std::uint64_t seed = 0);

/// One repetition of the BO loop. Never throws for module errors: the
/// partial record comes back with `complete == false`.
RunRecord run_bo(const RunConfig& config, int run_id, std::uint64_t seed,
                 const ProblemSpec& problem, const RobustReference& reference,
                 const std::optional<KernelParams>& pretrained = std::nullopt);

/// Hyperparameters fitted once on random points below the problem's
/// threshold (HyperPolicy::kPretrain).
KernelParams pretrain_hyperparameters(const ProblemSpec& problem, double noise_variance,
                                      std::uint64_t seed);

/// Worker count from $RESBO_WORKERS (default 1).
int worker_count_from_env();

/// All repetitions (in parallel), then CSVs, aggregate and plot in out_dir.
std::vector<RunRecord> run_experiment(const RunConfig& config, int workers);

// CSV and aggregation.
std::string format_double(double v);
void write_run_csv(const RunRecord& record, const std::filesystem::path& path, bool timing);
/// Throws std::runtime_error on malformed input or an unknown schema version.
RunRecord read_run_csv(const std::filesystem::path& path);

/// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted values.
double quantile_type7(std::vector<double> values, double p);

struct AggregateRow {
  int iteration = 0;
  std::optional<double> robust_q25, robust_median, robust_q75;
  std::optional<double> inference_q25, inference_median, inference_q75;
};

/// Per-iteration quartiles across records (only iterations every record
/// has). Throws std::invalid_argument for an empty list.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records);

/// Writes run_<id>.csv per record, aggregate.csv and regret.svg to out_dir.
void aggregate_and_plot(const std::vector<RunRecord>& records, const std::filesystem::path& out_dir,
                        bool timing = false, bool log_y = true);

/// Reads every run_*.csv in `dir` and writes aggregate.csv and regret.svg.
std::vector<RunRecord> plot_directory(const std::filesystem::path& dir, bool log_y = true);

}  // namespace resbo
