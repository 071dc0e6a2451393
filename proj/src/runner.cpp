#include "resbo/runner.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace resbo {

using json = nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

enum Stream : std::uint64_t {
  kDesign = 1,
  kNoise,
  kHyper,
  kSample,
  kAcq,
  kReport,
  kBaseline,
};

const std::set<std::string> kAcquisitions = {"res", "stableopt", "ucb", "ei",
                                             "mes", "kg",        "random"};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  const auto names = problem_names();
  if (std::find(names.begin(), names.end(), problem) == names.end())
    throw ConfigError("unknown problem '" + problem + "'");
  if (!kAcquisitions.count(acquisition))
    throw ConfigError("unknown acquisition '" + acquisition + "'");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (initial_design && *initial_design < 1) throw ConfigError("initial_design must be >= 1");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!seeds.empty() && static_cast<int>(seeds.size()) != repetitions)
    throw ConfigError("seeds must have one entry per repetition");
  if (res.num_samples < 1 || res.num_features < 1)
    throw ConfigError("res.num_samples and res.num_features must be >= 1");
  if (!(res.ep.damping > 0.0 && res.ep.damping <= 1.0)) throw ConfigError("ep damping in (0, 1]");
  try {
    baseline.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (hyper_policy != "auto" && hyper_policy != "fit" && hyper_policy != "fixed")
    throw ConfigError("hyperparameters.policy must be auto, fit or fixed");
  if (!(noise_variance > 0.0)) throw ConfigError("noise_variance must be > 0");
  if (!(bounds.sigma_lower > 0.0 && bounds.sigma_lower <= bounds.sigma_upper &&
        bounds.length_lower > 0.0 && bounds.length_lower <= bounds.length_upper))
    throw ConfigError("invalid hyperparameter bounds");
  if (fixed_params) {
    try {
      fixed_params->validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("hyperparameters.fixed: ") + e.what());
    }
  }
  if (acq_opt.restarts < 1 || acq_opt.screen < 1 || acq_opt.max_evals < 1 ||
      robust.outer_restarts < 1 || robust.inner_restarts < 1 || robust.outer_screen < 1 ||
      robust.outer_max_evals < 1 || robust.inner_max_iter < 1)
    throw ConfigError("optimizer counts must be >= 1");
  if (reference_grid < 0) throw ConfigError("reference_grid must be >= 0");
}

std::vector<std::uint64_t> RunConfig::run_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int r = 0; r < repetitions; ++r) out.push_back(seed + static_cast<std::uint64_t>(r));
  return out;
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"problem", "acquisition", "iterations", "initial_design", "repetitions", "seed",
              "seeds", "res", "baseline", "hyperparameters", "optimizer", "reference_grid", "out",
              "cache_dir", "timing"},
             "config");
  RunConfig c;
  read(j, "problem", c.problem);
  read(j, "acquisition", c.acquisition);
  read(j, "iterations", c.iterations);
  if (j.contains("initial_design")) {
    int m = 0;
    read(j, "initial_design", m);
    c.initial_design = m;
  }
  read(j, "repetitions", c.repetitions);
  read(j, "seed", c.seed);
  read(j, "seeds", c.seeds);
  read(j, "reference_grid", c.reference_grid);
  read(j, "out", c.out_dir);
  read(j, "cache_dir", c.cache_dir);
  read(j, "timing", c.timing);

  if (j.contains("res")) {
    const json& r = j["res"];
    check_keys(r, {"num_samples", "num_features", "disable_truncation", "literal_zero_lower", "ep"},
               "res");
    read(r, "num_samples", c.res.num_samples);
    read(r, "num_features", c.res.num_features);
    read(r, "disable_truncation", c.res.disable_truncation);
    read(r, "literal_zero_lower", c.res.literal_zero_lower);
    if (r.contains("ep")) {
      const json& e = r["ep"];
      check_keys(e, {"damping", "tol", "max_iter"}, "res.ep");
      read(e, "damping", c.res.ep.damping);
      read(e, "tol", c.res.ep.tol);
      read(e, "max_iter", c.res.ep.max_iter);
    }
  }
  if (j.contains("baseline")) {
    const json& b = j["baseline"];
    check_keys(b,
               {"beta_sqrt", "mes_num_mins", "mes_num_features", "kg_grid_per_dim",
                "kg_num_samples", "kg_max_points"},
               "baseline");
    read(b, "beta_sqrt", c.baseline.beta_sqrt);
    read(b, "mes_num_mins", c.baseline.mes_num_mins);
    read(b, "mes_num_features", c.baseline.mes_num_features);
    read(b, "kg_grid_per_dim", c.baseline.kg_grid_per_dim);
    read(b, "kg_num_samples", c.baseline.kg_num_samples);
    read(b, "kg_max_points", c.baseline.kg_max_points);
  }
  if (j.contains("hyperparameters")) {
    const json& h = j["hyperparameters"];
    check_keys(h, {"policy", "restarts", "max_iterations", "noise_variance", "bounds", "fixed"},
               "hyperparameters");
    read(h, "policy", c.hyper_policy);
    read(h, "restarts", c.hyper.restarts);
    read(h, "max_iterations", c.hyper.max_iterations);
    read(h, "noise_variance", c.noise_variance);
    if (h.contains("bounds")) {
      const json& b = h["bounds"];
      check_keys(b, {"sigma_lower", "sigma_upper", "length_lower", "length_upper"},
                 "hyperparameters.bounds");
      read(b, "sigma_lower", c.bounds.sigma_lower);
      read(b, "sigma_upper", c.bounds.sigma_upper);
      read(b, "length_lower", c.bounds.length_lower);
      read(b, "length_upper", c.bounds.length_upper);
    }
    if (h.contains("fixed")) {
      const json& f = h["fixed"];
      check_keys(f, {"signal_variance", "lengthscales"}, "hyperparameters.fixed");
      KernelParams kp;
      std::vector<double> ls;
      read(f, "signal_variance", kp.signal_variance);
      read(f, "lengthscales", ls);
      kp.lengthscales = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
      c.fixed_params = kp;
    }
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    check_keys(o,
               {"acq_restarts", "acq_screen", "acq_max_evals", "outer_restarts", "inner_restarts",
                "inner_max_iter", "outer_max_evals", "outer_screen"},
               "optimizer");
    read(o, "acq_restarts", c.acq_opt.restarts);
    read(o, "acq_screen", c.acq_opt.screen);
    read(o, "acq_max_evals", c.acq_opt.max_evals);
    read(o, "outer_restarts", c.robust.outer_restarts);
    read(o, "inner_restarts", c.robust.inner_restarts);
    read(o, "inner_max_iter", c.robust.inner_max_iter);
    read(o, "outer_max_evals", c.robust.outer_max_evals);
    read(o, "outer_screen", c.robust.outer_screen);
  }
  if (c.fixed_params) c.fixed_params->noise_variance = c.noise_variance;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

int default_reference_grid(const std::string& problem) {
  if (problem == "synthetic_polynomial" || problem == "within_model") return 400;
  if (problem == "hartmann3d") return 1;  // fully finite
  return 2000;
}

RobustReference cached_reference(const ProblemSpec& problem, int grid,
                                 const std::filesystem::path& cache_dir, std::uint64_t seed) {
  std::string key = problem.name + "_g" + std::to_string(grid);
  if (problem.name == "within_model") key += "_s" + std::to_string(seed);
  const std::filesystem::path file = cache_dir / ("reference_" + key + ".json");
  if (std::filesystem::exists(file)) {
    try {
      std::ifstream in(file);
      const json j = json::parse(in);
      if (j.at("version").get<int>() == kReferenceCacheVersion &&
          j.at("problem").get<std::string>() == problem.name && j.at("grid").get<int>() == grid) {
        RobustReference ref;
        ref.grid_per_dim = grid;
        ref.f_star = j.at("f_star").get<double>();
        const auto xs = j.at("x_star").get<std::vector<double>>();
        const auto ts = j.at("theta_star").get<std::vector<double>>();
        ref.x_star = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
        ref.theta_star = Eigen::Map<const Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
        return ref;
      }
    } catch (const std::exception&) {
      // Unreadable cache entries are recomputed.
    }
  }
  const RobustReference ref = true_robust_reference(problem, grid);
  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  json j;
  j["version"] = kReferenceCacheVersion;
  j["problem"] = problem.name;
  j["grid"] = grid;
  j["f_star"] = ref.f_star;
  j["x_star"] = std::vector<double>(ref.x_star.data(), ref.x_star.data() + ref.x_star.size());
  j["theta_star"] =
      std::vector<double>(ref.theta_star.data(), ref.theta_star.data() + ref.theta_star.size());
  j["method"] = ref.method;
  const std::filesystem::path tmp = file.string() + ".tmp" + std::to_string(seed);
  {
    std::ofstream out(tmp);
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, file, ec);
  return ref;
}

KernelParams pretrain_hyperparameters(const ProblemSpec& problem, double noise_variance,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const SpaceSpec& space = problem.space;
  Eigen::MatrixXd z(problem.pretrain_points, space.model_dim());
  Eigen::VectorXd y(problem.pretrain_points);
  int filled = 0;
  for (long tries = 0; filled < problem.pretrain_points && tries < 10000000L; ++tries) {
    const Eigen::VectorXd x = space.controllable.sample(rng);
    const Eigen::VectorXd th = space.uncontrollable.sample(rng);
    const double v = problem.raw(x, th);
    if (!(v < problem.pretrain_threshold)) continue;
    z.row(filled) = space.model_input(x, th).transpose();
    y[filled] = problem.objective(x, th);
    ++filled;
  }
  if (filled < 2) throw NumericalError("pretraining: no points below the threshold");
  HyperparameterOptions ho;
  ho.restarts = 2;
  ho.max_iterations = 100;
  ho.seed = seed;
  return fit_hyperparameters(Dataset(z.topRows(filled), y.head(filled)), HyperparameterBounds{},
                             noise_variance, ho)
      .params;
}

namespace {

// Hyperparameters before there is enough data to fit them.
KernelParams default_params(const SpaceSpec& space, const HyperparameterBounds& b, double noise) {
  KernelParams kp;
  kp.signal_variance = std::pow(std::clamp(1.0, b.sigma_lower, b.sigma_upper), 2);
  const Box cbox = space.controllable.bounding_box();
  const Box tbox = space.uncontrollable.bounding_box();
  Eigen::VectorXd lo(space.model_dim()), hi(space.model_dim());
  if (space.mode == CombineMode::kConcatenate) {
    lo << cbox.lower, tbox.lower;
    hi << cbox.upper, tbox.upper;
  } else {
    lo = cbox.lower;
    hi = cbox.upper;
  }
  kp.lengthscales = (0.2 * (hi - lo)).cwiseMax(1e-2).cwiseMax(b.length_lower).cwiseMin(b.length_upper);
  kp.noise_variance = noise;
  return kp;
}

class PhaseTimer {
 public:
  explicit PhaseTimer(bool enabled) : enabled_(enabled) {}
  void start() { t0_ = std::chrono::steady_clock::now(); }
  double stop() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace

RunRecord run_bo(const RunConfig& config, int run_id, std::uint64_t seed,
                 const ProblemSpec& problem, const RobustReference& reference,
                 const std::optional<KernelParams>& pretrained) {
  RunRecord rec;
  rec.run_id = run_id;
  rec.seed = seed;
  rec.problem = problem.name;
  rec.acquisition = config.acquisition;

  const SpaceSpec& space = problem.space;
  std::mt19937_64 design_rng(derive_seed(seed, kDesign));
  std::mt19937_64 noise_rng(derive_seed(seed, kNoise));

  HyperPolicy policy = problem.hyper_policy;
  if (config.hyper_policy == "fit") policy = HyperPolicy::kFit;
  if (config.hyper_policy == "fixed") policy = HyperPolicy::kFixed;
  std::optional<KernelParams> fixed;
  if (policy == HyperPolicy::kFixed) fixed = config.fixed_params ? config.fixed_params : problem.fixed_params;
  if (policy == HyperPolicy::kPretrain) fixed = pretrained;
  if (policy != HyperPolicy::kFit && !fixed) {
    rec.error = "fixed hyperparameters requested but none available";
    return rec;
  }
  if (fixed && fixed->dim() != space.model_dim()) {
    rec.error = "fixed hyperparameters have the wrong dimension";
    return rec;
  }

  try {
    Observations obs;
    const int m = config.initial_design.value_or(problem.initial_design);
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd x = space.controllable.sample(design_rng);
      const Eigen::VectorXd th = space.uncontrollable.sample(design_rng);
      obs.append(x, th, problem.evaluate_noisy(x, th, noise_rng));
    }

    PhaseTimer timer(config.timing);
    std::optional<KernelParams> last_fit;
    for (int t = 1; t <= config.iterations; ++t) {
      IterationRecord it;
      it.iteration = t;

      timer.start();
      const Dataset data = to_dataset(obs, space);
      KernelParams params;
      if (fixed) {
        params = *fixed;
      } else if (obs.size() < 2) {
        params = default_params(space, config.bounds, config.noise_variance);
      } else {
        HyperparameterOptions ho = config.hyper;
        ho.seed = derive_seed(seed, kHyper, t);
        params = fit_hyperparameters(data, config.bounds, config.noise_variance, ho).params;
      }
      const GpPosterior post = fit_posterior(data, params);
      it.t_fit_s = timer.stop();

      RobustOptions ropts = config.robust;
      ropts.seed = derive_seed(seed, kReport, t);
      AcqOptimOptions aopts = config.acq_opt;
      aopts.seed = derive_seed(seed, kAcq, t);

      if (config.acquisition == "res") {
        ResOptions ro = config.res;
        ro.robust.seed = derive_seed(seed, kSample, t);
        timer.start();
        auto chars = sample_characteristics(post, space, ro, derive_seed(seed, kSample, t + 1000003));
        it.t_sample_s = timer.stop();
        timer.start();
        const ResState state = build_res_state(post, obs, space, std::move(chars), ro);
        it.t_ep_s = timer.stop();
        timer.start();
        const SpacePoint next = maximize_acquisition(state, aopts);
        const ReportedOptimum rep = report_optimum(post, space, ropts);
        it.t_acqopt_s = timer.stop();
        it.x = next.x;
        it.theta = next.theta;
        it.x_star = rep.x;
        it.theta_star = rep.theta;
      } else if (config.acquisition == "random") {
        it.x = space.controllable.sample(design_rng);
        it.theta = space.uncontrollable.sample(design_rng);
        it.x_star = it.x;
        it.theta_star = it.theta;
      } else {
        BaselineConfig bc = config.baseline;
        bc.kind = baseline_kind_from_string(config.acquisition);
        timer.start();
        const SpacePoint next = baseline_select(bc, post, space, obs.y.minCoeff(),
                                                derive_seed(seed, kBaseline, t), aopts, ropts);
        it.t_acqopt_s = timer.stop();
        it.x = next.x;
        it.theta = next.theta;
        it.x_star = next.x;
        it.theta_star = next.theta;
      }

      it.y = problem.evaluate_noisy(it.x, it.theta, noise_rng);
      obs.append(it.x, it.theta, it.y);
      const RegretRecord rr =
          compute_regret(problem, it.x_star, it.theta_star, reference.f_star, t);
      it.robust_regret = rr.robust_regret;
      it.inference_regret = rr.inference_regret;
      rec.iterations.push_back(std::move(it));
    }
    rec.complete = true;
  } catch (const NumericalError& e) {
    rec.error = e.what();
    rec.numerical_failure = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

int worker_count_from_env() {
  const char* v = std::getenv("RESBO_WORKERS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("RESBO_WORKERS must be a positive integer");
  return static_cast<int>(std::min<long>(n, 256));
}

std::vector<RunRecord> run_experiment(const RunConfig& config, int workers) {
  config.validate();
  const std::vector<std::uint64_t> seeds = config.run_seeds();
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::path cache_dir = config.cache_dir;
  if (cache_dir.empty()) {
    const char* env = std::getenv("RESBO_CACHE_DIR");
    cache_dir = env && *env ? std::filesystem::path(env) : out_dir / "cache";
  }
  const int grid =
      config.reference_grid > 0 ? config.reference_grid : default_reference_grid(config.problem);
  const bool seeded = config.problem == "within_model";

  std::optional<ProblemSpec> shared;
  std::optional<RobustReference> shared_ref;
  std::optional<KernelParams> pretrained;
  if (!seeded) {
    shared = make_problem(config.problem);
    shared_ref = cached_reference(*shared, grid, cache_dir);
    const bool pretrain = shared->hyper_policy == HyperPolicy::kPretrain &&
                          config.hyper_policy == "auto";
    if (pretrain) pretrained = pretrain_hyperparameters(*shared, config.noise_variance, 0x5eed);
  }

  std::vector<RunRecord> records(seeds.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&]() {
    for (std::size_t r = next++; r < seeds.size(); r = next++) {
      try {
        if (seeded) {
          const ProblemSpec p = make_problem(config.problem, seeds[r]);
          const RobustReference ref = cached_reference(p, grid, cache_dir, seeds[r]);
          records[r] = run_bo(config, static_cast<int>(r), seeds[r], p, ref);
        } else {
          records[r] = run_bo(config, static_cast<int>(r), seeds[r], *shared, *shared_ref, pretrained);
        }
      } catch (const NumericalError& e) {
        records[r].run_id = static_cast<int>(r);
        records[r].seed = seeds[r];
        records[r].problem = config.problem;
        records[r].acquisition = config.acquisition;
        records[r].error = e.what();
        records[r].numerical_failure = true;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(seeds.size())));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  aggregate_and_plot(records, out_dir, config.timing);
  for (const RunRecord& r : records) {
    if (r.complete) continue;
    if (r.numerical_failure) throw NumericalError("run " + std::to_string(r.run_id) + ": " + r.error);
    throw std::runtime_error("run " + std::to_string(r.run_id) + ": " + r.error);
  }
  return records;
}

}  // namespace resbo
