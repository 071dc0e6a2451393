#pragma once

// Benchmark problems for robust BO and regret measures.
//
// Every problem lives on its search-space coordinates (Branin and Eggholder
// are rescaled to the unit square). `raw` is the formula value at those
// coordinates; `objective` applies the output standardization.

#include "resbo/gp.hpp"
#include "resbo/robust.hpp"
#include "resbo/space.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace resbo {

struct Standardization {
  double shift = 0.0;
  double scale = 1.0;
  double apply(double v) const { return (v - shift) / scale; }
};

enum class HyperPolicy {
  kFit,       // maximum likelihood every iteration
  kFixed,     // values in ProblemSpec::fixed_params
  kPretrain,  // fitted once on random points below pretrain_threshold
};

struct ProblemSpec {
  std::string name;
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)> raw;
  SpaceSpec space;
  Standardization standardization;
  double noise_std = std::sqrt(0.001);
  /// Known robust optimum value in objective units, if any.
  std::optional<double> true_robust_value;
  std::string reference_method;

  int initial_design = 1;
  HyperPolicy hyper_policy = HyperPolicy::kFit;
  std::optional<KernelParams> fixed_params;
  int pretrain_points = 500;
  double pretrain_threshold = 15.0;  // in raw units

  double objective(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
    return standardization.apply(raw(x, theta));
  }
  double evaluate_noisy(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                        std::mt19937_64& rng) const;
  MinMaxObjective as_minmax() const;
};

/// Probes `count` uniform points of the space and returns the affine map to
/// zero mean and unit standard deviation.
Standardization estimate_standardization(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& raw,
    const SpaceSpec& space, int count, std::uint64_t seed);

ProblemSpec make_branin();
ProblemSpec make_sinus_linear();
ProblemSpec make_eggholder();
ProblemSpec make_hartmann3d();
ProblemSpec make_synthetic_polynomial();
/// Posterior mean of a GP fitted to 1000 prior draws on the unit square.
ProblemSpec make_within_model_problem(std::uint64_t seed);

/// Problems by CLI name: branin, sinus_linear, eggholder, hartmann3d,
/// synthetic_polynomial, within_model (seeded). Throws std::invalid_argument.
ProblemSpec make_problem(const std::string& name, std::uint64_t seed = 0);
std::vector<std::string> problem_names();

struct RobustReference {
  double f_star = 0.0;
  Eigen::VectorXd x_star;
  Eigen::VectorXd theta_star;
  int grid_per_dim = 0;
  std::string method = "grid brute force";
};

/// g(x) = max_theta f(x, theta): enumeration over a finite set, a dense grid
/// with local refinement over a box.
InnerResult true_worst_case(const ProblemSpec& problem, const Eigen::VectorXd& x,
                            int grid_per_dim = 400);

/// Brute-force robust optimum: continuous factors on a grid_per_dim^d grid,
/// finite factors enumerated.
RobustReference true_robust_reference(const ProblemSpec& problem, int grid_per_dim);

struct RegretRecord {
  int iteration = 0;
  Eigen::VectorXd x_star;
  Eigen::VectorXd theta_star;
  std::optional<double> robust_regret;
  std::optional<double> inference_regret;
};

/// Robust regret |f(x*, h(x*)) - f*| for finite Theta. For a box Theta the
/// inference regret |f(x*, theta*) - f*| is reported, together with the robust
/// regret from a dense-grid worst case.
RegretRecord compute_regret(const ProblemSpec& problem, const Eigen::VectorXd& x_star,
                            const Eigen::VectorXd& theta_star, double reference_f_star,
                            int iteration = 0);

}  // namespace resbo
