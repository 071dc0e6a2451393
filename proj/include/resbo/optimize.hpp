#pragma once

// Small bounded local optimizers used throughout: a projected BFGS
// quasi-Newton method for smooth objectives with gradients and a
// Nelder-Mead simplex method for everything else. Both minimize.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace resbo {

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return lower.size(); }
  Eigen::VectorXd clip(const Eigen::VectorXd& p) const;
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd sample(std::mt19937_64& rng) const;
};

/// Objective with gradient: returns f(x) and writes df/dx into grad.
using GradObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;
using Objective = std::function<double(const Eigen::VectorXd& x)>;

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

struct BfgsOptions {
  int max_iterations = 100;
  double grad_tol = 1e-6;
  double step_tol = 1e-10;
};

OptimResult minimize_bfgs_box(const GradObjective& f, const Eigen::VectorXd& x0, const Box& box,
                              const BfgsOptions& opts = {});

struct NelderMeadOptions {
  int max_evaluations = 400;
  double tol = 1e-6;           // on simplex size and value spread
  double initial_step = 0.1;   // fraction of the box width
};

OptimResult minimize_nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Box& box,
                                 const NelderMeadOptions& opts = {});

/// Screens `pool` random points (plus the box center) and returns the
/// `count` best as starting points, best first. The pool is drawn from a
/// generator seeded with `seed`, so for a fixed pool size the first k starts
/// are a prefix of the first k+1 starts.
std::vector<Eigen::VectorXd> screened_starts(const Objective& f, const Box& box, int count,
                                             int pool, std::uint64_t seed);

}  // namespace resbo
