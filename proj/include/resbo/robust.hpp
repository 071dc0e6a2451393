#pragma once

// Min-max machinery: the argmax function h(x) = argmax_theta f(x, theta), the
// maximizing function g(x) = f(x, h(x)) and the robust optimum
// f* = min_x g(x), over continuous boxes or finite sets.

#include "resbo/gp.hpp"
#include "resbo/space.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>

namespace resbo {

/// f(x, theta), optionally with the gradient w.r.t. theta.
struct MinMaxObjective {
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)> value;
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                       Eigen::VectorXd& grad_theta)>
      value_grad;  // may be empty
};

/// f defined on GP model inputs, optionally with its gradient.
struct ModelFunction {
  std::function<double(const Eigen::VectorXd& z)> value;
  std::function<double(const Eigen::VectorXd& z, Eigen::VectorXd& grad)> value_grad;
};

MinMaxObjective compose(const ModelFunction& f, const SpaceSpec& space);

struct RobustOptions {
  int outer_restarts = 10;   // Nelder-Mead restarts over x
  int inner_restarts = 5;    // quasi-Newton restarts over theta
  int inner_max_iter = 100;
  int outer_max_evals = 300;
  int outer_screen = 100;    // random points screened for outer starts
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct InnerResult {
  Eigen::VectorXd theta;
  double value = 0.0;
};

/// max over theta of f(x, theta). Discrete sets are enumerated (ties go to the
/// lowest index); boxes use multi-start projected BFGS when a gradient is
/// available and Nelder-Mead otherwise. Start points depend only on the seed,
/// so the result is a deterministic function of x.
InnerResult inner_max(const MinMaxObjective& f, const Eigen::VectorXd& x, const SpaceSpec& space,
                      const RobustOptions& opts = {});

struct RobustCharacteristics {
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x)> argmax_fn;  // h
  std::function<double(const Eigen::VectorXd& x)> max_fn;              // g
  double robust_value = 0.0;                                           // f*
  Eigen::VectorXd robust_x;
  Eigen::VectorXd robust_theta;
};

/// min over x of max over theta of f. Discrete x is enumerated, continuous x
/// uses multi-start Nelder-Mead seeded from the best screened points.
RobustCharacteristics robust_optimum(const MinMaxObjective& f, const SpaceSpec& space,
                                     const RobustOptions& opts = {});

struct ReportedOptimum {
  Eigen::VectorXd x;
  Eigen::VectorXd theta;
  double value = 0.0;
};

/// Robust optimum of the posterior mean.
ReportedOptimum report_optimum(const GpPosterior& posterior, const SpaceSpec& space,
                               const RobustOptions& opts = {});

/// Posterior mean as a ModelFunction (with analytic gradient).
ModelFunction posterior_mean_function(const GpPosterior& posterior);

}  // namespace resbo
