#pragma once

// Maximization of an acquisition function over X x Theta. Continuous parts
// use multi-start Nelder-Mead, finite sets are enumerated.

#include "resbo/space.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>

namespace resbo {

struct SpaceFunction {
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)> value;
  /// Optional: values at one x for every row of `thetas`. Lets callers share
  /// per-x work across a finite theta set.
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::MatrixXd& thetas)> row;

  Eigen::VectorXd eval_row(const Eigen::VectorXd& x, const Eigen::MatrixXd& thetas) const;
};

struct AcqOptimOptions {
  int restarts = 10;  // N_R
  int screen = 200;   // random points screened for starting points
  int max_evals = 300;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct SpacePoint {
  Eigen::VectorXd x;
  Eigen::VectorXd theta;
  double value = 0.0;
};

/// Best-found maximizer. Ties on finite sets go to the lowest index
/// (x-major, then theta).
SpacePoint maximize_over_space(const SpaceFunction& f, const SpaceSpec& space,
                               const AcqOptimOptions& opts = {});

}  // namespace resbo
