#pragma once

// Expectation propagation for a multivariate Gaussian restricted to an
// axis-aligned box. Each finite coordinate constraint gets a Gaussian site;
// sites are refined with univariate truncated moments.

#include "resbo/trunc_gauss.hpp"

#include <Eigen/Core>

namespace resbo {

struct EpOptions {
  double damping = 0.8;  // weight of the new site value from the second sweep on
  double tol = 1e-6;     // on relative site-parameter change per sweep
  int max_iter = 100;    // sweeps
};

struct EpResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  bool converged = false;
  int iterations = 0;
  double log_mass = 0.0;
  /// Site natural parameters: precision and precision-times-mean. A site with
  /// both zero leaves its coordinate unconstrained.
  Eigen::VectorXd site_precision;
  Eigen::VectorXd site_shift;
  int failed_sites = 0;
};

/// Approximates N(prior_mean, prior_cov) restricted to `bounds` by a Gaussian.
EpResult ep_box_condition(const Eigen::VectorXd& prior_mean, const Eigen::MatrixXd& prior_cov,
                          const BoxBounds& bounds, const EpOptions& opts = {});

struct ResBounds {
  BoxBounds box;
  int inconsistencies = 0;  // coordinates whose lower bound had to be relaxed
};

/// Box for the stacked vector [f(z_1..z_t), f(x_1, h(x_1))..f(x_t, h(x_t))]:
/// the first t entries lie below g(x_i), the last t in [f_star, g(x_i)].
/// `literal_zero_lower` bounds the first t entries below by 0 instead of -inf.
ResBounds build_res_bounds(const Eigen::VectorXd& max_values_at_train, double f_star,
                           bool literal_zero_lower = false);

}  // namespace resbo
