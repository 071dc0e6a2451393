#include "resbo/ep.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace resbo {

namespace {

// Posterior covariance (K^{-1} + T)^{-1} = K - K S^{1/2} B^{-1} S^{1/2} K with
// B = I + S^{1/2} K S^{1/2}; also returns log|B|.
Eigen::MatrixXd site_posterior_cov(const Eigen::MatrixXd& k, const Eigen::VectorXd& tau,
                                   double* log_det_b) {
  const Eigen::Index n = k.rows();
  const Eigen::VectorXd sq = tau.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd b = sq.asDiagonal() * k * sq.asDiagonal();
  b.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) throw NumericalError("ep: B matrix not positive definite");
  if (log_det_b) *log_det_b = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const Eigen::MatrixXd v = llt.matrixL().solve(sq.asDiagonal() * k);
  Eigen::MatrixXd sigma = k - v.transpose() * v;
  (void)n;
  return 0.5 * (sigma + sigma.transpose());
}

double relative_change(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

EpResult ep_box_condition(const Eigen::VectorXd& prior_mean, const Eigen::MatrixXd& prior_cov,
                          const BoxBounds& bounds, const EpOptions& opts) {
  const Eigen::Index n = prior_mean.size();
  if (prior_cov.rows() != n || prior_cov.cols() != n || bounds.size() != n)
    throw std::invalid_argument("ep_box_condition: dimension mismatch");

  Eigen::MatrixXd k = 0.5 * (prior_cov + prior_cov.transpose());
  const double jitter = 1e-10 * std::max(1e-300, k.diagonal().maxCoeff());
  k.diagonal().array() += jitter;

  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::isfinite(bounds.lower[i]) || std::isfinite(bounds.upper[i])) active.push_back(i);

  EpResult res;
  res.site_precision = Eigen::VectorXd::Zero(n);
  res.site_shift = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& tau = res.site_precision;
  Eigen::VectorXd& nu = res.site_shift;
  Eigen::MatrixXd sigma = k;
  Eigen::VectorXd mu = prior_mean;

  for (int sweep = 1; sweep <= std::max(1, opts.max_iter); ++sweep) {
    res.iterations = sweep;
    double max_change = 0.0;
    int failed = 0;
    for (const Eigen::Index i : active) {
      const double s_ii = sigma(i, i);
      const double tau_cav = 1.0 / s_ii - tau[i];
      const double nu_cav = mu[i] / s_ii - nu[i];
      if (!(tau_cav > 0.0) || !std::isfinite(tau_cav)) {
        ++failed;
        continue;
      }
      const Truncated1d t =
          truncated_moments_1d(nu_cav / tau_cav, 1.0 / tau_cav, bounds.lower[i], bounds.upper[i]);
      if (t.underflow || !(t.var > 0.0)) {
        ++failed;
        continue;
      }
      double tau_new = std::max(0.0, 1.0 / t.var - tau_cav);
      double nu_new = t.mean / t.var - nu_cav;
      if (sweep > 1) {
        tau_new = opts.damping * tau_new + (1.0 - opts.damping) * tau[i];
        nu_new = opts.damping * nu_new + (1.0 - opts.damping) * nu[i];
      }
      max_change = std::max({max_change, relative_change(tau_new, tau[i]),
                             relative_change(nu_new, nu[i])});
      const double dtau = tau_new - tau[i];
      const Eigen::VectorXd si = sigma.col(i);
      sigma.noalias() -= (dtau / (1.0 + dtau * s_ii)) * si * si.transpose();
      tau[i] = tau_new;
      nu[i] = nu_new;
      mu = prior_mean + sigma * (nu - tau.cwiseProduct(prior_mean));
    }
    sigma = site_posterior_cov(k, tau, nullptr);
    mu = prior_mean + sigma * (nu - tau.cwiseProduct(prior_mean));
    res.failed_sites = failed;
    if (max_change < opts.tol) {
      res.converged = failed == 0;
      break;
    }
  }

  double log_det_b = 0.0;
  sigma = site_posterior_cov(k, tau, &log_det_b);
  mu = prior_mean + sigma * (nu - tau.cwiseProduct(prior_mean));

  // log Z = sum_i log s_i + log int N(f; m, K) exp(-f^T T f / 2 + nu^T f) df
  double log_z = 0.0;
  for (const Eigen::Index i : active) {
    const double tau_cav = 1.0 / sigma(i, i) - tau[i];
    const double nu_cav = mu[i] / sigma(i, i) - nu[i];
    if (!(tau_cav > 0.0)) continue;
    const Truncated1d t =
        truncated_moments_1d(nu_cav / tau_cav, 1.0 / tau_cav, bounds.lower[i], bounds.upper[i]);
    const double a = tau_cav;
    const double log_site_integral = 0.5 * std::log(a / (a + tau[i])) +
                                     0.5 * (nu_cav + nu[i]) * (nu_cav + nu[i]) / (a + tau[i]) -
                                     0.5 * nu_cav * nu_cav / a;
    log_z += std::log(std::max(t.mass, 1e-300)) - log_site_integral;
  }
  const Eigen::VectorXd b = nu - tau.cwiseProduct(prior_mean);
  log_z += -0.5 * prior_mean.dot(tau.cwiseProduct(prior_mean)) + nu.dot(prior_mean) -
           0.5 * log_det_b + 0.5 * b.dot(sigma * b);

  res.mean = mu;
  res.covariance = sigma;
  res.log_mass = log_z;
  return res;
}

ResBounds build_res_bounds(const Eigen::VectorXd& max_values_at_train, double f_star,
                           bool literal_zero_lower) {
  const Eigen::Index t = max_values_at_train.size();
  if (t < 1) throw std::invalid_argument("build_res_bounds: need at least one training point");
  ResBounds out;
  Eigen::VectorXd lower(2 * t), upper(2 * t);
  for (Eigen::Index i = 0; i < t; ++i) {
    const double g = max_values_at_train[i];
    upper[i] = g;
    upper[t + i] = g;
    lower[i] = -kInf;
    if (literal_zero_lower) {
      if (g > 0.0) {
        lower[i] = 0.0;
      } else {
        ++out.inconsistencies;
      }
    }
    if (g > f_star) {
      lower[t + i] = f_star;
    } else {
      lower[t + i] = -kInf;
      ++out.inconsistencies;
    }
  }
  out.box = BoxBounds(std::move(lower), std::move(upper));
  return out;
}

}  // namespace resbo
