#pragma once

// Exact GP regression with a zero prior mean and an ARD squared-exponential
// kernel. Points are stored as rows of Eigen matrices.

#include "resbo/trunc_gauss.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstdint>
#include <optional>

namespace resbo {

struct KernelParams {
  double signal_variance = 1.0;
  Eigen::VectorXd lengthscales;
  double noise_variance = 0.0;

  Eigen::Index dim() const { return lengthscales.size(); }
  /// Throws std::invalid_argument unless all entries are in range.
  void validate() const;
};

double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& p1,
                   const Eigen::Ref<const Eigen::VectorXd>& p2, const KernelParams& params);

/// d k(p1, p2) / d lengthscale_d for every dimension.
Eigen::VectorXd kernel_grad_lengthscales(const Eigen::Ref<const Eigen::VectorXd>& p1,
                                         const Eigen::Ref<const Eigen::VectorXd>& p2,
                                         const KernelParams& params);

/// Noise-free kernel matrix between the rows of a and b.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelParams& params);

struct Dataset {
  Eigen::MatrixXd inputs;        // n x d
  Eigen::VectorXd observations;  // n

  Dataset() = default;
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd y);
  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Mean, variance and their gradients at a single point.
struct PointPrediction {
  double mean = 0.0;
  double variance = 0.0;
  Eigen::VectorXd mean_grad;
  Eigen::VectorXd variance_grad;
};

/// Immutable posterior. Construct via fit_posterior.
class GpPosterior {
 public:
  const KernelParams& params() const { return params_; }
  const Dataset& dataset() const { return data_; }
  /// Lower-triangular factor of K + (noise + jitter) I.
  const Eigen::MatrixXd& chol_factor() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }

  Prediction predict(const Eigen::MatrixXd& points) const;
  /// Means and clamped marginal variances only.
  void predict_marginal(const Eigen::MatrixXd& points, Eigen::VectorXd& mean,
                        Eigen::VectorXd& variance) const;
  double predict_mean(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  double predict_variance(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  PointPrediction predict_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  /// Posterior covariance between the rows of a and b.
  Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;
  /// (K + noise I)^{-1} k(train, b).
  Eigen::MatrixXd solve_cross(const Eigen::MatrixXd& b) const;

  double log_marginal_likelihood() const;

 private:
  friend GpPosterior fit_posterior(const Dataset& dataset, const KernelParams& params);

  KernelParams params_;
  Dataset data_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;

  double clamp_variance(double v) const;
};

/// Factorizes K + noise I with jitter escalation from 1e-10 to 1e-4 times the
/// signal variance. Throws NumericalError when every attempt fails.
GpPosterior fit_posterior(const Dataset& dataset, const KernelParams& params);

/// Log marginal likelihood computed directly with a dense LU decomposition;
/// used to cross-check the factorized value.
double log_marginal_likelihood_dense(const Dataset& dataset, const KernelParams& params);

struct HyperparameterBounds {
  double sigma_lower = 1e-5;  // bounds on sigma_v, not its square
  double sigma_upper = 10.0;
  double length_lower = 1e-5;
  double length_upper = 10.0;
};

struct HyperparameterOptions {
  int restarts = 5;
  int max_iterations = 200;
  std::uint64_t seed = 0;
};

struct HyperparameterFit {
  KernelParams params;
  double log_likelihood = 0.0;
  bool warning = false;  // every restart failed; params are the bound midpoint
};

/// Multi-restart bounded quasi-Newton maximization of the log marginal
/// likelihood over log sigma_v and log lengthscales, noise held fixed.
HyperparameterFit fit_hyperparameters(const Dataset& dataset, const HyperparameterBounds& bounds,
                                      double fixed_noise, const HyperparameterOptions& opts = {});

}  // namespace resbo
