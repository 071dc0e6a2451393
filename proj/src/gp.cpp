#include "resbo/gp.hpp"
#include "resbo/optimize.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace resbo {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y)
    : inputs(std::move(x)), observations(std::move(y)) {
  if (inputs.rows() != observations.size())
    throw std::invalid_argument("Dataset: inputs and observations differ in length");
}

namespace {

constexpr double kVarianceSlack = 1e-10;

}  // namespace

GpPosterior fit_posterior(const Dataset& dataset, const KernelParams& params) {
  params.validate();
  if (dataset.size() > 0 && dataset.dim() != params.dim())
    throw std::invalid_argument("fit_posterior: input dimension does not match lengthscales");
  GpPosterior post;
  post.params_ = params;
  post.data_ = dataset;
  const Eigen::Index n = dataset.size();
  if (n == 0) return post;

  Eigen::MatrixXd k = kernel_matrix(dataset.inputs, dataset.inputs, params);
  k.diagonal().array() += params.noise_variance;
  for (double jitter = 1e-10 * params.signal_variance; jitter <= 1e-4 * params.signal_variance * 1.0001;
       jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() == Eigen::Success) {
      post.chol_ = llt.matrixL();
      post.alpha_ = llt.solve(dataset.observations);
      post.jitter_ = jitter;
      return post;
    }
  }
  throw NumericalError("fit_posterior: kernel matrix not positive definite with jitter up to " +
                       std::to_string(1e-4 * params.signal_variance));
}

double GpPosterior::clamp_variance(double v) const {
  if (v < -kVarianceSlack * std::max(1.0, params_.signal_variance)) {
    throw NumericalError("GpPosterior: predictive variance " + std::to_string(v) +
                         " is significantly negative");
  }
  return std::max(v, 0.0);
}

Eigen::MatrixXd GpPosterior::solve_cross(const Eigen::MatrixXd& b) const {
  const Eigen::MatrixXd kxb = kernel_matrix(data_.inputs, b, params_);
  const auto l = chol_.triangularView<Eigen::Lower>();
  Eigen::MatrixXd tmp = l.solve(kxb);
  return l.transpose().solve(tmp);
}

Prediction GpPosterior::predict(const Eigen::MatrixXd& points) const {
  Prediction out;
  out.covariance = kernel_matrix(points, points, params_);
  if (data_.size() == 0) {
    out.mean = Eigen::VectorXd::Zero(points.rows());
  } else {
    const Eigen::MatrixXd kxp = kernel_matrix(data_.inputs, points, params_);
    out.mean = kxp.transpose() * alpha_;
    const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(kxp);
    out.covariance.noalias() -= v.transpose() * v;
  }
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out.covariance(i, i) = clamp_variance(out.covariance(i, i));
  return out;
}

void GpPosterior::predict_marginal(const Eigen::MatrixXd& points, Eigen::VectorXd& mean,
                                   Eigen::VectorXd& variance) const {
  variance = Eigen::VectorXd::Constant(points.rows(), params_.signal_variance);
  if (data_.size() == 0) {
    mean = Eigen::VectorXd::Zero(points.rows());
    return;
  }
  const Eigen::MatrixXd kxp = kernel_matrix(data_.inputs, points, params_);
  mean = kxp.transpose() * alpha_;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(kxp);
  variance -= v.colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < variance.size(); ++i) variance[i] = clamp_variance(variance[i]);
}

double GpPosterior::predict_mean(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (data_.size() == 0) return 0.0;
  double m = 0.0;
  for (Eigen::Index i = 0; i < data_.size(); ++i)
    m += kernel_eval(data_.inputs.row(i).transpose(), z, params_) * alpha_[i];
  return m;
}

double GpPosterior::predict_variance(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (data_.size() == 0) return params_.signal_variance;
  Eigen::VectorXd k(data_.size());
  for (Eigen::Index i = 0; i < data_.size(); ++i)
    k[i] = kernel_eval(data_.inputs.row(i).transpose(), z, params_);
  chol_.triangularView<Eigen::Lower>().solveInPlace(k);
  return clamp_variance(params_.signal_variance - k.squaredNorm());
}

PointPrediction GpPosterior::predict_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  PointPrediction out;
  const Eigen::Index d = z.size();
  out.mean_grad = Eigen::VectorXd::Zero(d);
  out.variance_grad = Eigen::VectorXd::Zero(d);
  out.variance = params_.signal_variance;
  if (data_.size() == 0) return out;

  const Eigen::Index n = data_.size();
  const Eigen::ArrayXd inv_l2 = params_.lengthscales.array().square().inverse();
  Eigen::VectorXd k(n);
  Eigen::MatrixXd dk(n, d);  // d k(z, x_i) / dz
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = data_.inputs.row(i).transpose();
    k[i] = kernel_eval(xi, z, params_);
    dk.row(i) = (-(z - xi).array() * inv_l2 * k[i]).matrix().transpose();
  }
  out.mean = k.dot(alpha_);
  out.mean_grad = dk.transpose() * alpha_;
  const auto l = chol_.triangularView<Eigen::Lower>();
  const Eigen::VectorXd v = l.solve(k);
  const Eigen::VectorXd kinv_k = l.transpose().solve(v);
  out.variance = clamp_variance(params_.signal_variance - v.squaredNorm());
  out.variance_grad = -2.0 * dk.transpose() * kinv_k;
  return out;
}

Eigen::MatrixXd GpPosterior::cross_covariance(const Eigen::MatrixXd& a,
                                              const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd c = kernel_matrix(a, b, params_);
  if (data_.size() == 0) return c;
  const auto l = chol_.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd va = l.solve(kernel_matrix(data_.inputs, a, params_));
  const Eigen::MatrixXd vb = l.solve(kernel_matrix(data_.inputs, b, params_));
  c.noalias() -= va.transpose() * vb;
  return c;
}

double GpPosterior::log_marginal_likelihood() const {
  const Eigen::Index n = data_.size();
  if (n == 0) return 0.0;
  return -0.5 * data_.observations.dot(alpha_) - chol_.diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood_dense(const Dataset& dataset, const KernelParams& params) {
  const Eigen::Index n = dataset.size();
  Eigen::MatrixXd k = kernel_matrix(dataset.inputs, dataset.inputs, params);
  k.diagonal().array() += params.noise_variance;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  const double quad = dataset.observations.dot(lu.solve(dataset.observations));
  const double logdet = std::log(std::abs(lu.determinant()));
  return -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

namespace {

// Negative log marginal likelihood and gradient in log-parameter space
// [log sigma_v, log l_1, ..., log l_d].
double neg_lml(const Dataset& data, double noise, const Eigen::VectorXd& theta,
               Eigen::VectorXd& grad) {
  const Eigen::Index d = data.dim();
  const Eigen::Index n = data.size();
  KernelParams p;
  p.signal_variance = std::exp(2.0 * theta[0]);
  p.lengthscales = theta.tail(d).array().exp();
  p.noise_variance = noise;
  grad = Eigen::VectorXd::Zero(theta.size());

  const Eigen::MatrixXd kf = kernel_matrix(data.inputs, data.inputs, p);
  Eigen::MatrixXd k = kf;
  k.diagonal().array() += noise + 1e-10 * p.signal_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(data.observations);
  const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;

  const Eigen::MatrixXd l = llt.matrixL();
  const double nll = 0.5 * data.observations.dot(alpha) + l.diagonal().array().log().sum() +
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // d K / d log sigma_v = 2 K_f
  grad[0] = -0.5 * (w.cwiseProduct(2.0 * kf)).sum();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double lj2 = p.lengthscales[j] * p.lengthscales[j];
    Eigen::MatrixXd dk(n, n);
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index a = 0; a < n; ++a) {
        const double diff = data.inputs(a, j) - data.inputs(b, j);
        dk(a, b) = kf(a, b) * diff * diff / lj2;
      }
    grad[1 + j] = -0.5 * (w.cwiseProduct(dk)).sum();
  }
  return nll;
}

}  // namespace

HyperparameterFit fit_hyperparameters(const Dataset& dataset, const HyperparameterBounds& bounds,
                                      double fixed_noise, const HyperparameterOptions& opts) {
  if (dataset.size() < 2) throw std::invalid_argument("fit_hyperparameters: need >= 2 points");
  if (!(bounds.sigma_lower > 0.0 && bounds.length_lower > 0.0 &&
        bounds.sigma_lower <= bounds.sigma_upper && bounds.length_lower <= bounds.length_upper))
    throw std::invalid_argument("fit_hyperparameters: invalid bounds");
  const Eigen::Index d = dataset.dim();
  Box box;
  box.lower.resize(d + 1);
  box.upper.resize(d + 1);
  box.lower[0] = std::log(bounds.sigma_lower);
  box.upper[0] = std::log(bounds.sigma_upper);
  box.lower.tail(d).setConstant(std::log(bounds.length_lower));
  box.upper.tail(d).setConstant(std::log(bounds.length_upper));

  auto objective = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
    return neg_lml(dataset, fixed_noise, th, g);
  };

  std::mt19937_64 rng(opts.seed);
  HyperparameterFit best;
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  BfgsOptions bfgs;
  bfgs.max_iterations = opts.max_iterations;
  bfgs.grad_tol = 1e-5;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    // First restart from a data-driven guess, the rest uniform in log space.
    Eigen::VectorXd start = r == 0 ? box.center() : box.sample(rng);
    if (r == 0) {
      const double ystd = std::sqrt(std::max(
          1e-12, (dataset.observations.array() - dataset.observations.mean()).square().mean()));
      start[0] = std::log(std::max(ystd, 1e-3));
      for (Eigen::Index j = 0; j < d; ++j) {
        const double range = dataset.inputs.col(j).maxCoeff() - dataset.inputs.col(j).minCoeff();
        start[1 + j] = std::log(std::max(0.2 * range, 1e-2));
      }
      start = box.clip(start);
    }
    const OptimResult res = minimize_bfgs_box(objective, start, box, bfgs);
    if (std::isfinite(res.value) && res.value < best_value) {
      best_value = res.value;
      best_theta = res.x;
    }
  }

  best.params.noise_variance = fixed_noise;
  if (!std::isfinite(best_value)) {
    best.warning = true;
    best_theta = box.center();
  }
  best.params.signal_variance = std::exp(2.0 * best_theta[0]);
  best.params.lengthscales = best_theta.tail(d).array().exp();
  best.params.signal_variance = std::clamp(best.params.signal_variance,
                                           bounds.sigma_lower * bounds.sigma_lower,
                                           bounds.sigma_upper * bounds.sigma_upper);
  best.params.lengthscales =
      best.params.lengthscales.cwiseMax(bounds.length_lower).cwiseMin(bounds.length_upper);
  // Point intervals are returned exactly.
  if (bounds.sigma_lower == bounds.sigma_upper)
    best.params.signal_variance = bounds.sigma_lower * bounds.sigma_lower;
  if (bounds.length_lower == bounds.length_upper)
    best.params.lengthscales.setConstant(bounds.length_lower);
  best.log_likelihood = best.warning ? -std::numeric_limits<double>::infinity() : -best_value;
  return best;
}

}  // namespace resbo
