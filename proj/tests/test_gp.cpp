#include "resbo/gp.hpp"
#include "resbo/ssgp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace resbo;

namespace {

KernelParams se(double sv, std::initializer_list<double> ls, double noise = 0.0) {
  KernelParams p;
  p.signal_variance = sv;
  p.lengthscales = Eigen::VectorXd(static_cast<Eigen::Index>(ls.size()));
  int i = 0;
  for (double l : ls) p.lengthscales[i++] = l;
  p.noise_variance = noise;
  return p;
}

Dataset random_dataset(int n, int d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = u(rng);
    y[i] = scale * std::sin(6.0 * x(i, 0)) + (d > 1 ? x(i, 1) : 0.0);
  }
  return {x, y};
}

}  // namespace

TEST(Kernel, Values) {
  Eigen::Vector2d z(0.3, 0.4);
  EXPECT_DOUBLE_EQ(kernel_eval(z, z, se(1.0, {0.2, 0.2})), 1.0);
  EXPECT_DOUBLE_EQ(kernel_eval(z, z, se(2.5, {0.2, 0.2})), 2.5);
  EXPECT_NEAR(kernel_eval(Eigen::Vector2d(0, 0), Eigen::Vector2d(0.1, 0), se(1.0, {0.1, 0.1})),
              0.60653, 1e-5);
}

TEST(Kernel, DimensionMismatchThrows) {
  EXPECT_THROW(kernel_eval(Eigen::Vector2d(0, 0), Eigen::Vector3d(0, 0, 0), se(1.0, {0.1, 0.1})),
               std::invalid_argument);
  EXPECT_THROW(se(-1.0, {0.1}).validate(), std::invalid_argument);
}

TEST(Kernel, LengthscaleGradientFiniteDifference) {
  const Eigen::Vector3d a(0.1, 0.5, 0.9), b(0.4, 0.2, 0.7);
  KernelParams p = se(1.7, {0.3, 0.5, 0.2});
  const Eigen::VectorXd g = kernel_grad_lengthscales(a, b, p);
  for (int d = 0; d < 3; ++d) {
    KernelParams hi = p, lo = p;
    const double h = 1e-6;
    hi.lengthscales[d] += h;
    lo.lengthscales[d] -= h;
    EXPECT_NEAR(g[d], (kernel_eval(a, b, hi) - kernel_eval(a, b, lo)) / (2 * h), 1e-7);
  }
}

TEST(Posterior, SinglePointZeroObservation) {
  Eigen::MatrixXd x(1, 1);
  x << 0.5;
  auto post = fit_posterior(Dataset(x, Eigen::VectorXd::Zero(1)), se(1.0, {0.2}, 0.01));
  EXPECT_DOUBLE_EQ(post.alpha()[0], 0.0);
}

TEST(Posterior, DuplicateInputsWithNoise) {
  Eigen::MatrixXd x(2, 1);
  x << 0.5, 0.5;
  EXPECT_NO_THROW(fit_posterior(Dataset(x, Eigen::Vector2d(1.0, 1.1)), se(1.0, {0.2}, 1e-3)));
  // Noise-free duplicates need jitter but still factorize.
  auto post = fit_posterior(Dataset(x, Eigen::Vector2d(1.0, 1.0)), se(1.0, {0.2}, 0.0));
  EXPECT_GT(post.jitter(), 0.0);
}

TEST(Posterior, InterpolatesTrainingData) {
  auto data = random_dataset(10, 2, 3);
  auto post = fit_posterior(data, se(1.0, {0.3, 0.3}, 1e-12));
  for (int i = 0; i < data.size(); ++i)
    EXPECT_NEAR(post.predict_mean(data.inputs.row(i).transpose()), data.observations[i], 1e-4);
}

TEST(Posterior, NoisyFitWithinThreeSigma) {
  auto data = random_dataset(30, 2, 5);
  const double noise = 0.01;
  auto post = fit_posterior(data, se(1.0, {0.3, 0.3}, noise));
  Eigen::VectorXd m, v;
  post.predict_marginal(data.inputs, m, v);
  EXPECT_LE((m - data.observations).cwiseAbs().maxCoeff(), 3.0 * std::sqrt(noise));
}

TEST(Posterior, PriorAndFarAway) {
  Eigen::MatrixXd empty(0, 2);
  auto prior = fit_posterior(Dataset(empty, Eigen::VectorXd(0)), se(1.3, {0.2, 0.2}, 1e-3));
  Eigen::MatrixXd q(3, 2);
  q << 0, 0, 0.5, 0.5, 1, 0.2;
  auto pr = prior.predict(q);
  EXPECT_NEAR(pr.mean.norm(), 0.0, 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(pr.covariance(i, i), 1.3, 1e-12);

  auto data = random_dataset(10, 2, 9);
  auto post = fit_posterior(data, se(1.3, {0.05, 0.05}, 1e-3));
  EXPECT_NEAR(post.predict_variance(Eigen::Vector2d(3.0, 3.0)), 1.3, 1e-6);
}

TEST(Posterior, JointMatchesMarginal) {
  auto data = random_dataset(15, 2, 4);
  auto post = fit_posterior(data, se(1.0, {0.3, 0.4}, 1e-3));
  Eigen::MatrixXd q(2, 2);
  q << 0.2, 0.7, 0.8, 0.1;
  auto joint = post.predict(q);
  for (int i = 0; i < 2; ++i) {
    auto single = post.predict(q.row(i));
    EXPECT_NEAR(joint.covariance(i, i), single.covariance(0, 0), 1e-10);
    EXPECT_NEAR(joint.mean[i], single.mean[0], 1e-12);
  }
  EXPECT_NEAR((joint.covariance - post.cross_covariance(q, q)).norm(), 0.0, 1e-12);
}

TEST(Posterior, PredictionGradientFiniteDifference) {
  auto data = random_dataset(12, 2, 6);
  auto post = fit_posterior(data, se(0.8, {0.25, 0.35}, 1e-3));
  const Eigen::Vector2d z(0.41, 0.63);
  auto p = post.predict_with_gradient(z);
  for (int d = 0; d < 2; ++d) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e[d] = 1e-6;
    EXPECT_NEAR(p.mean_grad[d], (post.predict_mean(z + e) - post.predict_mean(z - e)) / 2e-6, 1e-6);
    EXPECT_NEAR(p.variance_grad[d],
                (post.predict_variance(z + e) - post.predict_variance(z - e)) / 2e-6, 1e-6);
  }
}

TEST(Posterior, LikelihoodMatchesDenseOracle) {
  auto data = random_dataset(20, 3, 8);
  auto p = se(1.4, {0.3, 0.5, 0.7}, 0.02);
  EXPECT_NEAR(fit_posterior(data, p).log_marginal_likelihood(),
              log_marginal_likelihood_dense(data, p), 1e-6);
}

TEST(Hyperparameters, RecoversLengthscaleFromPriorDraw) {
  // Draw f ~ GP(0, k) at 200 points via the exact prior covariance.
  const int n = 200;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) x.row(i) << u(rng), u(rng);
  const auto truth = se(1.0, {0.1, 0.1});
  Eigen::MatrixXd k = kernel_matrix(x, x, truth);
  k.diagonal().array() += 1e-3;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = n01(rng);
  Eigen::VectorXd y = llt.matrixL() * w;

  HyperparameterOptions opts;
  opts.seed = 1;
  auto fit = fit_hyperparameters(Dataset(x, y), HyperparameterBounds{}, 1e-3, opts);
  EXPECT_FALSE(fit.warning);
  for (int d = 0; d < 2; ++d) {
    EXPECT_GT(fit.params.lengthscales[d], 0.05);
    EXPECT_LT(fit.params.lengthscales[d], 0.2);
  }
}

TEST(Hyperparameters, TwoPointsInBounds) {
  auto data = random_dataset(2, 2, 1);
  HyperparameterBounds b;
  auto fit = fit_hyperparameters(data, b, 1e-3);
  EXPECT_GE(std::sqrt(fit.params.signal_variance), b.sigma_lower * (1 - 1e-12));
  EXPECT_LE(std::sqrt(fit.params.signal_variance), b.sigma_upper * (1 + 1e-12));
  for (int d = 0; d < 2; ++d) {
    EXPECT_GE(fit.params.lengthscales[d], b.length_lower * (1 - 1e-12));
    EXPECT_LE(fit.params.lengthscales[d], b.length_upper * (1 + 1e-12));
  }
}

TEST(Hyperparameters, PointBoundsForced) {
  auto data = random_dataset(10, 1, 2);
  HyperparameterBounds b{0.7, 0.7, 0.25, 0.25};
  auto fit = fit_hyperparameters(data, b, 1e-3);
  EXPECT_NEAR(std::sqrt(fit.params.signal_variance), 0.7, 1e-12);
  EXPECT_NEAR(fit.params.lengthscales[0], 0.25, 1e-12);
  EXPECT_DOUBLE_EQ(fit.params.noise_variance, 1e-3);
}

TEST(Hyperparameters, TooFewPointsThrows) {
  auto data = random_dataset(1, 1, 2);
  EXPECT_THROW(fit_hyperparameters(data, HyperparameterBounds{}, 1e-3), std::invalid_argument);
}
