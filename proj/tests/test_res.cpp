#include "resbo/res.hpp"

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

using namespace resbo;

namespace {

Domain unit_interval() {
  return Domain::continuous(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
}

Domain theta_set() {
  Eigen::MatrixXd t(3, 1);
  t << 0.0, 0.5, 1.0;
  return Domain::discrete(t);
}

KernelParams params2d(double noise = 1e-3) {
  KernelParams p;
  p.signal_variance = 1.0;
  p.lengthscales = Eigen::Vector2d(0.3, 0.3);
  p.noise_variance = noise;
  return p;
}

Observations two_points() {
  Observations obs;
  obs.append(Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Constant(1, 0.5), 0.3);
  obs.append(Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Constant(1, 1.0), -0.4);
  return obs;
}

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }

// Characteristics that impose no constraint at all.
RobustCharacteristics vacuous() {
  RobustCharacteristics rc;
  rc.argmax_fn = [](const Eigen::VectorXd&) { return v1(0.0); };
  rc.max_fn = [](const Eigen::VectorXd&) { return kInf; };
  rc.robust_value = -kInf;
  rc.robust_x = v1(0.5);
  rc.robust_theta = v1(0.0);
  return rc;
}

}  // namespace

TEST(Res, VacuousBoundsLeavePredictionUnchanged) {
  const SpaceSpec space(unit_interval(), theta_set());
  const Observations obs = two_points();
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  std::vector<std::pair<RobustCharacteristics, std::optional<SpectralSample>>> ch;
  ch.emplace_back(vacuous(), std::nullopt);
  const ResState st = build_res_state(post, obs, space, ch, ResOptions{});
  ASSERT_EQ(st.samples().size(), 1u);
  for (double x : {0.0, 0.3, 0.9}) {
    for (double th : {0.0, 0.5, 1.0}) {
      const auto cp = conditioned_variance(st, 0, v1(x), v1(th));
      const double m = post.predict_mean(Eigen::Vector2d(x, th));
      const double v = post.predict_variance(Eigen::Vector2d(x, th));
      EXPECT_NEAR(cp.mq, m, 1e-10);
      EXPECT_NEAR(cp.vq, v, 1e-10);
      EXPECT_NEAR(res_value(st, v1(x), v1(th)), 0.0, 1e-10);
    }
  }
}

TEST(Res, ValueIsEntropyDifference) {
  const SpaceSpec space(unit_interval(), theta_set());
  const Observations obs = two_points();
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  ResOptions opts;
  opts.num_samples = 3;
  const ResState st = prepare_iteration(post, obs, space, opts, 5);
  ASSERT_EQ(st.samples().size(), 3u);
  const double noise = post.params().noise_variance;
  for (double x : {0.1, 0.45, 0.8}) {
    const double th = 0.5;
    const double vt = post.predict_variance(Eigen::Vector2d(x, th));
    double acc = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
      acc += 0.5 * std::log(conditioned_variance(st, k, v1(x), v1(th)).vq + noise);
    const double expected = std::max(0.0, 0.5 * std::log(vt + noise) - acc / 3.0);
    EXPECT_NEAR(res_value(st, v1(x), v1(th)), expected, 1e-12);
  }
  // Halved variance with zero noise and one sample gives log(2) / 2.
  EXPECT_NEAR(0.5 * std::log(1.0) - 0.5 * std::log(0.5), 0.3466, 1e-4);
}

TEST(Res, ShapesForSmallestState) {
  const SpaceSpec space(unit_interval(), theta_set());
  Observations obs;
  obs.append(v1(0.3), v1(0.0), 0.1);
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  const ResState st = prepare_iteration(post, obs, space, ResOptions{}, 1);
  ASSERT_EQ(st.samples().size(), 1u);
  EXPECT_EQ(st.samples()[0].ep.mean.size(), 2);
  EXPECT_EQ(st.samples()[0].stacked_inputs.rows(), 2);

  obs.append(v1(0.3), v1(1.0), 0.2);
  const GpPosterior post2 = fit_posterior(to_dataset(obs, space), params2d());
  const ResState st2 = prepare_iteration(post2, obs, space, ResOptions{}, 1);
  EXPECT_EQ(st2.samples()[0].ep.mean.size(), 4);
  // Duplicate x shares h(x).
  EXPECT_EQ(st2.samples()[0].stacked_inputs.row(2), st2.samples()[0].stacked_inputs.row(3));
}

TEST(Res, DegenerateQueryCollapsesToOneDimension) {
  const SpaceSpec space(unit_interval(), theta_set());
  const Observations obs = two_points();
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  const ResState st = prepare_iteration(post, obs, space, ResOptions{}, 3);
  const auto& s = st.samples()[0];
  const Eigen::VectorXd x = v1(0.4);
  const InnerResult w = s.worst_case(x);
  const auto cp = conditioned_variance(st, 0, x, w.theta);
  const auto t1 = truncated_moments_1d(cp.m0[0], cp.v0(0, 0), s.characteristics.robust_value, w.value);
  EXPECT_FALSE(cp.fallback);
  EXPECT_NEAR(cp.vq, t1.var, 1e-12);
  EXPECT_NEAR(cp.mq, t1.mean, 1e-12);
}

TEST(Res, SanityOnProbeGrid) {
  const SpaceSpec space(unit_interval(), unit_interval());
  Observations obs;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 6; ++i) {
    const double a = u(rng), b = u(rng);
    obs.append(v1(a), v1(b), std::sin(5 * a) * std::cos(4 * b));
  }
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  ResOptions opts;
  opts.num_samples = 2;
  const ResState st = prepare_iteration(post, obs, space, opts, 9);
  ResOptions off = opts;
  off.disable_truncation = true;
  const ResState st_off = prepare_iteration(post, obs, space, off, 9);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const Eigen::VectorXd x = v1(i / 9.0), th = v1(j / 9.0);
      EXPECT_GE(res_value(st, x, th), 0.0);
      EXPECT_LE(res_value(st_off, x, th), 1e-8);
      const double vt = post.predict_variance(Eigen::Vector2d(x[0], th[0]));
      for (std::size_t k = 0; k < st.samples().size(); ++k)
        EXPECT_LE(conditioned_variance(st, k, x, th).vq, vt + 1e-6);
    }
  }
}

TEST(Res, ConditionedVarianceMatchesConstrainedMonteCarlo) {
  // Exact conditioning by rejection: draw the joint GP posterior of the
  // stacked training values and the query pair, keep draws satisfying every
  // constraint, compare the variance of f(x, theta).
  const SpaceSpec space(unit_interval(), theta_set());
  const Observations obs = two_points();
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  const ResState st = prepare_iteration(post, obs, space, ResOptions{}, 11);
  ASSERT_EQ(st.samples().size(), 1u);
  const auto& s = st.samples()[0];
  const double f_star = s.characteristics.robust_value;
  const Eigen::VectorXd x = v1(0.45);
  const InnerResult w = s.worst_case(x);
  const Eigen::VectorXd th = v1(w.theta[0] == 0.5 ? 1.0 : 0.5);
  const auto cp = conditioned_variance(st, 0, x, th);

  const Eigen::Index t = obs.size();
  Eigen::MatrixXd pts(2 * t + 2, 2);
  pts.topRows(2 * t) = s.stacked_inputs;
  pts.row(2 * t) << x[0], th[0];
  pts.row(2 * t + 1) << x[0], w.theta[0];
  const Prediction joint = post.predict(pts);
  Eigen::MatrixXd c = joint.covariance;
  c.diagonal().array() += 1e-10;
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(c).matrixL();
  std::mt19937_64 rng(123);
  std::normal_distribution<double> n01;
  const int want = 30000;
  double sum = 0, sum2 = 0;
  int accepted = 0;
  Eigen::VectorXd e(pts.rows());
  while (accepted < want) {
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = n01(rng);
    const Eigen::VectorXd f = joint.mean + l * e;
    bool ok = true;
    for (Eigen::Index i = 0; i < t && ok; ++i) {
      const double g = s.train_max_values[i];
      ok = f[i] <= g && f[t + i] <= g && f[t + i] >= f_star;
    }
    ok = ok && f[2 * t + 1] <= w.value && f[2 * t + 1] >= f_star && f[2 * t] <= w.value;
    if (!ok) continue;
    sum += f[2 * t];
    sum2 += f[2 * t] * f[2 * t];
    ++accepted;
  }
  const double mc_mean = sum / accepted;
  const double mc_var = sum2 / accepted - mc_mean * mc_mean;
  const double se_var = mc_var * std::sqrt(2.0 / accepted);
  EXPECT_NEAR(cp.vq, mc_var, 3 * se_var);
  EXPECT_NEAR(cp.mq, mc_mean, 3 * std::sqrt(mc_var / accepted));
}

TEST(Res, NoSurvivingSamplesFallsBackToVariance) {
  const SpaceSpec space(unit_interval(), theta_set());
  const Observations obs = two_points();
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  const ResState st = build_res_state(post, obs, space, {}, ResOptions{});
  EXPECT_EQ(st.samples().size(), 0u);
  const double v = post.predict_variance(Eigen::Vector2d(0.9, 0.0));
  EXPECT_NEAR(res_value(st, v1(0.9), v1(0.0)), v, 1e-12);

  const SpaceSpec grid(Domain::discrete((Eigen::MatrixXd(4, 1) << 0.0, 0.2, 0.7, 1.0).finished()),
                       theta_set());
  const GpPosterior pg = fit_posterior(to_dataset(obs, grid), params2d());
  const ResState sg = build_res_state(pg, obs, grid, {}, ResOptions{});
  const SpacePoint best = maximize_acquisition(sg);
  double vmax = -1;
  for (double a : {0.0, 0.2, 0.7, 1.0})
    for (double b : {0.0, 0.5, 1.0}) vmax = std::max(vmax, pg.predict_variance(Eigen::Vector2d(a, b)));
  EXPECT_NEAR(best.value, vmax, 1e-12);
}

TEST(Res, DiscreteTableArgmax) {
  Eigen::MatrixXd xs(10, 1);
  for (int i = 0; i < 10; ++i) xs(i, 0) = i / 9.0;
  Eigen::MatrixXd ts(5, 1);
  for (int i = 0; i < 5; ++i) ts(i, 0) = i / 4.0;
  const SpaceSpec space(Domain::discrete(xs), Domain::discrete(ts));
  Observations obs;
  obs.append(v1(xs(2, 0)), v1(ts(1, 0)), 0.4);
  obs.append(v1(xs(7, 0)), v1(ts(3, 0)), -0.2);
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  const ResState st = prepare_iteration(post, obs, space, ResOptions{}, 2);
  const SpacePoint best = maximize_acquisition(st);
  double table_max = -1;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 5; ++j) table_max = std::max(table_max, res_value(st, xs.row(i), ts.row(j)));
  EXPECT_DOUBLE_EQ(best.value, table_max);
}

TEST(Res, ContinuousSelectionDeterministicAndInDomain) {
  const SpaceSpec space(unit_interval(), unit_interval());
  Observations obs;
  obs.append(v1(0.2), v1(0.3), 0.5);
  obs.append(v1(0.8), v1(0.6), -0.1);
  obs.append(v1(0.5), v1(0.9), 0.2);
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  AcqOptimOptions ao;
  ao.seed = 4;
  ao.restarts = 3;
  const auto a = maximize_acquisition(prepare_iteration(post, obs, space, ResOptions{}, 8), ao);
  const auto b = maximize_acquisition(prepare_iteration(post, obs, space, ResOptions{}, 8), ao);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_TRUE(space.controllable.contains(a.x));
  EXPECT_TRUE(space.uncontrollable.contains(a.theta));
}

TEST(Res, PreparationRuntimeAtFiftyPoints) {
  const SpaceSpec space(unit_interval(), unit_interval());
  Observations obs;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), b = u(rng);
    obs.append(v1(a), v1(b), std::sin(6 * a) + b * b);
  }
  const GpPosterior post = fit_posterior(to_dataset(obs, space), params2d());
  const auto t0 = std::chrono::steady_clock::now();
  const ResState st = prepare_iteration(post, obs, space, ResOptions{}, 3);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(st.samples().size() + st.dropped_samples(), 1u);
  EXPECT_LT(secs, 10.0);
}
