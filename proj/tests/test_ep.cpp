#include "resbo/ep.hpp"

#include <Eigen/LU>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace resbo;

TEST(Ep, UnboundedReturnsPrior) {
  Eigen::Matrix3d c;
  c << 1.0, 0.3, 0.1, 0.3, 2.0, -0.2, 0.1, -0.2, 0.5;
  const Eigen::Vector3d m(0.1, -0.4, 2.0);
  auto r = ep_box_condition(m, c, BoxBounds::unbounded(3));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_NEAR((r.mean - m).norm(), 0.0, 1e-12);
  EXPECT_NEAR((r.covariance - c).norm(), 0.0, 1e-8);
  EXPECT_NEAR(r.log_mass, 0.0, 1e-12);
}

TEST(Ep, OneDimensionalHalfNormal) {
  auto r = ep_box_condition(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1),
                            BoxBounds(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, kInf)));
  EXPECT_NEAR(r.mean[0], std::sqrt(2 / M_PI), 1e-6);
  EXPECT_NEAR(r.covariance(0, 0), 1 - 2 / M_PI, 1e-6);
  EXPECT_NEAR(r.log_mass, std::log(0.5), 1e-8);
}

TEST(Ep, DiagonalPriorIsExact) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  const int d = 6;
  Eigen::VectorXd m(d), v(d), lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    m[i] = u(rng);
    v[i] = 0.6 + 0.4 * u(rng);
    lo[i] = i % 3 == 0 ? -kInf : u(rng) - 0.5;
    hi[i] = i % 3 == 1 ? kInf : (std::isfinite(lo[i]) ? lo[i] : u(rng)) + 1.5;
  }
  auto r = ep_box_condition(m, v.asDiagonal(), BoxBounds(lo, hi));
  double log_mass = 0.0;
  for (int i = 0; i < d; ++i) {
    auto t = truncated_moments_1d(m[i], v[i], lo[i], hi[i]);
    EXPECT_NEAR(r.mean[i], t.mean, 1e-8);
    EXPECT_NEAR(r.covariance(i, i), t.var, 1e-8);
    log_mass += std::log(t.mass);
  }
  EXPECT_NEAR(r.log_mass, log_mass, 1e-6);
}

TEST(Ep, CorrelatedTwoDimensionalCloseToExact) {
  Eigen::Matrix2d c;
  c << 1, 0.5, 0.5, 1;
  BoxBounds b(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  auto r = ep_box_condition(Eigen::Vector2d::Zero(), c, b);
  auto e = truncated_moments_2d(Eigen::Vector2d::Zero(), c, b);
  EXPECT_TRUE(r.converged);
  EXPECT_LT((r.mean - e.mean).cwiseAbs().maxCoeff(), 5e-3);
  EXPECT_LT((r.covariance - e.covariance).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(Ep, SitesReproducePosterior) {
  Eigen::Matrix3d c;
  c << 1.0, 0.6, 0.2, 0.6, 1.0, 0.4, 0.2, 0.4, 1.0;
  const Eigen::Vector3d m(0.2, 0.0, -0.3);
  BoxBounds b(Eigen::Vector3d(-kInf, 0.0, -0.5), Eigen::Vector3d(0.5, kInf, 0.5));
  auto r = ep_box_condition(m, c, b);
  const Eigen::Matrix3d prec = c.inverse() + Eigen::Matrix3d(r.site_precision.asDiagonal());
  const Eigen::Matrix3d cov = prec.inverse();
  EXPECT_NEAR((cov - r.covariance).norm(), 0.0, 1e-7);
  EXPECT_NEAR((cov * (c.inverse() * m + r.site_shift) - r.mean).norm(), 0.0, 1e-7);
}

TEST(ResBounds, Structure) {
  auto r = build_res_bounds(Eigen::VectorXd::Constant(1, 2.0), 1.0);
  EXPECT_EQ(r.box.lower[0], -kInf);
  EXPECT_EQ(r.box.lower[1], 1.0);
  EXPECT_EQ(r.box.upper[0], 2.0);
  EXPECT_EQ(r.box.upper[1], 2.0);
  EXPECT_EQ(r.inconsistencies, 0);
}

TEST(ResBounds, VacuousOptimum) {
  auto r = build_res_bounds(Eigen::Vector3d(0.1, 0.5, -2.0), -kInf);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(r.box.lower[i], -kInf);
  EXPECT_EQ(r.inconsistencies, 0);
}

TEST(ResBounds, DegenerateIntervalRelaxed) {
  auto r = build_res_bounds(Eigen::Vector2d(1.0, 3.0), 1.0);
  EXPECT_EQ(r.box.lower[2], -kInf);
  EXPECT_EQ(r.box.lower[3], 1.0);
  EXPECT_EQ(r.inconsistencies, 1);
}

TEST(ResBounds, LiteralZeroLower) {
  auto r = build_res_bounds(Eigen::Vector2d(1.0, 3.0), 0.5, true);
  EXPECT_EQ(r.box.lower[0], 0.0);
  EXPECT_EQ(r.box.lower[1], 0.0);
}
