#include "resbo/baselines.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace resbo;

namespace {

Domain points_1d(std::initializer_list<double> v) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(v.size()), 1);
  int i = 0;
  for (double x : v) p(i++, 0) = x;
  return Domain::discrete(p);
}

Domain unit_interval() {
  return Domain::continuous(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
}

KernelParams params(double l, double noise) {
  KernelParams p;
  p.signal_variance = 1.0;
  p.lengthscales = Eigen::Vector2d(l, l);
  p.noise_variance = noise;
  return p;
}

GpPosterior posterior_on(const std::vector<std::array<double, 3>>& rows, double l, double noise) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 2);
  Eigen::VectorXd y(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) << rows[i][0], rows[i][1];
    y[static_cast<Eigen::Index>(i)] = rows[i][2];
  }
  return fit_posterior(Dataset(x, y), params(l, noise));
}

}  // namespace

TEST(Config, NamesAndValidation) {
  for (auto k : {BaselineKind::kStableOpt, BaselineKind::kUcb, BaselineKind::kEi, BaselineKind::kMes,
                 BaselineKind::kKg})
    EXPECT_EQ(baseline_kind_from_string(to_string(k)), k);
  EXPECT_THROW(baseline_kind_from_string("pi"), std::invalid_argument);
  BaselineConfig c;
  c.beta_sqrt = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = BaselineConfig{};
  c.kg_num_samples = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Ucb, ExplorationDominance) {
  // Data pins every cell but (1, 1), which keeps prior variance.
  SpaceSpec space(points_1d({0, 1}), points_1d({0, 1}));
  auto post = posterior_on({{0, 0, 0}, {0, 1, 0}, {1, 0, 0}}, 0.05, 1e-4);
  auto r = ucb_select(post, space, 2.0);
  EXPECT_DOUBLE_EQ(r.x[0], 1);
  EXPECT_DOUBLE_EQ(r.theta[0], 1);
}

TEST(Ucb, ZeroBetaIsMeanMinimization) {
  SpaceSpec space(points_1d({0, 0.5, 1}), points_1d({0, 1}));
  auto post = posterior_on({{0, 0, 1.0}, {0.5, 1, -2.0}, {1, 0, 0.5}}, 0.3, 1e-3);
  auto r = ucb_select(post, space, 0.0);
  double best = kInf;
  Eigen::Vector2d arg;
  for (double a : {0.0, 0.5, 1.0})
    for (double b : {0.0, 1.0}) {
      const double m = post.predict_mean(Eigen::Vector2d(a, b));
      if (m < best) {
        best = m;
        arg << a, b;
      }
    }
  EXPECT_DOUBLE_EQ(r.x[0], arg[0]);
  EXPECT_DOUBLE_EQ(r.theta[0], arg[1]);
}

TEST(StableOpt, HandEnumerationThreeByTwo) {
  SpaceSpec space(points_1d({0, 0.5, 1}), points_1d({0, 1}));
  auto post = posterior_on({{0, 0, 1.0}, {0.5, 1, -0.5}, {1, 0, 0.2}, {1, 1, 0.8}}, 0.4, 1e-3);
  const double beta = 1.0;
  double lcb[3][2], ucb[3][2];
  const double xs[3] = {0, 0.5, 1}, ts[2] = {0, 1};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      const Eigen::Vector2d z(xs[i], ts[j]);
      const double m = post.predict_mean(z), s = std::sqrt(post.predict_variance(z));
      lcb[i][j] = m - beta * s;
      ucb[i][j] = m + beta * s;
    }
  int bx = 0;
  for (int i = 1; i < 3; ++i)
    if (std::max(lcb[i][0], lcb[i][1]) < std::max(lcb[bx][0], lcb[bx][1])) bx = i;
  const int bt = ucb[bx][1] > ucb[bx][0] ? 1 : 0;
  auto r = stableopt_select(post, space, beta);
  EXPECT_DOUBLE_EQ(r.x[0], xs[bx]);
  EXPECT_DOUBLE_EQ(r.theta[0], ts[bt]);
}

TEST(StableOpt, DifferentBetasStayInDomain) {
  SpaceSpec space(unit_interval(), unit_interval());
  auto post = posterior_on({{0.2, 0.3, 0.5}, {0.7, 0.8, -0.3}}, 0.3, 1e-3);
  RobustOptions ro;
  ro.outer_restarts = 3;
  for (double b : {1.0, 4.0}) {
    auto r = stableopt_select(post, space, b, ro);
    EXPECT_TRUE(space.controllable.contains(r.x));
    EXPECT_TRUE(space.uncontrollable.contains(r.theta));
  }
}

TEST(Ei, FormulaAndLimits) {
  EXPECT_NEAR(expected_improvement(0.0, 1.0, 0.0), std_normal_pdf(0.0), 1e-15);
  EXPECT_DOUBLE_EQ(expected_improvement(1.0, 0.0, 3.0), 2.0);
  EXPECT_DOUBLE_EQ(expected_improvement(1.0, 0.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(expected_improvement(1.0, 2.0, -kInf), 0.0);
  // Direct integral: E[max(I - f, 0)] for f ~ N(0.3, 0.49), I = 0.5.
  const double m = 0.3, s = 0.7, inc = 0.5, u = (inc - m) / s;
  EXPECT_NEAR(expected_improvement(m, s * s, inc),
              (inc - m) * std_normal_cdf(u) + s * std_normal_pdf(u), 1e-14);
}

TEST(Ei, ZeroVarianceTiesGoToFirstCell) {
  SpaceSpec space(points_1d({0, 1, 2}), points_1d({0}));
  auto post = posterior_on({{0, 0, 0.0}, {1, 0, 0.0}, {2, 0, 0.0}}, 0.01, 1e-12);
  auto r = ei_select(post, space, -1.0);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.x[0], 0);
}

TEST(Ei, QuadraticDataDenseGrid) {
  std::vector<std::array<double, 3>> rows;
  for (double a : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0})
    for (double b : {0.0, 0.5, 1.0}) rows.push_back({a, b, std::pow(a - 0.55, 2)});
  auto post = posterior_on(rows, 0.4, 1e-4);
  SpaceSpec space(unit_interval(), unit_interval());
  double incumbent = kInf;
  for (const auto& r : rows) incumbent = std::min(incumbent, r[2]);
  AcqOptimOptions o;
  o.seed = 2;
  auto sel = ei_select(post, space, incumbent, o);
  double grid_best = -1;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 20; ++j) {
      const Eigen::Vector2d z(i / 200.0, j / 20.0);
      grid_best = std::max(grid_best, expected_improvement(post.predict_mean(z),
                                                           post.predict_variance(z), incumbent));
    }
  EXPECT_GE(sel.value, grid_best - 1e-6);
  EXPECT_NEAR(sel.x[0], 0.55, 0.1);
}

TEST(Mes, SingleMinimumHandComputation) {
  const double y = -10.0;
  Eigen::VectorXd mins = Eigen::VectorXd::Constant(1, y);
  auto hand = [&](double m, double v) {
    const double g = (m - y) / std::sqrt(v);
    return g * std_normal_pdf(g) / (2 * std_normal_cdf(g)) - std::log(std_normal_cdf(g));
  };
  EXPECT_NEAR(mes_value(0.0, 1.0, mins), hand(0.0, 1.0), 1e-12);
  EXPECT_NEAR(mes_value(0.0, 4.0, mins), hand(0.0, 4.0), 1e-12);
  // Two-cell toy with equal means: the higher-variance cell wins.
  EXPECT_GT(mes_value(0.0, 4.0, mins), mes_value(0.0, 1.0, mins));
  EXPECT_DOUBLE_EQ(mes_value(0.3, 0.0, mins), 0.0);
}

TEST(Mes, SampledMinimaBelowData) {
  SpaceSpec space(unit_interval(), unit_interval());
  auto post = posterior_on({{0.2, 0.3, 0.5}, {0.7, 0.8, -0.3}, {0.4, 0.1, 0.0}}, 0.3, 1e-3);
  auto mins = sample_minima(post, space, 5, 200, 3);
  ASSERT_EQ(mins.size(), 5);
  EXPECT_LT(mins.maxCoeff(), 0.0);
}

TEST(Kg, SinglePointGrid) {
  SpaceSpec space(points_1d({0.4}), points_1d({0.6}));
  auto post = posterior_on({{0.1, 0.1, 0.3}}, 0.3, 1e-3);
  auto r = kg_select(post, space, 10, 8, 1);
  EXPECT_DOUBLE_EQ(r.x[0], 0.4);
  EXPECT_DOUBLE_EQ(r.theta[0], 0.6);
}

TEST(Kg, KnownPointHasNoValue) {
  SpaceSpec space(points_1d({0, 1}), points_1d({0}));
  auto post = posterior_on({{0, 0, 0.0}}, 0.3, 1e-12);
  KgGrid grid{(Eigen::MatrixXd(2, 1) << 0, 1).finished(), Eigen::MatrixXd::Zero(2, 1)};
  auto v = kg_values(post, space, grid, 64, 2);
  EXPECT_NEAR(v[0], 0.0, 1e-5);
  EXPECT_GT(v[1], 0.1);
}

TEST(Kg, GridSizeAndCap) {
  SpaceSpec space(unit_interval(), points_1d({0, 0.5, 1}));
  auto g = kg_grid(space, 20, 2500, 1);
  EXPECT_EQ(g.x.rows(), 60);
  auto capped = kg_grid(space, 20, 25, 1);
  EXPECT_EQ(capped.x.rows(), 25);
  for (Eigen::Index i = 0; i < capped.x.rows(); ++i)
    EXPECT_TRUE(space.uncontrollable.contains(capped.theta.row(i).transpose()));
}

TEST(Dispatch, AllKindsReturnInDomainPoints) {
  SpaceSpec space(unit_interval(), points_1d({0, 1}));
  auto post = posterior_on({{0.2, 0, 0.5}, {0.7, 1, -0.3}}, 0.3, 1e-3);
  AcqOptimOptions ao;
  ao.restarts = 2;
  RobustOptions ro;
  ro.outer_restarts = 2;
  for (auto k : {BaselineKind::kStableOpt, BaselineKind::kUcb, BaselineKind::kEi, BaselineKind::kMes,
                 BaselineKind::kKg}) {
    BaselineConfig c;
    c.kind = k;
    c.mes_num_mins = 5;
    c.mes_num_features = 100;
    c.kg_grid_per_dim = 20;
    auto r = baseline_select(c, post, space, -0.3, 7, ao, ro);
    EXPECT_TRUE(space.controllable.contains(r.x)) << to_string(k);
    EXPECT_TRUE(space.uncontrollable.contains(r.theta)) << to_string(k);
  }
}
