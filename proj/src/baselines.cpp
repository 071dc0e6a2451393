#include "resbo/baselines.hpp"

#include "resbo/ssgp.hpp"
#include "resbo/trunc_gauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace resbo {

void BaselineConfig::validate() const {
  if ((kind == BaselineKind::kUcb || kind == BaselineKind::kStableOpt) && !(beta_sqrt >= 0.0))
    throw std::invalid_argument("beta_sqrt must be >= 0");
  if (mes_num_mins < 1 || mes_num_features < 1 || kg_grid_per_dim < 1 || kg_num_samples < 1 ||
      kg_max_points < 1)
    throw std::invalid_argument("baseline counts must be >= 1");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kStableOpt: return "stableopt";
    case BaselineKind::kUcb: return "ucb";
    case BaselineKind::kEi: return "ei";
    case BaselineKind::kMes: return "mes";
    case BaselineKind::kKg: return "kg";
  }
  return "?";
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "stableopt") return BaselineKind::kStableOpt;
  if (name == "ucb") return BaselineKind::kUcb;
  if (name == "ei") return BaselineKind::kEi;
  if (name == "mes") return BaselineKind::kMes;
  if (name == "kg") return BaselineKind::kKg;
  throw std::invalid_argument("unknown baseline: " + name);
}

ModelFunction confidence_bound_function(const GpPosterior& posterior, double beta_sqrt,
                                        double sign) {
  ModelFunction mf;
  mf.value = [&posterior, beta_sqrt, sign](const Eigen::VectorXd& z) {
    const double v = posterior.predict_variance(z);
    return posterior.predict_mean(z) + sign * beta_sqrt * std::sqrt(std::max(v, 0.0));
  };
  mf.value_grad = [&posterior, beta_sqrt, sign](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    const PointPrediction p = posterior.predict_with_gradient(z);
    const double sd = std::sqrt(std::max(p.variance, 0.0));
    grad = p.mean_grad;
    if (beta_sqrt != 0.0 && sd > 1e-12) grad += sign * beta_sqrt * p.variance_grad / (2.0 * sd);
    return p.mean + sign * beta_sqrt * sd;
  };
  return mf;
}

namespace {

Eigen::MatrixXd model_inputs_row(const SpaceSpec& space, const Eigen::VectorXd& x,
                                 const Eigen::MatrixXd& thetas) {
  Eigen::MatrixXd pts(thetas.rows(), space.model_dim());
  for (Eigen::Index j = 0; j < thetas.rows(); ++j)
    pts.row(j) = space.model_input(x, thetas.row(j).transpose()).transpose();
  return pts;
}

// Criterion computed from predictive mean and variance at each point.
SpacePoint maximize_marginal_criterion(const GpPosterior& posterior, const SpaceSpec& space,
                                       const std::function<double(double, double)>& crit,
                                       const AcqOptimOptions& opts) {
  SpaceFunction f;
  f.value = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    const Eigen::VectorXd z = space.model_input(x, th);
    return crit(posterior.predict_mean(z), posterior.predict_variance(z));
  };
  f.row = [&](const Eigen::VectorXd& x, const Eigen::MatrixXd& ths) {
    Eigen::VectorXd m, v;
    posterior.predict_marginal(model_inputs_row(space, x, ths), m, v);
    Eigen::VectorXd out(m.size());
    for (Eigen::Index j = 0; j < m.size(); ++j) out[j] = crit(m[j], v[j]);
    return out;
  };
  return maximize_over_space(f, space, opts);
}

// log Phi(g) and phi(g) / Phi(g), stable in the lower tail.
void log_cdf_and_hazard(double g, double& log_cdf, double& ratio) {
  if (g > -30.0) {
    const double c = std_normal_cdf(g);
    log_cdf = std::log(c);
    ratio = std_normal_pdf(g) / c;
    return;
  }
  const double g2 = g * g;
  log_cdf = -0.5 * g2 - std::log(-g) - 0.5 * std::log(2.0 * M_PI) + std::log1p(-1.0 / g2);
  ratio = -g / (1.0 - 1.0 / g2);
}

}  // namespace

SpacePoint ucb_select(const GpPosterior& posterior, const SpaceSpec& space, double beta_sqrt,
                      const AcqOptimOptions& opts) {
  SpacePoint p = maximize_marginal_criterion(
      posterior, space,
      [beta_sqrt](double m, double v) { return -(m - beta_sqrt * std::sqrt(std::max(v, 0.0))); },
      opts);
  p.value = -p.value;
  return p;
}

SpacePoint stableopt_select(const GpPosterior& posterior, const SpaceSpec& space, double beta_sqrt,
                            const RobustOptions& opts) {
  const MinMaxObjective lcb = compose(confidence_bound_function(posterior, beta_sqrt, -1.0), space);
  const RobustCharacteristics rc = robust_optimum(lcb, space, opts);
  const MinMaxObjective ucb = compose(confidence_bound_function(posterior, beta_sqrt, 1.0), space);
  const InnerResult adv = inner_max(ucb, rc.robust_x, space, opts);
  return SpacePoint{rc.robust_x, adv.theta, rc.robust_value};
}

double expected_improvement(double mean, double variance, double incumbent) {
  const double sd = std::sqrt(std::max(variance, 0.0));
  const double diff = incumbent - mean;
  if (std::isinf(incumbent)) return incumbent > 0 ? kInf : 0.0;
  if (sd < 1e-12) return std::max(diff, 0.0);
  const double u = diff / sd;
  return std::max(diff * std_normal_cdf(u) + sd * std_normal_pdf(u), 0.0);
}

SpacePoint ei_select(const GpPosterior& posterior, const SpaceSpec& space, double incumbent,
                     const AcqOptimOptions& opts) {
  return maximize_marginal_criterion(
      posterior, space,
      [incumbent](double m, double v) { return expected_improvement(m, v, incumbent); }, opts);
}

double mes_value(double mean, double variance, const Eigen::VectorXd& sampled_minima) {
  const double sd = std::sqrt(std::max(variance, 0.0));
  if (sd < 1e-12 || sampled_minima.size() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < sampled_minima.size(); ++k) {
    const double g = (mean - sampled_minima[k]) / sd;
    double log_cdf = 0.0, ratio = 0.0;
    log_cdf_and_hazard(g, log_cdf, ratio);
    acc += 0.5 * g * ratio - log_cdf;
  }
  const double out = acc / static_cast<double>(sampled_minima.size());
  return std::isfinite(out) ? std::max(out, 0.0) : 0.0;
}

Eigen::VectorXd sample_minima(const GpPosterior& posterior, const SpaceSpec& space, int count,
                              int num_features, std::uint64_t seed) {
  auto basis = std::make_shared<const SpectralBasis>(
      build_basis(posterior.params(), num_features, seed));
  const double noise = std::max(posterior.params().noise_variance, 1e-10);
  const auto samples = draw_samples(basis, posterior.dataset(), noise, count, seed + 1);
  Eigen::VectorXd mins(count);

  if (space.controllable.is_discrete() && space.uncontrollable.is_discrete()) {
    const auto& xs = space.controllable.points().points;
    const auto& ts = space.uncontrollable.points().points;
    Eigen::MatrixXd w(basis->num_features(), count);
    for (int k = 0; k < count; ++k) w.col(k) = samples[k].weights();
    mins.setConstant(kInf);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const Eigen::MatrixXd vals =
          basis->feature_matrix(model_inputs_row(space, xs.row(i).transpose(), ts)) * w;
      mins = mins.cwiseMin(vals.colwise().minCoeff().transpose());
    }
    return mins;
  }

  AcqOptimOptions o;
  o.restarts = 3;
  o.screen = 100;
  o.max_evals = 200;
  for (int k = 0; k < count; ++k) {
    const SpectralSample& s = samples[k];
    SpaceFunction f;
    f.value = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
      return -s(space.model_input(x, th));
    };
    f.row = [&](const Eigen::VectorXd& x, const Eigen::MatrixXd& ths) {
      return Eigen::VectorXd(-(basis->feature_matrix(model_inputs_row(space, x, ths)) * s.weights()));
    };
    o.seed = seed + 101 * (k + 1);
    mins[k] = -maximize_over_space(f, space, o).value;
  }
  return mins;
}

SpacePoint mes_select(const GpPosterior& posterior, const SpaceSpec& space, int num_mins,
                      std::uint64_t seed, int num_features, const AcqOptimOptions& opts) {
  const Eigen::VectorXd mins = sample_minima(posterior, space, num_mins, num_features, seed);
  return maximize_marginal_criterion(
      posterior, space, [&mins](double m, double v) { return mes_value(m, v, mins); }, opts);
}

namespace {

Eigen::MatrixXd factor_grid(const Domain& dom, int grid_per_dim, std::mt19937_64& rng) {
  if (dom.is_discrete()) return dom.points().points;
  double n = std::pow(static_cast<double>(grid_per_dim), static_cast<double>(dom.dim()));
  n = std::min(n, 1e6);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dom.dim());
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = dom.sample(rng).transpose();
  return out;
}

}  // namespace

KgGrid kg_grid(const SpaceSpec& space, int grid_per_dim, int max_points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KgGrid g;
  const Eigen::MatrixXd xs = factor_grid(space.controllable, grid_per_dim, rng);
  const Eigen::MatrixXd ts = factor_grid(space.uncontrollable, grid_per_dim, rng);

  if (!space.controllable.is_discrete() && !space.uncontrollable.is_discrete()) {
    // One random grid over the joint box: pair the rows rather than crossing.
    const double n = std::pow(static_cast<double>(grid_per_dim),
                              static_cast<double>(space.dim_x() + space.dim_theta()));
    const Eigen::Index count = static_cast<Eigen::Index>(std::min<double>(n, max_points));
    g.x.resize(count, space.dim_x());
    g.theta.resize(count, space.dim_theta());
    for (Eigen::Index i = 0; i < count; ++i) {
      g.x.row(i) = space.controllable.sample(rng).transpose();
      g.theta.row(i) = space.uncontrollable.sample(rng).transpose();
    }
    return g;
  }

  const Eigen::Index total = xs.rows() * ts.rows();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  if (total > max_points) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(max_points));
    std::sort(idx.begin(), idx.end());
  }
  g.x.resize(static_cast<Eigen::Index>(idx.size()), xs.cols());
  g.theta.resize(static_cast<Eigen::Index>(idx.size()), ts.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    g.x.row(r) = xs.row(idx[r] / ts.rows());
    g.theta.row(r) = ts.row(idx[r] % ts.rows());
  }
  return g;
}

Eigen::VectorXd kg_values(const GpPosterior& posterior, const SpaceSpec& space, const KgGrid& grid,
                          int num_samples, std::uint64_t seed) {
  const Eigen::Index n = grid.x.rows();
  Eigen::MatrixXd pts(n, space.model_dim());
  for (Eigen::Index i = 0; i < n; ++i)
    pts.row(i) = space.model_input(grid.x.row(i).transpose(), grid.theta.row(i).transpose()).transpose();

  const Prediction pred = posterior.predict(pts);
  const double noise = posterior.params().noise_variance;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd eps(num_samples);
  for (int k = 0; k < num_samples; ++k) eps[k] = normal(rng);

  const double current_min = pred.mean.minCoeff();
  Eigen::VectorXd out(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double denom = std::sqrt(std::max(pred.covariance(c, c), 0.0) + noise);
    if (denom < 1e-12) {
      out[c] = 0.0;
      continue;
    }
    const Eigen::VectorXd s = pred.covariance.col(c) / denom;
    double acc = 0.0;
    for (int k = 0; k < num_samples; ++k) acc += (pred.mean + eps[k] * s).minCoeff();
    out[c] = current_min - acc / num_samples;
  }
  return out;
}

SpacePoint kg_select(const GpPosterior& posterior, const SpaceSpec& space, int grid_per_dim,
                     int num_samples, std::uint64_t seed, int max_points) {
  const KgGrid grid = kg_grid(space, grid_per_dim, max_points, seed);
  const Eigen::VectorXd v = kg_values(posterior, space, grid, num_samples, seed + 1);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return SpacePoint{grid.x.row(best).transpose(), grid.theta.row(best).transpose(), v[best]};
}

SpacePoint baseline_select(const BaselineConfig& cfg, const GpPosterior& posterior,
                           const SpaceSpec& space, double incumbent, std::uint64_t seed,
                           const AcqOptimOptions& acq_opts, const RobustOptions& robust_opts) {
  AcqOptimOptions ao = acq_opts;
  ao.seed = seed;
  switch (cfg.kind) {
    case BaselineKind::kUcb: return ucb_select(posterior, space, cfg.beta_sqrt, ao);
    case BaselineKind::kEi: return ei_select(posterior, space, incumbent, ao);
    case BaselineKind::kMes:
      return mes_select(posterior, space, cfg.mes_num_mins, seed ^ 0x5bd1e995ULL,
                        cfg.mes_num_features, ao);
    case BaselineKind::kKg:
      return kg_select(posterior, space, cfg.kg_grid_per_dim, cfg.kg_num_samples, seed,
                       cfg.kg_max_points);
    case BaselineKind::kStableOpt: {
      RobustOptions ro = robust_opts;
      ro.seed = seed;
      return stableopt_select(posterior, space, cfg.beta_sqrt, ro);
    }
  }
  throw std::logic_error("baseline_select: unhandled kind");
}

}  // namespace resbo
