#include "resbo/res.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace resbo {

void Observations::append(const Eigen::VectorXd& xi, const Eigen::VectorXd& ti, double yi) {
  const Eigen::Index n = size();
  if (n == 0) {
    x.resize(0, xi.size());
    theta.resize(0, ti.size());
  }
  x.conservativeResize(n + 1, xi.size());
  theta.conservativeResize(n + 1, ti.size());
  y.conservativeResize(n + 1);
  x.row(n) = xi.transpose();
  theta.row(n) = ti.transpose();
  y[n] = yi;
}

Dataset to_dataset(const Observations& obs, const SpaceSpec& space) {
  Eigen::MatrixXd inputs(obs.size(), space.model_dim());
  for (Eigen::Index i = 0; i < obs.size(); ++i)
    inputs.row(i) = space.model_input(obs.x.row(i).transpose(), obs.theta.row(i).transpose()).transpose();
  return Dataset(std::move(inputs), obs.y);
}

namespace {

// Everything per sample that does not depend on the query point.
bool prepare_sample(const GpPosterior& post, const Observations& obs, const SpaceSpec& space,
                    const ResOptions& opts, ResSample& s, int& inconsistencies) {
  const Eigen::Index t = obs.size();
  const Eigen::Index dm = space.model_dim();
  s.stacked_inputs.resize(2 * t, dm);
  s.train_max_values.resize(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    const Eigen::VectorXd xi = obs.x.row(i).transpose();
    const InnerResult w = s.worst_case(xi);
    s.stacked_inputs.row(i) = space.model_input(xi, obs.theta.row(i).transpose()).transpose();
    s.stacked_inputs.row(t + i) = space.model_input(xi, w.theta).transpose();
    s.train_max_values[i] = w.value;
  }
  if (t == 0) return true;

  const Prediction prior = post.predict(s.stacked_inputs);
  Eigen::MatrixXd cov = prior.covariance;
  if (opts.disable_truncation) {
    s.ep.mean = prior.mean;
    s.ep.covariance = cov;
    s.ep.converged = true;
    s.ep.site_precision = Eigen::VectorXd::Zero(2 * t);
    s.ep.site_shift = Eigen::VectorXd::Zero(2 * t);
  } else {
    const ResBounds rb =
        build_res_bounds(s.train_max_values, s.characteristics.robust_value, opts.literal_zero_lower);
    inconsistencies += rb.inconsistencies;
    try {
      s.ep = ep_box_condition(prior.mean, cov, rb.box, opts.ep);
    } catch (const NumericalError&) {
      return false;
    }
    if (!s.ep.mean.allFinite() || !s.ep.covariance.allFinite()) return false;
  }

  // Site terms as pseudo-observations on top of p(. | D_t).
  cov.diagonal().array() += 1e-10 * std::max(1e-300, cov.diagonal().maxCoeff());
  const Eigen::VectorXd& tau = s.ep.site_precision;
  const Eigen::VectorXd sq = tau.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd b = sq.asDiagonal() * cov * sq.asDiagonal();
  b.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::MatrixXd binv = llt.solve(Eigen::MatrixXd::Identity(2 * t, 2 * t));
  s.site_operator = sq.asDiagonal() * binv * sq.asDiagonal();
  const Eigen::VectorXd centered = s.ep.site_shift - tau.cwiseProduct(prior.mean);
  s.site_weights = centered - s.site_operator * (cov * centered);
  s.train_solve = post.solve_cross(s.stacked_inputs);
  return true;
}

}  // namespace

ResState build_res_state(
    const GpPosterior& posterior, const Observations& obs, const SpaceSpec& space,
    std::vector<std::pair<RobustCharacteristics, std::optional<SpectralSample>>> characteristics,
    const ResOptions& opts) {
  ResState st;
  st.posterior_ = posterior;
  st.space_ = space;
  st.obs_ = obs;
  st.opts_ = opts;
  st.requested_ = static_cast<int>(characteristics.size());
  for (auto& [rc, sample] : characteristics) {
    ResSample s;
    s.characteristics = std::move(rc);
    s.sample = std::move(sample);
    const auto argmax = s.characteristics.argmax_fn;
    const auto maxfn = s.characteristics.max_fn;
    s.worst_case = [argmax, maxfn](const Eigen::VectorXd& x) {
      return InnerResult{argmax(x), maxfn(x)};
    };
    if (s.sample) {
      const MinMaxObjective obj = compose(
          ModelFunction{[smp = *s.sample](const Eigen::VectorXd& z) { return smp(z); },
                        [smp = *s.sample](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
                          return smp.value_and_gradient(z, g);
                        }},
          space);
      s.worst_case = [obj, space, ro = opts.robust](const Eigen::VectorXd& x) {
        return inner_max(obj, x, space, ro);
      };
    }
    if (prepare_sample(posterior, obs, space, opts, s, st.inconsistencies_)) {
      st.samples_.push_back(std::move(s));
    } else {
      ++st.dropped_;
    }
  }
  return st;
}

std::vector<std::pair<RobustCharacteristics, std::optional<SpectralSample>>> sample_characteristics(
    const GpPosterior& posterior, const SpaceSpec& space, const ResOptions& opts,
    std::uint64_t seed) {
  if (opts.num_samples < 1) throw std::invalid_argument("sample_characteristics: need >= 1 sample");
  auto basis = std::make_shared<const SpectralBasis>(
      build_basis(posterior.params(), opts.num_features, seed));
  const double noise = std::max(posterior.params().noise_variance, 1e-10);
  const std::vector<SpectralSample> samples =
      draw_samples(basis, posterior.dataset(), noise, opts.num_samples, seed + 1);

  std::vector<std::pair<RobustCharacteristics, std::optional<SpectralSample>>> chars;
  for (std::size_t c = 0; c < samples.size(); ++c) {
    const SpectralSample& smp = samples[c];
    const MinMaxObjective obj = compose(
        ModelFunction{[smp](const Eigen::VectorXd& z) { return smp(z); },
                      [smp](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
                        return smp.value_and_gradient(z, g);
                      }},
        space);
    RobustOptions ro = opts.robust;
    ro.seed = opts.robust.seed + 7919 * (c + 1);
    chars.emplace_back(robust_optimum(obj, space, ro), smp);
  }
  return chars;
}

ResState prepare_iteration(const GpPosterior& posterior, const Observations& obs,
                           const SpaceSpec& space, const ResOptions& opts, std::uint64_t seed) {
  return build_res_state(posterior, obs, space, sample_characteristics(posterior, space, opts, seed),
                         opts);
}

ConditionedPrediction conditioned_variance_at(const ResState& state, std::size_t sample_idx,
                                              const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& theta,
                                              const Eigen::VectorXd& worst_theta,
                                              double worst_value) {
  const ResSample& s = state.samples().at(sample_idx);
  const GpPosterior& post = state.posterior();
  const SpaceSpec& space = state.space();

  Eigen::MatrixXd p(2, space.model_dim());
  p.row(0) = space.model_input(x, theta).transpose();
  p.row(1) = space.model_input(x, worst_theta).transpose();

  ConditionedPrediction out;
  const Prediction pred = post.predict(p);
  out.m0 = pred.mean;
  out.v0 = pred.covariance;
  if (s.stacked_inputs.rows() > 0) {
    const Eigen::MatrixXd c_pf =
        kernel_matrix(p, s.stacked_inputs, post.params()) -
        kernel_matrix(p, post.dataset().inputs, post.params()) * s.train_solve;
    out.m0 += c_pf * s.site_weights;
    out.v0 -= c_pf * s.site_operator * c_pf.transpose();
    out.v0 = 0.5 * (out.v0 + out.v0.transpose());
  }
  out.v0(0, 0) = std::max(out.v0(0, 0), 0.0);
  out.v0(1, 1) = std::max(out.v0(1, 1), 0.0);
  out.mq = out.m0[0];
  out.vq = out.v0(0, 0);
  if (state.options().disable_truncation) return out;

  const double g = worst_value;
  const double f_star = s.characteristics.robust_value;
  const double lower = g > f_star ? f_star : -kInf;
  const double tiny = 1e-14 * post.params().signal_variance;
  try {
    const bool same_point = (p.row(0) - p.row(1)).lpNorm<Eigen::Infinity>() <= 1e-12;
    if (out.v0(0, 0) <= tiny) return out;
    if (same_point || out.v0(1, 1) <= tiny) {
      // Both constraints act on one variable when theta = h(x); otherwise the
      // second coordinate is pinned and only the upper bound on the first
      // remains informative.
      const Truncated1d t =
          truncated_moments_1d(out.m0[0], out.v0(0, 0), same_point ? lower : -kInf, g);
      if (t.underflow || t.mass < 1e-12) throw NumericalError("conditioned_variance: empty box");
      out.mq = t.mean;
      out.vq = std::min(t.var, out.v0(0, 0));
      return out;
    }
    const BoxBounds box(Eigen::Vector2d(-kInf, lower), Eigen::Vector2d(g, g));
    const TruncatedMoments tm = truncated_moments_2d(out.m0, out.v0, box);
    out.mq = tm.mean[0];
    out.vq = std::min(tm.covariance(0, 0), out.v0(0, 0));
  } catch (const NumericalError&) {
    out.fallback = true;
    out.mq = out.m0[0];
    out.vq = out.v0(0, 0);
  }
  return out;
}

ConditionedPrediction conditioned_variance(const ResState& state, std::size_t sample_idx,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
  const InnerResult w = state.samples().at(sample_idx).worst_case(x);
  return conditioned_variance_at(state, sample_idx, x, theta, w.theta, w.value);
}

Eigen::VectorXd res_values_row(const ResState& state, const Eigen::VectorXd& x,
                               const Eigen::MatrixXd& thetas) {
  const GpPosterior& post = state.posterior();
  const SpaceSpec& space = state.space();
  const double noise = post.params().noise_variance;
  const Eigen::Index m = thetas.rows();

  Eigen::MatrixXd pts(m, space.model_dim());
  for (Eigen::Index j = 0; j < m; ++j)
    pts.row(j) = space.model_input(x, thetas.row(j).transpose()).transpose();
  Eigen::VectorXd mean, var;
  post.predict_marginal(pts, mean, var);

  const std::size_t c = state.samples().size();
  if (c == 0) return var;  // max-variance fallback

  Eigen::VectorXd entropy_sum = Eigen::VectorXd::Zero(m);
  for (std::size_t k = 0; k < c; ++k) {
    const InnerResult w = state.samples()[k].worst_case(x);
    for (Eigen::Index j = 0; j < m; ++j) {
      const ConditionedPrediction cp =
          conditioned_variance_at(state, k, x, thetas.row(j).transpose(), w.theta, w.value);
      entropy_sum[j] += std::log(cp.vq + noise);
    }
  }
  Eigen::VectorXd out(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = 0.5 * std::log(var[j] + noise) - entropy_sum[j] / (2.0 * static_cast<double>(c));
    out[j] = std::isfinite(a) ? std::max(a, 0.0) : 0.0;
  }
  return out;
}

double res_value(const ResState& state, const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd th(1, theta.size());
  th.row(0) = theta.transpose();
  return res_values_row(state, x, th)[0];
}

SpacePoint maximize_acquisition(const ResState& state, const AcqOptimOptions& opts) {
  SpaceFunction f;
  f.value = [&state](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    return res_value(state, x, th);
  };
  f.row = [&state](const Eigen::VectorXd& x, const Eigen::MatrixXd& ths) {
    return res_values_row(state, x, ths);
  };
  return maximize_over_space(f, state.space(), opts);
}

}  // namespace resbo
