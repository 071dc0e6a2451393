#include "resbo/robust.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace resbo {

MinMaxObjective compose(const ModelFunction& f, const SpaceSpec& space) {
  MinMaxObjective out;
  out.value = [f, space](const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
    return f.value(space.model_input(x, theta));
  };
  if (f.value_grad) {
    out.value_grad = [f, space](const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                Eigen::VectorXd& grad_theta) {
      Eigen::VectorXd g;
      const double v = f.value_grad(space.model_input(x, theta), g);
      grad_theta = space.theta_gradient(x, theta, g);
      return v;
    };
  }
  return out;
}

namespace {

constexpr std::uint64_t kInnerSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

InnerResult inner_max(const MinMaxObjective& f, const Eigen::VectorXd& x, const SpaceSpec& space,
                      const RobustOptions& opts) {
  InnerResult best;
  best.value = -std::numeric_limits<double>::infinity();
  const Domain& dom = space.uncontrollable;
  if (dom.is_discrete()) {
    const auto& pts = dom.points().points;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const Eigen::VectorXd th = pts.row(i).transpose();
      const double v = f.value(x, th);
      if (v > best.value || best.theta.size() == 0) {
        best.value = v;
        best.theta = th;
      }
    }
    return best;
  }

  const Box& box = dom.box();
  const auto neg = [&](const Eigen::VectorXd& th) { return -f.value(x, th); };
  const int pool = 4 * std::max(1, opts.inner_restarts);
  const auto starts =
      screened_starts(neg, box, std::max(1, opts.inner_restarts), pool, opts.seed ^ kInnerSalt);
  for (const auto& s : starts) {
    OptimResult r;
    if (f.value_grad) {
      BfgsOptions bo;
      bo.max_iterations = opts.inner_max_iter;
      bo.grad_tol = opts.tol;
      r = minimize_bfgs_box(
          [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
            const double v = f.value_grad(x, th, g);
            g = -g;
            return -v;
          },
          s, box, bo);
    } else {
      NelderMeadOptions no;
      no.max_evaluations = 20 * opts.inner_max_iter;
      no.tol = opts.tol;
      r = minimize_nelder_mead(neg, s, box, no);
    }
    if (-r.value > best.value) {
      best.value = -r.value;
      best.theta = r.x;
    }
  }
  // Report the value along the plain evaluation path so g(x) = f(x, h(x)).
  best.value = f.value(x, best.theta);
  return best;
}

RobustCharacteristics robust_optimum(const MinMaxObjective& f, const SpaceSpec& space,
                                     const RobustOptions& opts) {
  RobustCharacteristics rc;
  rc.argmax_fn = [f, space, opts](const Eigen::VectorXd& x) {
    return inner_max(f, x, space, opts).theta;
  };
  rc.max_fn = [f, space, opts](const Eigen::VectorXd& x) {
    return inner_max(f, x, space, opts).value;
  };
  const auto g = [&](const Eigen::VectorXd& x) { return inner_max(f, x, space, opts).value; };

  const Domain& dom = space.controllable;
  Eigen::VectorXd best_x;
  double best_val = std::numeric_limits<double>::infinity();
  if (dom.is_discrete()) {
    const auto& pts = dom.points().points;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const Eigen::VectorXd x = pts.row(i).transpose();
      const double v = g(x);
      if (v < best_val || best_x.size() == 0) {
        best_val = v;
        best_x = x;
      }
    }
  } else {
    const Box& box = dom.box();
    const auto starts =
        screened_starts(g, box, std::max(1, opts.outer_restarts), opts.outer_screen, opts.seed);
    NelderMeadOptions no;
    no.max_evaluations = opts.outer_max_evals;
    no.tol = opts.tol;
    for (const auto& s : starts) {
      const OptimResult r = minimize_nelder_mead(g, s, box, no);
      if (r.value < best_val || best_x.size() == 0) {
        best_val = r.value;
        best_x = r.x;
      }
    }
  }
  const InnerResult inner = inner_max(f, best_x, space, opts);
  rc.robust_x = best_x;
  rc.robust_theta = inner.theta;
  rc.robust_value = inner.value;
  return rc;
}

ModelFunction posterior_mean_function(const GpPosterior& posterior) {
  ModelFunction mf;
  mf.value = [&posterior](const Eigen::VectorXd& z) { return posterior.predict_mean(z); };
  mf.value_grad = [&posterior](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    const auto& data = posterior.dataset();
    const auto& p = posterior.params();
    grad = Eigen::VectorXd::Zero(z.size());
    if (data.size() == 0) return 0.0;
    const Eigen::ArrayXd inv_l2 = p.lengthscales.array().square().inverse();
    double m = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const Eigen::VectorXd xi = data.inputs.row(i).transpose();
      const double k = kernel_eval(xi, z, p) * posterior.alpha()[i];
      m += k;
      grad.array() -= (z - xi).array() * inv_l2 * k;
    }
    return m;
  };
  return mf;
}

ReportedOptimum report_optimum(const GpPosterior& posterior, const SpaceSpec& space,
                               const RobustOptions& opts) {
  const RobustCharacteristics rc =
      robust_optimum(compose(posterior_mean_function(posterior), space), space, opts);
  return ReportedOptimum{rc.robust_x, rc.robust_theta, rc.robust_value};
}

}  // namespace resbo
