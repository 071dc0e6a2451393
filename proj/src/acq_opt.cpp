#include "resbo/acq_opt.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace resbo {

Eigen::VectorXd SpaceFunction::eval_row(const Eigen::VectorXd& x,
                                        const Eigen::MatrixXd& thetas) const {
  if (row) return row(x, thetas);
  Eigen::VectorXd out(thetas.rows());
  for (Eigen::Index j = 0; j < thetas.rows(); ++j) out[j] = value(x, thetas.row(j).transpose());
  return out;
}

namespace {

Box joint_box(const Box& a, const Box& b) {
  Box out;
  out.lower.resize(a.dim() + b.dim());
  out.upper.resize(a.dim() + b.dim());
  out.lower << a.lower, b.lower;
  out.upper << a.upper, b.upper;
  return out;
}

}  // namespace

SpacePoint maximize_over_space(const SpaceFunction& f, const SpaceSpec& space,
                               const AcqOptimOptions& opts) {
  SpacePoint best;
  best.value = -std::numeric_limits<double>::infinity();
  const auto consider = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& th, double v) {
    if (v > best.value || best.x.size() == 0) {
      best.x = x;
      best.theta = th;
      best.value = v;
    }
  };
  NelderMeadOptions nm;
  nm.max_evaluations = opts.max_evals;
  nm.tol = opts.tol;
  const int restarts = std::max(1, opts.restarts);

  const Domain& xd = space.controllable;
  const Domain& td = space.uncontrollable;

  if (xd.is_discrete() && td.is_discrete()) {
    const auto& xs = xd.points().points;
    const auto& ts = td.points().points;
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const Eigen::VectorXd x = xs.row(i).transpose();
      const Eigen::VectorXd vals = f.eval_row(x, ts);
      for (Eigen::Index j = 0; j < ts.rows(); ++j) consider(x, ts.row(j).transpose(), vals[j]);
    }
    return best;
  }

  if (!xd.is_discrete() && td.is_discrete()) {
    const auto& ts = td.points().points;
    // Negative of the best value over theta at x; remembers nothing.
    const auto neg_row_max = [&](const Eigen::VectorXd& x) {
      return -f.eval_row(x, ts).maxCoeff();
    };
    const auto starts = screened_starts(neg_row_max, xd.box(), restarts, opts.screen, opts.seed);
    for (const auto& s : starts) {
      const OptimResult r = minimize_nelder_mead(neg_row_max, s, xd.box(), nm);
      const Eigen::VectorXd vals = f.eval_row(r.x, ts);
      Eigen::Index j = 0;
      vals.maxCoeff(&j);
      consider(r.x, ts.row(j).transpose(), vals[j]);
    }
    return best;
  }

  if (xd.is_discrete() && !td.is_discrete()) {
    // Screen random (x, theta) pairs, then polish theta at fixed x.
    const auto& xs = xd.points().points;
    std::mt19937_64 rng(opts.seed);
    struct Cand {
      Eigen::Index xi;
      Eigen::VectorXd theta;
      double value;
    };
    std::vector<Cand> cands;
    const int per_x = std::max(1, opts.screen / static_cast<int>(std::max<Eigen::Index>(1, xs.rows())));
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const Eigen::VectorXd x = xs.row(i).transpose();
      for (int k = 0; k < per_x; ++k) {
        const Eigen::VectorXd th = k == 0 ? td.box().center() : td.box().sample(rng);
        cands.push_back({i, th, f.value(x, th)});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& b) { return a.value > b.value; });
    for (int r = 0; r < restarts && r < static_cast<int>(cands.size()); ++r) {
      const Eigen::VectorXd x = xs.row(cands[r].xi).transpose();
      const auto neg = [&](const Eigen::VectorXd& th) { return -f.value(x, th); };
      const OptimResult res = minimize_nelder_mead(neg, cands[r].theta, td.box(), nm);
      consider(x, res.x, -res.value);
    }
    return best;
  }

  const Box box = joint_box(xd.box(), td.box());
  const Eigen::Index dx = xd.dim();
  const auto neg = [&](const Eigen::VectorXd& z) {
    return -f.value(z.head(dx), z.tail(z.size() - dx));
  };
  const auto starts = screened_starts(neg, box, restarts, opts.screen, opts.seed);
  for (const auto& s : starts) {
    const OptimResult r = minimize_nelder_mead(neg, s, box, nm);
    consider(r.x.head(dx), r.x.tail(r.x.size() - dx), -r.value);
  }
  return best;
}

}  // namespace resbo
