#include "resbo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace resbo {

Eigen::VectorXd Box::clip(const Eigen::VectorXd& p) const {
  return p.cwiseMax(lower).cwiseMin(upper);
}

Eigen::VectorXd Box::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) p[i] = lower[i] + u(rng) * (upper[i] - lower[i]);
  return p;
}

namespace {

// Gradient with components that point out of the box at active bounds removed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Box& box) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= box.lower[i] && g[i] > 0.0) || (x[i] >= box.upper[i] && g[i] < 0.0)) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace

OptimResult minimize_bfgs_box(const GradObjective& f, const Eigen::VectorXd& x0, const Box& box,
                              const BfgsOptions& opts) {
  const Eigen::Index n = x0.size();
  OptimResult res;
  res.x = box.clip(x0);
  Eigen::VectorXd g(n);
  res.value = f(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) return res;

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool first = true;
  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    const Eigen::VectorXd pg = projected_gradient(res.x, g, box);
    if (pg.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      break;
    }
    // Free variables are those not pinned at a bound by the gradient.
    Eigen::VectorXd free = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i)
      if (pg[i] == 0.0 && g[i] != 0.0) free[i] = 0.0;

    Eigen::VectorXd d = -(h * pg);
    d = d.cwiseProduct(free);
    if (g.dot(d) >= 0.0) {
      h.setIdentity();
      d = -pg;
    }
    double step = 1.0;
    if (first) {
      const double width = (box.upper - box.lower).cwiseAbs().maxCoeff();
      const double dn = d.lpNorm<Eigen::Infinity>();
      if (dn > 0.0) step = std::min(1.0, 0.1 * width / dn);
      first = false;
    }

    Eigen::VectorXd x_new, g_new(n);
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = box.clip(res.x + step * d);
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * g.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // no descent possible along the projected path
      break;
    }
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double improvement = res.value - f_new;
    res.x = x_new;
    res.value = f_new;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      h = (id - rho * s * y.transpose()) * h * (id - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    if (s.lpNorm<Eigen::Infinity>() < opts.step_tol &&
        improvement <= 1e-14 * (1.0 + std::abs(res.value))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

OptimResult minimize_nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Box& box,
                                 const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  OptimResult res;
  std::vector<Eigen::VectorXd> simplex(n + 1);
  std::vector<double> values(n + 1);
  auto eval = [&](const Eigen::VectorXd& p) {
    ++res.evaluations;
    const double v = f(p);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  simplex[0] = box.clip(x0);
  values[0] = eval(simplex[0]);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd p = simplex[0];
    const double width = box.upper[i] - box.lower[i];
    double step = opts.initial_step * (width > 0.0 ? width : 1.0);
    if (p[i] + step > box.upper[i]) step = -step;
    p[i] += step;
    simplex[i + 1] = box.clip(p);
    values[i + 1] = eval(simplex[i + 1]);
  }

  std::vector<int> order(n + 1);
  while (res.evaluations < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] < values[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[n - 1];

    double size = 0.0;
    for (Eigen::Index i = 0; i <= n; ++i)
      size = std::max(size, (simplex[i] - simplex[best]).lpNorm<Eigen::Infinity>());
    if (size < opts.tol && values[worst] - values[best] < opts.tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i <= n; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = box.clip(centroid + (centroid - simplex[worst]));
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Eigen::VectorXd expanded = box.clip(centroid + 2.0 * (centroid - simplex[worst]));
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd contracted =
        outside ? box.clip(centroid + 0.5 * (reflected - centroid))
                : box.clip(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < std::min(fr, values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
    ++res.iterations;
  }
  const auto it = std::min_element(values.begin(), values.end());
  res.x = simplex[static_cast<std::size_t>(it - values.begin())];
  res.value = *it;
  return res;
}

std::vector<Eigen::VectorXd> screened_starts(const Objective& f, const Box& box, int count,
                                             int pool, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> candidates;
  candidates.reserve(static_cast<std::size_t>(pool) + 1);
  candidates.push_back(box.center());
  for (int i = 0; i < pool; ++i) candidates.push_back(box.sample(rng));
  std::vector<double> values(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) values[i] = f(candidates[i]);
  std::vector<std::size_t> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < count && i < static_cast<int>(idx.size()); ++i) out.push_back(candidates[idx[i]]);
  return out;
}

}  // namespace resbo
