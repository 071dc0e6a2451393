#include "resbo/space.hpp"

#include <stdexcept>

namespace resbo {

Domain::Domain(Box box) : repr_(std::move(box)) {}
Domain::Domain(PointSet set) : repr_(std::move(set)) {}

Domain Domain::continuous(Eigen::VectorXd lower, Eigen::VectorXd upper) {
  if (lower.size() != upper.size()) throw std::invalid_argument("Domain: bound size mismatch");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i])) throw std::invalid_argument("Domain: lower > upper");
  return Domain(Box{std::move(lower), std::move(upper)});
}

Domain Domain::discrete(Eigen::MatrixXd points) {
  if (points.rows() == 0) throw std::invalid_argument("Domain: empty point set");
  return Domain(PointSet{std::move(points)});
}

Eigen::Index Domain::dim() const { return is_discrete() ? points().dim() : box().dim(); }

Box Domain::bounding_box() const {
  if (!is_discrete()) return box();
  return Box{points().points.colwise().minCoeff().transpose(),
             points().points.colwise().maxCoeff().transpose()};
}

Eigen::VectorXd Domain::sample(std::mt19937_64& rng) const {
  if (!is_discrete()) return box().sample(rng);
  std::uniform_int_distribution<Eigen::Index> pick(0, points().size() - 1);
  return points().points.row(pick(rng)).transpose();
}

bool Domain::contains(const Eigen::VectorXd& p, double tol) const {
  if (p.size() != dim()) return false;
  if (!is_discrete()) {
    const Box& b = box();
    return ((p - b.lower).array() >= -tol).all() && ((b.upper - p).array() >= -tol).all();
  }
  for (Eigen::Index i = 0; i < points().size(); ++i)
    if ((points().points.row(i).transpose() - p).lpNorm<Eigen::Infinity>() <= tol) return true;
  return false;
}

SpaceSpec::SpaceSpec(Domain x, Domain theta, CombineMode m, std::optional<Box> clip)
    : controllable(std::move(x)), uncontrollable(std::move(theta)), mode(m),
      additive_domain(std::move(clip)) {
  validate();
}

void SpaceSpec::validate() const {
  if (controllable.dim() < 1 || uncontrollable.dim() < 1)
    throw std::invalid_argument("SpaceSpec: both parameter groups need dimension >= 1");
  if (mode == CombineMode::kAdditive && controllable.dim() != uncontrollable.dim())
    throw std::invalid_argument("SpaceSpec: additive mode requires equal dimensions");
  if (additive_domain && additive_domain->dim() != controllable.dim())
    throw std::invalid_argument("SpaceSpec: additive domain has wrong dimension");
}

Eigen::Index SpaceSpec::model_dim() const {
  return mode == CombineMode::kConcatenate ? dim_x() + dim_theta() : dim_x();
}

Eigen::VectorXd SpaceSpec::model_input(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& theta) const {
  if (mode == CombineMode::kConcatenate) {
    Eigen::VectorXd z(x.size() + theta.size());
    z << x, theta;
    return z;
  }
  Eigen::VectorXd z = x + theta;
  return additive_domain ? additive_domain->clip(z) : z;
}

Eigen::VectorXd SpaceSpec::theta_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                          const Eigen::VectorXd& model_grad) const {
  if (mode == CombineMode::kConcatenate) return model_grad.tail(theta.size());
  Eigen::VectorXd g = model_grad;
  if (additive_domain) {
    const Eigen::VectorXd z = x + theta;
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (z[i] < additive_domain->lower[i] || z[i] > additive_domain->upper[i]) g[i] = 0.0;
  }
  return g;
}

}  // namespace resbo
