#pragma once

// Search spaces for min-max problems: controllable parameters x and
// uncontrollable parameters theta, each continuous (a box) or a finite set.

#include "resbo/optimize.hpp"

#include <Eigen/Core>

#include <optional>
#include <random>
#include <variant>

namespace resbo {

/// Finite point set; rows are points.
struct PointSet {
  Eigen::MatrixXd points;
  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

class Domain {
 public:
  Domain() = default;
  Domain(Box box);
  Domain(PointSet set);

  static Domain continuous(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static Domain discrete(Eigen::MatrixXd points);

  bool is_discrete() const { return std::holds_alternative<PointSet>(repr_); }
  Eigen::Index dim() const;
  const Box& box() const { return std::get<Box>(repr_); }
  const PointSet& points() const { return std::get<PointSet>(repr_); }
  /// Bounding box (for discrete sets, the hull of the points).
  Box bounding_box() const;
  Eigen::VectorXd sample(std::mt19937_64& rng) const;
  bool contains(const Eigen::VectorXd& p, double tol = 1e-12) const;

 private:
  std::variant<Box, PointSet> repr_;
};

enum class CombineMode {
  kConcatenate,  // model input z = (x, theta)
  kAdditive,     // model input z = clip(x + theta)
};

struct SpaceSpec {
  Domain controllable;
  Domain uncontrollable;
  CombineMode mode = CombineMode::kConcatenate;
  /// Domain that x + theta is clipped to in additive mode.
  std::optional<Box> additive_domain;

  SpaceSpec() = default;
  SpaceSpec(Domain x, Domain theta, CombineMode m = CombineMode::kConcatenate,
            std::optional<Box> clip = std::nullopt);

  Eigen::Index dim_x() const { return controllable.dim(); }
  Eigen::Index dim_theta() const { return uncontrollable.dim(); }
  /// Dimension of the GP input.
  Eigen::Index model_dim() const;
  Eigen::VectorXd model_input(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const;
  /// Jacobian-vector product: gradient w.r.t. theta from gradient w.r.t. the
  /// model input, evaluated at (x, theta).
  Eigen::VectorXd theta_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& model_grad) const;
  void validate() const;
};

}  // namespace resbo
