#pragma once

// Comparison acquisition functions on the same GP posterior. All selectors
// return a point (x, theta) of the search space; "value" is the criterion
// at that point.

#include "resbo/acq_opt.hpp"
#include "resbo/gp.hpp"
#include "resbo/robust.hpp"
#include "resbo/space.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace resbo {

enum class BaselineKind { kStableOpt, kUcb, kEi, kMes, kKg };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kUcb;
  double beta_sqrt = 2.0;
  int mes_num_mins = 100;
  int mes_num_features = 500;
  int kg_grid_per_dim = 50;
  int kg_num_samples = 32;
  int kg_max_points = 2500;  // larger grids are randomly subsampled

  void validate() const;
};

std::string to_string(BaselineKind kind);
/// Throws std::invalid_argument on an unknown name.
BaselineKind baseline_kind_from_string(const std::string& name);

/// m(z) + sign * beta_sqrt * sqrt(v(z)), with gradient.
ModelFunction confidence_bound_function(const GpPosterior& posterior, double beta_sqrt,
                                        double sign);

/// argmin over the space of m - beta_sqrt * sqrt(v).
SpacePoint ucb_select(const GpPosterior& posterior, const SpaceSpec& space, double beta_sqrt,
                      const AcqOptimOptions& opts = {});

/// x = argmin_x max_theta LCB(x, theta), then theta = argmax_theta UCB(x, theta).
SpacePoint stableopt_select(const GpPosterior& posterior, const SpaceSpec& space, double beta_sqrt,
                            const RobustOptions& opts = {});

/// Expected improvement below `incumbent` for a minimization problem.
double expected_improvement(double mean, double variance, double incumbent);

SpacePoint ei_select(const GpPosterior& posterior, const SpaceSpec& space, double incumbent,
                     const AcqOptimOptions& opts = {});

/// Max-value entropy search for minimization, averaged over sampled minima.
double mes_value(double mean, double variance, const Eigen::VectorXd& sampled_minima);

/// Minimum values of `count` posterior samples over the whole space.
Eigen::VectorXd sample_minima(const GpPosterior& posterior, const SpaceSpec& space, int count,
                              int num_features, std::uint64_t seed);

SpacePoint mes_select(const GpPosterior& posterior, const SpaceSpec& space, int num_mins,
                      std::uint64_t seed, int num_features = 500,
                      const AcqOptimOptions& opts = {});

/// Random grid for the knowledge gradient: grid_per_dim^d uniform points per
/// continuous factor, all points of a finite factor, crossed and subsampled
/// to at most max_points. Returns model inputs split as (x rows, theta rows).
struct KgGrid {
  Eigen::MatrixXd x;
  Eigen::MatrixXd theta;
};
KgGrid kg_grid(const SpaceSpec& space, int grid_per_dim, int max_points, std::uint64_t seed);

/// Knowledge gradient of each grid point with respect to the grid itself,
/// estimated with `num_samples` fantasy observations shared by all points.
Eigen::VectorXd kg_values(const GpPosterior& posterior, const SpaceSpec& space, const KgGrid& grid,
                          int num_samples, std::uint64_t seed);

SpacePoint kg_select(const GpPosterior& posterior, const SpaceSpec& space, int grid_per_dim,
                     int num_samples, std::uint64_t seed, int max_points = 2500);

/// Dispatches on cfg.kind. `incumbent` is used by EI only.
SpacePoint baseline_select(const BaselineConfig& cfg, const GpPosterior& posterior,
                           const SpaceSpec& space, double incumbent, std::uint64_t seed,
                           const AcqOptimOptions& acq_opts, const RobustOptions& robust_opts);

}  // namespace resbo
