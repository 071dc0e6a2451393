#pragma once

// Robust Entropy Search acquisition.
//
// Per BO iteration (prepare_iteration): draw C analytic posterior samples,
// find each sample's robustness characteristics (h, g, f*), and condition the
// GP values at the training points on them with EP. Per query (res_value):
// predict jointly at (x, theta) and (x, h(x)), marginalize the EP result,
// truncate the bivariate prediction to the sample's bounds and compare
// predictive entropies.
//
// Cost per query is O(C t^2) for t training points plus one inner
// maximization of each sample; preparation is dominated by the nested
// min-max solve of each sample and an O(t^3) EP per sample.

#include "resbo/acq_opt.hpp"
#include "resbo/ep.hpp"
#include "resbo/gp.hpp"
#include "resbo/robust.hpp"
#include "resbo/space.hpp"
#include "resbo/ssgp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace resbo {

/// Evaluated points in (x, theta) form.
struct Observations {
  Eigen::MatrixXd x;      // t x d_c
  Eigen::MatrixXd theta;  // t x d_u
  Eigen::VectorXd y;

  Eigen::Index size() const { return y.size(); }
  void append(const Eigen::VectorXd& xi, const Eigen::VectorXd& ti, double yi);
};

/// GP training data for `obs` under the space's combine mode.
Dataset to_dataset(const Observations& obs, const SpaceSpec& space);

struct ResOptions {
  int num_samples = 1;      // C
  int num_features = 500;   // F
  RobustOptions robust;
  EpOptions ep;
  /// Skip EP and the final truncation; the acquisition is then identically 0.
  bool disable_truncation = false;
  /// Bound the first t stacked values below by 0 instead of -inf.
  bool literal_zero_lower = false;
};

struct ResSample {
  std::optional<SpectralSample> sample;
  RobustCharacteristics characteristics;
  /// (h(x), g(x)) in one inner maximization.
  std::function<InnerResult(const Eigen::VectorXd& x)> worst_case;
  EpResult ep;
  Eigen::MatrixXd stacked_inputs;  // 2t x D: training inputs, then (x_i, h(x_i))
  Eigen::VectorXd train_max_values;
  Eigen::MatrixXd train_solve;     // (K + noise I)^{-1} k(Z, stacked)
  Eigen::MatrixXd site_operator;   // S^{1/2} B^{-1} S^{1/2}
  Eigen::VectorXd site_weights;
};

class ResState {
 public:
  const GpPosterior& posterior() const { return posterior_; }
  const SpaceSpec& space() const { return space_; }
  const Observations& observations() const { return obs_; }
  const std::vector<ResSample>& samples() const { return samples_; }
  const ResOptions& options() const { return opts_; }
  int requested_samples() const { return requested_; }
  int dropped_samples() const { return dropped_; }
  int inconsistencies() const { return inconsistencies_; }

 private:
  friend ResState build_res_state(const GpPosterior&, const Observations&, const SpaceSpec&,
                                  std::vector<std::pair<RobustCharacteristics,
                                                        std::optional<SpectralSample>>>,
                                  const ResOptions&);
  GpPosterior posterior_;
  SpaceSpec space_;
  Observations obs_;
  ResOptions opts_;
  std::vector<ResSample> samples_;
  int requested_ = 0;
  int dropped_ = 0;
  int inconsistencies_ = 0;
};

/// Builds the state from given robustness characteristics (one per sample).
/// prepare_iteration uses this after sampling; tests can pass hand-built
/// characteristics.
ResState build_res_state(
    const GpPosterior& posterior, const Observations& obs, const SpaceSpec& space,
    std::vector<std::pair<RobustCharacteristics, std::optional<SpectralSample>>> characteristics,
    const ResOptions& opts);

/// Draws C posterior samples on a fresh feature basis and solves each
/// sample's min-max problem.
std::vector<std::pair<RobustCharacteristics, std::optional<SpectralSample>>> sample_characteristics(
    const GpPosterior& posterior, const SpaceSpec& space, const ResOptions& opts,
    std::uint64_t seed);

/// sample_characteristics followed by build_res_state.
ResState prepare_iteration(const GpPosterior& posterior, const Observations& obs,
                           const SpaceSpec& space, const ResOptions& opts, std::uint64_t seed);

struct ConditionedPrediction {
  Eigen::Vector2d m0;
  Eigen::Matrix2d v0;
  double mq = 0.0;
  double vq = 0.0;
  bool fallback = false;  // truncation failed; vq = v0(0, 0)
};

ConditionedPrediction conditioned_variance(const ResState& state, std::size_t sample_idx,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& theta);

/// Conditioned prediction with the worst-case parameter h(x) and g(x) already
/// known; lets callers share one inner maximization across many theta.
ConditionedPrediction conditioned_variance_at(const ResState& state, std::size_t sample_idx,
                                              const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& theta,
                                              const Eigen::VectorXd& worst_theta,
                                              double worst_value);

double res_value(const ResState& state, const Eigen::VectorXd& x, const Eigen::VectorXd& theta);

/// res_value for every row of `thetas` at one x.
Eigen::VectorXd res_values_row(const ResState& state, const Eigen::VectorXd& x,
                               const Eigen::MatrixXd& thetas);

SpacePoint maximize_acquisition(const ResState& state, const AcqOptimOptions& opts = {});

}  // namespace resbo
