#pragma once

// Sparse-spectrum (random Fourier feature) approximation of an SE-ARD GP.
// Posterior function samples are f(z) = a^T phi(z) with
// phi_i(z) = sqrt(2 sigma_v^2 / F) cos(w_i^T z + b_i).

#include "resbo/gp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <vector>

namespace resbo {

struct SpectralBasis {
  Eigen::MatrixXd frequencies;  // F x d
  Eigen::VectorXd phases;       // F, in [0, 2 pi)
  double signal_variance = 1.0;

  Eigen::Index num_features() const { return phases.size(); }
  Eigen::Index dim() const { return frequencies.cols(); }
  double amplitude() const;
  Eigen::VectorXd features(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// Rows are phi(inputs.row(i))^T.
  Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& inputs) const;
};

SpectralBasis build_basis(const KernelParams& params, int num_features, std::uint64_t seed);

class SpectralSample {
 public:
  SpectralSample(std::shared_ptr<const SpectralBasis> basis, Eigen::VectorXd weights);

  const SpectralBasis& basis() const { return *basis_; }
  std::shared_ptr<const SpectralBasis> basis_ptr() const { return basis_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// Value and gradient in one pass.
  double value_and_gradient(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::VectorXd& grad) const;

 private:
  std::shared_ptr<const SpectralBasis> basis_;
  Eigen::VectorXd weights_;
};

/// Draws weight vectors from N(A^{-1} Phi^T y, noise A^{-1}),
/// A = Phi^T Phi + noise I. With an empty dataset the weights are N(0, I).
std::vector<SpectralSample> draw_samples(std::shared_ptr<const SpectralBasis> basis,
                                         const Dataset& dataset, double noise_variance, int count,
                                         std::uint64_t seed);

}  // namespace resbo
