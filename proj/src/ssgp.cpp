#include "resbo/ssgp.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace resbo {

double SpectralBasis::amplitude() const {
  return std::sqrt(2.0 * signal_variance / static_cast<double>(num_features()));
}

Eigen::VectorXd SpectralBasis::features(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != dim()) throw std::invalid_argument("SpectralBasis: point dimension mismatch");
  return amplitude() * ((frequencies * z).array() + phases.array()).cos().matrix();
}

Eigen::MatrixXd SpectralBasis::feature_matrix(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != dim()) throw std::invalid_argument("SpectralBasis: input dimension mismatch");
  Eigen::MatrixXd arg = inputs * frequencies.transpose();
  arg.rowwise() += phases.transpose();
  return amplitude() * arg.array().cos().matrix();
}

SpectralBasis build_basis(const KernelParams& params, int num_features, std::uint64_t seed) {
  params.validate();
  if (num_features < 1) throw std::invalid_argument("build_basis: need at least one feature");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  SpectralBasis basis;
  basis.signal_variance = params.signal_variance;
  basis.frequencies.resize(num_features, params.dim());
  basis.phases.resize(num_features);
  // The spectral density of the SE-ARD kernel is N(0, diag(1 / l^2)).
  for (int i = 0; i < num_features; ++i) {
    for (Eigen::Index d = 0; d < params.dim(); ++d)
      basis.frequencies(i, d) = normal(rng) / params.lengthscales[d];
    double b = uniform(rng);
    if (b >= 2.0 * std::numbers::pi) b = 0.0;
    basis.phases[i] = b;
  }
  return basis;
}

SpectralSample::SpectralSample(std::shared_ptr<const SpectralBasis> basis, Eigen::VectorXd weights)
    : basis_(std::move(basis)), weights_(std::move(weights)) {
  if (!basis_ || weights_.size() != basis_->num_features())
    throw std::invalid_argument("SpectralSample: weights do not match basis");
}

double SpectralSample::operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  return weights_.dot(basis_->features(z));
}

double SpectralSample::value_and_gradient(const Eigen::Ref<const Eigen::VectorXd>& z,
                                          Eigen::VectorXd& grad) const {
  if (z.size() != basis_->dim()) throw std::invalid_argument("SpectralSample: dimension mismatch");
  const Eigen::ArrayXd arg = (basis_->frequencies * z).array() + basis_->phases.array();
  const double amp = basis_->amplitude();
  const Eigen::ArrayXd wa = weights_.array() * amp;
  grad = -(basis_->frequencies.transpose() * (wa * arg.sin()).matrix());
  return (wa * arg.cos()).sum();
}

Eigen::VectorXd SpectralSample::gradient(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  Eigen::VectorXd g;
  value_and_gradient(z, g);
  return g;
}

std::vector<SpectralSample> draw_samples(std::shared_ptr<const SpectralBasis> basis,
                                         const Dataset& dataset, double noise_variance, int count,
                                         std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("draw_samples: count must be >= 1");
  const Eigen::Index f = basis->num_features();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto standard = [&]() {
    Eigen::VectorXd e(f);
    for (Eigen::Index i = 0; i < f; ++i) e[i] = normal(rng);
    return e;
  };

  std::vector<SpectralSample> out;
  out.reserve(static_cast<std::size_t>(count));
  if (dataset.size() == 0) {
    for (int c = 0; c < count; ++c) out.emplace_back(basis, standard());
    return out;
  }
  if (!(noise_variance > 0.0))
    throw std::invalid_argument("draw_samples: noise variance must be positive with data");

  const Eigen::MatrixXd phi = basis->feature_matrix(dataset.inputs);  // n x F
  Eigen::MatrixXd a = phi.transpose() * phi;
  a.diagonal().array() += noise_variance;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("draw_samples: A is not positive definite");
  const Eigen::VectorXd mean = llt.solve(phi.transpose() * dataset.observations);
  const double sd = std::sqrt(noise_variance);
  // a = mean + sd L^{-T} e has covariance noise A^{-1}.
  for (int c = 0; c < count; ++c) {
    Eigen::VectorXd e = standard();
    llt.matrixU().solveInPlace(e);
    out.emplace_back(basis, mean + sd * e);
  }
  return out;
}

}  // namespace resbo
