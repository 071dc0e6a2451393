#include "resbo/gp.hpp"

#include <cmath>
#include <stdexcept>

namespace resbo {

void KernelParams::validate() const {
  if (!(signal_variance > 0.0)) throw std::invalid_argument("KernelParams: signal_variance <= 0");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("KernelParams: noise_variance < 0");
  if (lengthscales.size() == 0) throw std::invalid_argument("KernelParams: no lengthscales");
  for (Eigen::Index d = 0; d < lengthscales.size(); ++d)
    if (!(lengthscales[d] > 0.0)) throw std::invalid_argument("KernelParams: lengthscale <= 0");
}

namespace {

void check_dims(Eigen::Index a, Eigen::Index b, const KernelParams& params) {
  if (a != params.dim() || b != params.dim())
    throw std::invalid_argument("kernel: point dimension does not match lengthscales");
}

}  // namespace

double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& p1,
                   const Eigen::Ref<const Eigen::VectorXd>& p2, const KernelParams& params) {
  check_dims(p1.size(), p2.size(), params);
  const double r2 = ((p1 - p2).array() / params.lengthscales.array()).square().sum();
  return params.signal_variance * std::exp(-0.5 * r2);
}

Eigen::VectorXd kernel_grad_lengthscales(const Eigen::Ref<const Eigen::VectorXd>& p1,
                                         const Eigen::Ref<const Eigen::VectorXd>& p2,
                                         const KernelParams& params) {
  const double k = kernel_eval(p1, p2, params);
  const Eigen::ArrayXd l = params.lengthscales.array();
  return (k * (p1 - p2).array().square() / (l * l * l)).matrix();
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelParams& params) {
  check_dims(a.cols(), b.cols(), params);
  const Eigen::ArrayXd inv_l = params.lengthscales.array().inverse();
  const Eigen::MatrixXd as = a * inv_l.matrix().asDiagonal();
  const Eigen::MatrixXd bs = b * inv_l.matrix().asDiagonal();
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out(i, j) = params.signal_variance * std::exp(-0.5 * (as.row(i) - bs.row(j)).squaredNorm());
    }
  }
  return out;
}

}  // namespace resbo
