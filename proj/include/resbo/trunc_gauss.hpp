#pragma once

// Moments of box-truncated Gaussians.
//
// Univariate closed forms, bivariate doubly truncated moments and the
// bivariate normal CDF. All functions are pure.

#include <Eigen/Core>

#include <limits>
#include <stdexcept>

namespace resbo {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when a computation cannot produce a meaningful result, for example
/// a box with numerically zero probability mass.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double std_normal_pdf(double x);
double std_normal_cdf(double x);
/// Upper tail 1 - cdf(x), accurate for large x.
double std_normal_sf(double x);

/// Axis-aligned box; entries may be infinite. lower[i] < upper[i] is required.
struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxBounds() = default;
  BoxBounds(Eigen::VectorXd lo, Eigen::VectorXd hi);

  static BoxBounds unbounded(Eigen::Index dim);
  Eigen::Index size() const { return lower.size(); }
  bool contains(const Eigen::VectorXd& p) const;
};

/// P(X1 <= h, X2 <= k) for a standard bivariate normal with correlation rho.
double bivariate_normal_cdf(double h, double k, double rho);

/// Probability of `bounds` under a standard bivariate normal with correlation
/// rho. For |rho| >= 1 - 1e-9 the distribution is treated as degenerate on the
/// (anti)diagonal.
double bivariate_normal_mass(const BoxBounds& bounds, double rho);

struct Truncated1d {
  double mean = 0.0;
  double var = 0.0;
  double mass = 0.0;
  bool underflow = false;
};

/// Mean and variance of N(mean, var) restricted to [lower, upper].
/// If the mass drops below 1e-300 the result is flagged as underflow and the
/// interval midpoint (or the finite end) is returned with a tiny variance.
Truncated1d truncated_moments_1d(double mean, double var, double lower, double upper);

struct TruncatedMoments {
  Eigen::Vector2d mean;
  Eigen::Matrix2d covariance;
  double mass = 0.0;
};

/// Matched mean and covariance of N(mean, cov) restricted to a 2-D box.
/// Throws NumericalError when the box mass in standardized coordinates is
/// below 1e-12.
TruncatedMoments truncated_moments_2d(const Eigen::Vector2d& mean,
                                      const Eigen::Matrix2d& cov,
                                      const BoxBounds& bounds);

}  // namespace resbo
