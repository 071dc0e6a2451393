#include "resbo/trunc_gauss.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace resbo {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kDegenerateRho = 1.0 - 1e-9;

// Gauss-Legendre rule on [-1, 1] with N nodes, applied to f.
template <unsigned N, typename F>
double gauss_legendre(F&& f) {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      sum += w[i] * f(0.0);
    } else {
      sum += w[i] * (f(x[i]) + f(-x[i]));
    }
  }
  return sum;
}

template <typename F>
double gauss_legendre_for_rho(double abs_rho, F&& f) {
  if (abs_rho < 0.3) return gauss_legendre<6>(f);
  if (abs_rho < 0.75) return gauss_legendre<12>(f);
  return gauss_legendre<20>(f);
}

// Upper orthant probability P(X > h, Y > k) for finite h, k (Genz's BVND).
double bvn_upper(double h, double k, double r) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = std::asin(r);
    bvn = gauss_legendre_for_rho(std::abs(r), [&](double x) {
      const double sn = std::sin(0.5 * asr * (x + 1.0));
      return std::exp((sn * hk - hs) / (1.0 - sn * sn));
    });
    return bvn * asr / (2.0 * two_pi) + std_normal_cdf(-h) * std_normal_cdf(-k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  const double as = (1.0 - r) * (1.0 + r);
  double a = std::sqrt(as);
  const double bs = (h - k) * (h - k);
  const double c = (4.0 - hk) / 8.0;
  const double d = (12.0 - hk) / 16.0;
  double asr = -0.5 * (bs / as + hk);
  if (asr > -100.0)
    bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
  if (hk > -100.0) {
    const double b = std::sqrt(bs);
    const double sp = std::sqrt(two_pi) * std_normal_cdf(-b / a);
    bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
  }
  a *= 0.5;
  bvn += gauss_legendre<20>([&](double x) {
    const double xs = (a * (x + 1.0)) * (a * (x + 1.0));
    const double rs = std::sqrt(1.0 - xs);
    const double e = -0.5 * (bs / xs + hk);
    if (!(e > -100.0)) return 0.0;
    return a * std::exp(e) *
           (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
  });
  bvn = -bvn / two_pi;
  if (r > 0.0) return bvn + std_normal_cdf(-std::max(h, k));
  return -bvn + std::max(0.0, std_normal_cdf(-h) - std_normal_cdf(-k));
}

// Standard bivariate normal density.
double bvn_pdf(double x, double y, double rho) {
  if (!std::isfinite(x) || !std::isfinite(y)) return 0.0;
  const double one_m = 1.0 - rho * rho;
  const double q = (x * x - 2.0 * rho * x * y + y * y) / one_m;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(one_m));
}

// x * g(x) with the convention that the product vanishes at infinity.
double times_finite(double x, double g) { return std::isfinite(x) ? x * g : 0.0; }

}  // namespace

double std_normal_pdf(double x) {
  if (!std::isfinite(x)) return 0.0;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

BoxBounds::BoxBounds(Eigen::VectorXd lo, Eigen::VectorXd hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("BoxBounds: lower and upper differ in length");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i]))
      throw std::invalid_argument("BoxBounds: lower bound must be strictly below upper bound");
  }
}

BoxBounds BoxBounds::unbounded(Eigen::Index dim) {
  return BoxBounds(Eigen::VectorXd::Constant(dim, -kInf), Eigen::VectorXd::Constant(dim, kInf));
}

bool BoxBounds::contains(const Eigen::VectorXd& p) const {
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] < lower[i] || p[i] > upper[i]) return false;
  return true;
}

double bivariate_normal_cdf(double h, double k, double rho) {
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf) return std_normal_cdf(k);
  if (k == kInf) return std_normal_cdf(h);
  if (rho >= kDegenerateRho) return std_normal_cdf(std::min(h, k));
  if (rho <= -kDegenerateRho) return std::max(0.0, std_normal_cdf(h) - std_normal_cdf(-k));

  return std::clamp(bvn_upper(-h, -k, rho), 0.0, 1.0);
}

double bivariate_normal_mass(const BoxBounds& bounds, double rho) {
  if (bounds.size() != 2) throw std::invalid_argument("bivariate_normal_mass: box must be 2-D");
  double l1 = bounds.lower[0], u1 = bounds.upper[0];
  double l2 = bounds.lower[1], u2 = bounds.upper[1];

  if (std::abs(rho) >= kDegenerateRho) {
    // X2 = sign(rho) X1: intersect the two intervals along the diagonal.
    const double sgn = rho > 0.0 ? 1.0 : -1.0;
    const double a = std::max(l1, sgn > 0 ? l2 : -u2);
    const double b = std::min(u1, sgn > 0 ? u2 : -l2);
    if (!(a < b)) return 0.0;
    return a > 0.0 ? std_normal_sf(a) - std_normal_sf(b) : std_normal_cdf(b) - std_normal_cdf(a);
  }

  // Reflect coordinates whose box sits in the upper tail so that the corner
  // sum below works with small CDF values.
  if (l1 + u1 > 0.0) {
    std::swap(l1, u1);
    l1 = -l1;
    u1 = -u1;
    rho = -rho;
  }
  if (l2 + u2 > 0.0) {
    std::swap(l2, u2);
    l2 = -l2;
    u2 = -u2;
    rho = -rho;
  }
  const double mass = bivariate_normal_cdf(u1, u2, rho) - bivariate_normal_cdf(l1, u2, rho) -
                      bivariate_normal_cdf(u1, l2, rho) + bivariate_normal_cdf(l1, l2, rho);
  return std::clamp(mass, 0.0, 1.0);
}

Truncated1d truncated_moments_1d(double mean, double var, double lower, double upper) {
  if (!(var > 0.0)) throw std::invalid_argument("truncated_moments_1d: variance must be positive");
  if (!(lower < upper)) throw std::invalid_argument("truncated_moments_1d: empty interval");
  const double sd = std::sqrt(var);
  const double a = (lower - mean) / sd;
  const double b = (upper - mean) / sd;

  const double z = a > 0.0 ? std_normal_sf(a) - std_normal_sf(b)
                           : std_normal_cdf(b) - std_normal_cdf(a);
  Truncated1d out;
  out.mass = z;
  if (!(z >= 1e-300)) {
    out.underflow = true;
    if (std::isfinite(lower) && std::isfinite(upper))
      out.mean = 0.5 * (lower + upper);
    else
      out.mean = std::isfinite(lower) ? lower : upper;
    out.var = 1e-12 * var;
    return out;
  }
  const double pa = std_normal_pdf(a);
  const double pb = std_normal_pdf(b);
  const double shift = (pa - pb) / z;
  double scale = 1.0 + (times_finite(a, pa) - times_finite(b, pb)) / z - shift * shift;
  scale = std::clamp(scale, 0.0, 1.0);
  out.mean = std::clamp(mean + sd * shift, lower, upper);
  out.var = var * scale;
  return out;
}

TruncatedMoments truncated_moments_2d(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                      const BoxBounds& bounds) {
  if (bounds.size() != 2) throw std::invalid_argument("truncated_moments_2d: box must be 2-D");
  if (!(cov(0, 0) > 0.0 && cov(1, 1) > 0.0))
    throw std::invalid_argument("truncated_moments_2d: covariance must be positive definite");

  const Eigen::Vector2d sd(std::sqrt(cov(0, 0)), std::sqrt(cov(1, 1)));
  const double rho = std::clamp(0.5 * (cov(0, 1) + cov(1, 0)) / (sd[0] * sd[1]), -1.0, 1.0);
  const double a1 = (bounds.lower[0] - mean[0]) / sd[0];
  const double b1 = (bounds.upper[0] - mean[0]) / sd[0];
  const double a2 = (bounds.lower[1] - mean[1]) / sd[1];
  const double b2 = (bounds.upper[1] - mean[1]) / sd[1];

  TruncatedMoments out;
  if (std::abs(rho) >= kDegenerateRho) {
    // Degenerate: X2 = sign(rho) X1 in standardized units.
    const double sgn = rho > 0.0 ? 1.0 : -1.0;
    const double lo = std::max(a1, sgn > 0 ? a2 : -b2);
    const double hi = std::min(b1, sgn > 0 ? b2 : -a2);
    if (!(lo < hi)) throw NumericalError("truncated_moments_2d: degenerate box is empty");
    const Truncated1d t = truncated_moments_1d(0.0, 1.0, lo, hi);
    if (t.underflow || t.mass < 1e-12)
      throw NumericalError("truncated_moments_2d: box mass below 1e-12");
    out.mean = Eigen::Vector2d(mean[0] + sd[0] * t.mean, mean[1] + sgn * sd[1] * t.mean);
    out.covariance << cov(0, 0) * t.var, sgn * sd[0] * sd[1] * t.var,
        sgn * sd[0] * sd[1] * t.var, cov(1, 1) * t.var;
    out.mass = t.mass;
    return out;
  }

  const double mass = bivariate_normal_mass(
      BoxBounds(Eigen::Vector2d(a1, a2), Eigen::Vector2d(b1, b2)), rho);
  if (!(mass >= 1e-12)) throw NumericalError("truncated_moments_2d: box mass below 1e-12");

  const double s = std::sqrt(1.0 - rho * rho);
  // Density of the first coordinate at x, integrated over the box range of the
  // second coordinate (and vice versa).
  auto edge = [rho, s](double x, double lo, double hi) {
    if (!std::isfinite(x)) return 0.0;
    return std_normal_pdf(x) * (std_normal_cdf((hi - rho * x) / s) -
                                std_normal_cdf((lo - rho * x) / s));
  };
  const double e1a = edge(a1, a2, b2), e1b = edge(b1, a2, b2);
  const double e2a = edge(a2, a1, b1), e2b = edge(b2, a1, b1);
  const double corners = bvn_pdf(a1, a2, rho) - bvn_pdf(a1, b2, rho) - bvn_pdf(b1, a2, rho) +
                         bvn_pdf(b1, b2, rho);
  const double w1 = times_finite(a1, e1a) - times_finite(b1, e1b);
  const double w2 = times_finite(a2, e2a) - times_finite(b2, e2b);
  const double one_m = 1.0 - rho * rho;

  const double m10 = (e1a - e1b + rho * (e2a - e2b)) / mass;
  const double m01 = (e2a - e2b + rho * (e1a - e1b)) / mass;
  const double m20 = 1.0 + (w1 + rho * rho * w2 + rho * one_m * corners) / mass;
  const double m02 = 1.0 + (w2 + rho * rho * w1 + rho * one_m * corners) / mass;
  const double m11 = rho + (rho * w1 + rho * w2 + one_m * corners) / mass;

  const double v1 = std::clamp(m20 - m10 * m10, 0.0, 1.0);
  const double v2 = std::clamp(m02 - m01 * m01, 0.0, 1.0);
  double c12 = m11 - m10 * m01;
  const double cmax = std::sqrt(v1 * v2);
  c12 = std::clamp(c12, -cmax, cmax);

  out.mean = Eigen::Vector2d(
      std::clamp(mean[0] + sd[0] * m10, bounds.lower[0], bounds.upper[0]),
      std::clamp(mean[1] + sd[1] * m01, bounds.lower[1], bounds.upper[1]));
  out.covariance << cov(0, 0) * v1, sd[0] * sd[1] * c12, sd[0] * sd[1] * c12, cov(1, 1) * v2;
  out.mass = mass;
  return out;
}

}  // namespace resbo
