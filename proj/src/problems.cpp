#include "resbo/problems.hpp"

#include "resbo/optimize.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace resbo {

double ProblemSpec::evaluate_noisy(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                   std::mt19937_64& rng) const {
  std::normal_distribution<double> noise(0.0, noise_std);
  const double v = objective(x, theta);
  return noise_std > 0.0 ? v + noise(rng) : v;
}

MinMaxObjective ProblemSpec::as_minmax() const {
  MinMaxObjective f;
  f.value = [raw = raw, st = standardization](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    return st.apply(raw(x, th));
  };
  return f;
}

Standardization estimate_standardization(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& raw,
    const SpaceSpec& space, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd x = space.controllable.sample(rng);
    const Eigen::VectorXd th = space.uncontrollable.sample(rng);
    const double v = raw(x, th);
    const double delta = v - mean;
    mean += delta / (i + 1);
    m2 += delta * (v - mean);
  }
  const double sd = std::sqrt(m2 / std::max(1, count - 1));
  return Standardization{mean, sd > 0.0 ? sd : 1.0};
}

namespace {

constexpr std::uint64_t kStandardizationSeed = 20240601;
constexpr int kStandardizationProbe = 100000;

Eigen::MatrixXd column(std::initializer_list<double> values) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

Domain unit_interval() {
  return Domain::continuous(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
}

}  // namespace

ProblemSpec make_branin() {
  ProblemSpec p;
  p.name = "branin";
  p.raw = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    const double u = -5.0 + 15.0 * x[0];
    const double v = 15.0 * th[0];
    const double a = 1.0, b = 5.1 / (4.0 * M_PI * M_PI), c = 5.0 / M_PI, r = 6.0, s = 10.0,
                 t = 1.0 / (8.0 * M_PI);
    const double q = v - b * u * u + c * u - r;
    return a * q * q + s * (1.0 - t) * std::cos(u) + s;
  };
  Eigen::MatrixXd thetas(20, 1);
  for (int i = 0; i < 20; ++i) thetas(i, 0) = (0.75 + 13.5 * i / 19.0) / 15.0;
  p.space = SpaceSpec(unit_interval(), Domain::discrete(thetas));
  p.standardization =
      estimate_standardization(p.raw, p.space, kStandardizationProbe, kStandardizationSeed);
  return p;
}

ProblemSpec make_sinus_linear() {
  ProblemSpec p;
  p.name = "sinus_linear";
  p.raw = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    const double z = x[0] + th[0];
    return std::sin(5.0 * z * z * M_PI) + 0.5 * z;
  };
  p.space = SpaceSpec(unit_interval(), Domain::discrete(column({0.1, 0.05})));
  return p;
}

ProblemSpec make_eggholder() {
  ProblemSpec p;
  p.name = "eggholder";
  p.raw = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    const double u = -512.0 + 1024.0 * x[0];
    const double v = -512.0 + 1024.0 * th[0];
    return -(v + 47.0) * std::sin(std::sqrt(std::abs(v + u / 2.0 + 47.0))) -
           u * std::sin(std::sqrt(std::abs(u - (v + 47.0))));
  };
  p.space = SpaceSpec(unit_interval(), Domain::discrete(column({0.0, 0.5, (185.0 + 512.0) / 1024.0})));
  p.standardization =
      estimate_standardization(p.raw, p.space, kStandardizationProbe, kStandardizationSeed);
  return p;
}

ProblemSpec make_hartmann3d() {
  ProblemSpec p;
  p.name = "hartmann3d";
  p.raw = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static const double a[4][3] = {{3, 10, 30}, {0.1, 10, 35}, {3, 10, 30}, {0.1, 10, 35}};
    static const double pm[4][3] = {{0.3689, 0.1170, 0.2673},
                                    {0.4699, 0.4387, 0.7470},
                                    {0.1091, 0.8732, 0.5547},
                                    {0.0381, 0.5743, 0.8828}};
    const double z[3] = {x[0], x[1], th[0]};
    double f = 0.0;
    for (int i = 0; i < 4; ++i) {
      double e = 0.0;
      for (int j = 0; j < 3; ++j) e += a[i][j] * (z[j] - pm[i][j]) * (z[j] - pm[i][j]);
      f += alpha[i] * std::exp(-e);
    }
    return f;
  };
  Eigen::MatrixXd xs(2500, 2);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) xs.row(i * 50 + j) << i / 49.0, j / 49.0;
  Eigen::MatrixXd ts(11, 1);
  for (int k = 0; k < 11; ++k) ts(k, 0) = 0.25 + 0.05 * k;
  p.space = SpaceSpec(Domain::discrete(xs), Domain::discrete(ts));
  return p;
}

ProblemSpec make_synthetic_polynomial() {
  ProblemSpec p;
  p.name = "synthetic_polynomial";
  p.raw = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    const double z1 = x[0] + th[0], z2 = x[1] + th[1];
    const double z1_2 = z1 * z1, z2_2 = z2 * z2;
    return 2.0 * std::pow(z1, 6) - 12.2 * std::pow(z1, 5) + 21.2 * z1_2 * z1_2 + 6.2 * z1 -
           6.4 * z1_2 * z1 - 4.7 * z1_2 + std::pow(z2, 6) - 11.0 * std::pow(z2, 5) +
           43.3 * z2_2 * z2_2 - 10.0 * z2 - 74.8 * z2_2 * z2 + 56.9 * z2_2 - 4.1 * z1 * z2 -
           0.1 * z2_2 * z1_2 + 0.4 * z2_2 * z1 + 0.4 * z1_2 * z2;
  };
  Eigen::MatrixXd ts(12, 2);
  const double radii[2] = {0.0, 0.5};
  for (int r = 0; r < 2; ++r)
    for (int k = 0; k < 6; ++k) {
      const double ang = 0.4 * M_PI * k;
      ts.row(r * 6 + k) << radii[r] * std::cos(ang), radii[r] * std::sin(ang);
    }
  p.space = SpaceSpec(Domain::continuous(Eigen::Vector2d(-0.95, -0.45), Eigen::Vector2d(3.2, 4.4)),
                      Domain::discrete(ts));
  p.initial_design = 10;
  p.hyper_policy = HyperPolicy::kPretrain;
  return p;
}

ProblemSpec make_within_model_problem(std::uint64_t seed) {
  ProblemSpec p;
  p.name = "within_model";
  KernelParams kp;
  kp.signal_variance = 1.0;
  kp.lengthscales = Eigen::VectorXd::Constant(2, 0.1);
  kp.noise_variance = 0.001;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const int n = 1000;
  Eigen::MatrixXd z(n, 2);
  for (int i = 0; i < n; ++i) z.row(i) << unif(rng), unif(rng);
  Eigen::MatrixXd k = kernel_matrix(z, z, kp);
  k.diagonal().array() += kp.noise_variance;
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw NumericalError("within-model draw: factorization failed");
  Eigen::VectorXd e(n);
  for (int i = 0; i < n; ++i) e[i] = normal(rng);
  const Eigen::VectorXd y = llt.matrixL() * e;

  auto post = std::make_shared<const GpPosterior>(fit_posterior(Dataset(z, y), kp));
  p.raw = [post](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
    return post->predict_mean(Eigen::Vector2d(x[0], th[0]));
  };
  p.space = SpaceSpec(unit_interval(), unit_interval());
  p.hyper_policy = HyperPolicy::kFixed;
  p.fixed_params = kp;
  return p;
}

std::vector<std::string> problem_names() {
  return {"branin", "sinus_linear", "eggholder", "hartmann3d", "synthetic_polynomial",
          "within_model"};
}

ProblemSpec make_problem(const std::string& name, std::uint64_t seed) {
  if (name == "branin") return make_branin();
  if (name == "sinus_linear") return make_sinus_linear();
  if (name == "eggholder") return make_eggholder();
  if (name == "hartmann3d") return make_hartmann3d();
  if (name == "synthetic_polynomial") return make_synthetic_polynomial();
  if (name == "within_model") return make_within_model_problem(seed);
  throw std::invalid_argument("unknown problem: " + name);
}

namespace {

// Grid with grid_per_dim points per dimension (endpoints included).
Eigen::MatrixXd box_grid(const Box& box, int grid_per_dim) {
  const Eigen::Index d = box.dim();
  const int n = std::max(1, grid_per_dim);
  Eigen::Index total = 1;
  for (Eigen::Index j = 0; j < d; ++j) total *= n;
  Eigen::MatrixXd out(total, d);
  for (Eigen::Index r = 0; r < total; ++r) {
    Eigen::Index rem = r;
    for (Eigen::Index j = d - 1; j >= 0; --j) {
      const Eigen::Index i = rem % n;
      rem /= n;
      const double frac = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
      out(r, j) = box.lower[j] + frac * (box.upper[j] - box.lower[j]);
    }
  }
  return out;
}

Eigen::MatrixXd candidates(const Domain& dom, int grid_per_dim) {
  return dom.is_discrete() ? dom.points().points : box_grid(dom.box(), grid_per_dim);
}

}  // namespace

InnerResult true_worst_case(const ProblemSpec& problem, const Eigen::VectorXd& x,
                            int grid_per_dim) {
  const Domain& dom = problem.space.uncontrollable;
  const Eigen::MatrixXd ts = candidates(dom, grid_per_dim);
  InnerResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ts.rows(); ++i) {
    const double v = problem.objective(x, ts.row(i).transpose());
    if (v > best.value) {
      best.value = v;
      best.theta = ts.row(i).transpose();
    }
  }
  if (!dom.is_discrete()) {
    NelderMeadOptions nm;
    nm.tol = 1e-10;
    nm.initial_step = 1.0 / std::max(2, grid_per_dim);
    const OptimResult r = minimize_nelder_mead(
        [&](const Eigen::VectorXd& th) { return -problem.objective(x, th); }, best.theta, dom.box(),
        nm);
    if (-r.value > best.value) {
      best.value = -r.value;
      best.theta = r.x;
    }
  }
  return best;
}

RobustReference true_robust_reference(const ProblemSpec& problem, int grid_per_dim) {
  if (grid_per_dim < 1) throw std::invalid_argument("true_robust_reference: grid_per_dim >= 1");
  const Domain& xd = problem.space.controllable;
  const Eigen::MatrixXd xs = candidates(xd, grid_per_dim);
  RobustReference ref;
  ref.grid_per_dim = grid_per_dim;
  ref.f_star = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    const Eigen::VectorXd x = xs.row(i).transpose();
    const InnerResult w = true_worst_case(problem, x, grid_per_dim);
    if (w.value < ref.f_star) {
      ref.f_star = w.value;
      ref.x_star = x;
      ref.theta_star = w.theta;
    }
  }
  if (!xd.is_discrete()) {
    NelderMeadOptions nm;
    nm.tol = 1e-10;
    nm.initial_step = 1.0 / std::max(2, grid_per_dim);
    const OptimResult r = minimize_nelder_mead(
        [&](const Eigen::VectorXd& x) { return true_worst_case(problem, x, grid_per_dim).value; },
        ref.x_star, xd.box(), nm);
    if (r.value < ref.f_star) {
      const InnerResult w = true_worst_case(problem, r.x, grid_per_dim);
      ref.f_star = w.value;
      ref.x_star = r.x;
      ref.theta_star = w.theta;
    }
  }
  return ref;
}

RegretRecord compute_regret(const ProblemSpec& problem, const Eigen::VectorXd& x_star,
                            const Eigen::VectorXd& theta_star, double reference_f_star,
                            int iteration) {
  RegretRecord rec;
  rec.iteration = iteration;
  rec.x_star = x_star;
  rec.theta_star = theta_star;
  rec.robust_regret = std::abs(true_worst_case(problem, x_star).value - reference_f_star);
  if (!problem.space.uncontrollable.is_discrete())
    rec.inference_regret = std::abs(problem.objective(x_star, theta_star) - reference_f_star);
  return rec;
}

}  // namespace resbo
