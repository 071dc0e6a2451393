#include "resbo/ep.hpp"
#include "resbo/gp.hpp"
#include "resbo/problems.hpp"
#include "resbo/runner.hpp"
#include "resbo/trunc_gauss.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace resbo;

namespace {

py::dict record_to_dict(const RunRecord& r) {
  py::dict d;
  d["run_id"] = r.run_id;
  d["seed"] = r.seed;
  d["problem"] = r.problem;
  d["acquisition"] = r.acquisition;
  d["complete"] = r.complete;
  d["error"] = r.error;
  py::list its;
  for (const auto& it : r.iterations) {
    py::dict row;
    row["iteration"] = it.iteration;
    row["x"] = it.x;
    row["theta"] = it.theta;
    row["y"] = it.y;
    row["x_star"] = it.x_star;
    row["theta_star"] = it.theta_star;
    row["robust_regret"] = it.robust_regret;
    row["inference_regret"] = it.inference_regret;
    its.append(row);
  }
  d["iterations"] = its;
  return d;
}

}  // namespace

PYBIND11_MODULE(_resbo, m) {
  m.doc() = "Robust entropy search Bayesian optimization";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Truncated1d>(m, "Truncated1d")
      .def_readonly("mean", &Truncated1d::mean)
      .def_readonly("var", &Truncated1d::var)
      .def_readonly("mass", &Truncated1d::mass);
  py::class_<TruncatedMoments>(m, "TruncatedMoments")
      .def_readonly("mean", &TruncatedMoments::mean)
      .def_readonly("covariance", &TruncatedMoments::covariance)
      .def_readonly("mass", &TruncatedMoments::mass);

  m.def("truncated_moments_1d", &truncated_moments_1d, py::arg("mean"), py::arg("var"),
        py::arg("lower"), py::arg("upper"));
  m.def(
      "truncated_moments_2d",
      [](const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, const Eigen::Vector2d& lower,
         const Eigen::Vector2d& upper) { return truncated_moments_2d(mean, cov, BoxBounds(lower, upper)); },
      py::arg("mean"), py::arg("cov"), py::arg("lower"), py::arg("upper"));
  m.def("bivariate_normal_cdf", &bivariate_normal_cdf, py::arg("h"), py::arg("k"), py::arg("rho"));

  py::class_<EpResult>(m, "EpResult")
      .def_readonly("mean", &EpResult::mean)
      .def_readonly("covariance", &EpResult::covariance)
      .def_readonly("converged", &EpResult::converged)
      .def_readonly("iterations", &EpResult::iterations)
      .def_readonly("log_mass", &EpResult::log_mass);
  m.def(
      "ep_box_condition",
      [](const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const Eigen::VectorXd& lower,
         const Eigen::VectorXd& upper, double damping, double tol, int max_iter) {
        EpOptions o;
        o.damping = damping;
        o.tol = tol;
        o.max_iter = max_iter;
        return ep_box_condition(mean, cov, BoxBounds(lower, upper), o);
      },
      py::arg("mean"), py::arg("cov"), py::arg("lower"), py::arg("upper"), py::arg("damping") = 0.8,
      py::arg("tol") = 1e-6, py::arg("max_iter") = 100);

  py::class_<KernelParams>(m, "KernelParams")
      .def(py::init([](double signal_variance, const Eigen::VectorXd& lengthscales, double noise_variance) {
             KernelParams p;
             p.signal_variance = signal_variance;
             p.lengthscales = lengthscales;
             p.noise_variance = noise_variance;
             return p;
           }),
           py::arg("signal_variance"), py::arg("lengthscales"), py::arg("noise_variance"))
      .def_readwrite("signal_variance", &KernelParams::signal_variance)
      .def_readwrite("lengthscales", &KernelParams::lengthscales)
      .def_readwrite("noise_variance", &KernelParams::noise_variance);

  py::class_<GpPosterior>(m, "GpPosterior")
      .def("predict",
           [](const GpPosterior& g, const Eigen::MatrixXd& z) {
             const Prediction p = g.predict(z);
             return py::make_tuple(p.mean, p.covariance);
           })
      .def("log_marginal_likelihood", &GpPosterior::log_marginal_likelihood)
      .def_property_readonly("params", &GpPosterior::params);
  m.def(
      "fit_posterior",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelParams& p) {
        return fit_posterior(Dataset(x, y), p);
      },
      py::arg("x"), py::arg("y"), py::arg("params"));
  m.def(
      "fit_hyperparameters",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double noise_variance, int restarts,
         std::uint64_t seed) {
        HyperparameterOptions o;
        o.restarts = restarts;
        o.seed = seed;
        return fit_hyperparameters(Dataset(x, y), HyperparameterBounds{}, noise_variance, o).params;
      },
      py::arg("x"), py::arg("y"), py::arg("noise_variance") = 0.001, py::arg("restarts") = 5,
      py::arg("seed") = 0);

  py::class_<ProblemSpec>(m, "Problem")
      .def_readonly("name", &ProblemSpec::name)
      .def("raw", [](const ProblemSpec& p, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& t) { return p.raw(x, t); })
      .def("objective", &ProblemSpec::objective, py::arg("x"), py::arg("theta"));
  m.def("make_problem", &make_problem, py::arg("name"), py::arg("seed") = 0);
  m.def("problem_names", &problem_names);

  py::class_<RobustReference>(m, "RobustReference")
      .def_readonly("f_star", &RobustReference::f_star)
      .def_readonly("x_star", &RobustReference::x_star)
      .def_readonly("theta_star", &RobustReference::theta_star);
  m.def("true_robust_reference", &true_robust_reference, py::arg("problem"), py::arg("grid"),
        py::call_guard<py::gil_scoped_release>());

  m.def(
      "run_experiment",
      [](const std::string& config_json, int workers) {
        const RunConfig c = parse_config(config_json);
        std::vector<RunRecord> rs;
        {
          py::gil_scoped_release release;
          rs = run_experiment(c, workers);
        }
        py::list out;
        for (const auto& r : rs) out.append(record_to_dict(r));
        return out;
      },
      py::arg("config_json"), py::arg("workers") = 1);
  m.def("quantile_type7", &quantile_type7, py::arg("values"), py::arg("p"));
}
