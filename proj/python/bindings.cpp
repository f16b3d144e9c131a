#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "waveinv/error_norms.hpp"
#include "waveinv/harness.hpp"
#include "waveinv/inversion.hpp"

namespace py = pybind11;
using namespace waveinv;

namespace {

Signal to_signal(const std::vector<double>& samples, double dt) { return Signal(samples, dt); }

py::array_t<double> to_array(std::span<const double> v) { return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data()); }

py::dict trace_dict(const OptTrace& t) {
  const auto n = static_cast<Eigen::Index>(t.records.size());
  Matrix x(n, 2);
  Vector objective(n), rel1(n), rel2(n), eta(n), lambda(n);
  std::vector<std::uint64_t> evals(t.records.size());
  std::vector<int> iters(t.records.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.records[static_cast<std::size_t>(i)];
    x.row(i) = r.x.transpose();
    objective[i] = r.objective;
    rel1[i] = r.rel1;
    rel2[i] = r.rel2;
    eta[i] = r.eta_bar;
    lambda[i] = r.lambda;
    evals[static_cast<std::size_t>(i)] = r.eval_count;
    iters[static_cast<std::size_t>(i)] = r.iteration;
  }
  py::dict d;
  d["x"] = x;
  d["objective"] = objective;
  d["rel1"] = rel1;
  d["rel2"] = rel2;
  d["eta_bar"] = eta;
  d["lambda"] = lambda;
  d["eval_count"] = evals;
  d["iteration"] = iters;
  d["status"] = std::string(to_string(t.status));
  d["message"] = t.message;
  d["evaluations"] = t.evaluations();
  return d;
}

ObjectiveConfig objective_config(const ForwardConfig& fwd, const std::string& kind, double c) {
  return objective_for(fwd, parse_objective_kind(kind), c);
}

}  // namespace

PYBIND11_MODULE(_waveinv, m) {
  m.doc() = "Waveguide material inversion: forward surrogate, objectives, optimizers and priors";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<harness::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ForwardConfig>(m, "ForwardConfig")
      .def(py::init([](const std::string& preset) { return ForwardConfig::preset(preset); }), py::arg("preset") = "desk")
      .def_readwrite("length", &ForwardConfig::length)
      .def_readwrite("center_frequency", &ForwardConfig::center_frequency)
      .def_readwrite("packet_center", &ForwardConfig::packet_center)
      .def_readwrite("bandwidth", &ForwardConfig::bandwidth)
      .def_readwrite("samples", &ForwardConfig::samples)
      .def_readwrite("dt", &ForwardConfig::dt)
      .def_readwrite("amplitudes", &ForwardConfig::amplitudes)
      .def("validate", &ForwardConfig::validate);

  m.def(
      "forward_response",
      [](double e, double nu, double rho, const ForwardConfig& cfg) {
        return to_array(forward_response(MaterialParams{e, nu, rho}, cfg).signal.samples());
      },
      py::arg("youngs_modulus"), py::arg("poisson_ratio"), py::arg("density"), py::arg("config") = ForwardConfig{},
      "Simulated receiver signal (SI units).");

  m.def(
      "forward_jacobian",
      [](double e, double nu, double rho, const ForwardConfig& cfg) {
        const auto j = forward_jacobian(MaterialParams{e, nu, rho}, cfg);
        return py::make_tuple(to_array(j.d_youngs.samples()), to_array(j.d_poisson.samples()));
      },
      py::arg("youngs_modulus"), py::arg("poisson_ratio"), py::arg("density"), py::arg("config") = ForwardConfig{});

  m.def(
      "envelope", [](const std::vector<double>& s, double dt) { return to_array(envelope(to_signal(s, dt)).samples()); },
      py::arg("samples"), py::arg("dt"));

  m.def(
      "transform",
      [](const std::vector<double>& s, double dt, const std::string& objective, double bandwidth, double c) {
        ObjectiveConfig cfg{parse_objective_kind(objective), bandwidth, c};
        return to_array(transform_pipeline(to_signal(s, dt), cfg));
      },
      py::arg("samples"), py::arg("dt"), py::arg("objective") = "autocorr-phase", py::arg("bandwidth") = 0.0,
      py::arg("damping_c") = 1.0, "Feature vector compared by the chosen objective.");

  m.def(
      "invert",
      [](const std::vector<double>& reference, const Vector& x0, double density, const std::string& objective,
         const std::string& method, std::uint64_t max_evaluations, std::optional<Vector> truth, double cutoff,
         const ForwardConfig& cfg) {
        WaveguideInversion inv(cfg, objective_config(cfg, objective, 1.0), Signal(reference, cfg.dt), density);
        OptimizerOptions o;
        o.method = parse_method(method);
        o.max_evaluations = max_evaluations;
        o.ground_truth = truth;
        o.success_cutoff = truth ? cutoff : 0.0;
        return trace_dict(optimize(inv.problem(), x0, o));
      },
      py::arg("reference"), py::arg("x0"), py::arg("density"), py::arg("objective") = "autocorr-phase",
      py::arg("method") = "modified-lm", py::arg("max_evaluations") = 200, py::arg("truth") = py::none(),
      py::arg("cutoff") = 1e-6, py::arg("config") = ForwardConfig{},
      "Fits (E, nu) to a reference signal; returns the optimizer trace as a dict.");

  m.def("lambda_k", &lambda_k, py::arg("metric"), py::arg("gradient_step"));
  m.def("modified_lm_step", [](const Matrix& j, const Vector& r, const Vector& x, double eta) {
    OptState s;
    s.x = x;
    s.residual = r;
    s.jacobian = j;
    s.r0_norm = r.norm();
    return modified_lm_step(s, eta).dx;
  });
  m.def("relative_1", &relative_1, py::arg("reference"), py::arg("x"));
  m.def("relative_2", &relative_2, py::arg("reference"), py::arg("y"));

  m.def(
      "gamma_pdf", [](double a, double t, double x) { return gamma_pdf(GammaDist{a, t}, x); }, py::arg("alpha"),
      py::arg("theta"), py::arg("x"));
  m.def(
      "gamma_inv_cdf", [](double a, double t, double p) { return gamma_inv_cdf(GammaDist{a, t}, p); },
      py::arg("alpha"), py::arg("theta"), py::arg("p"));
  m.def(
      "gamma_fit",
      [](const std::vector<double>& x) {
        const auto d = gamma_fit(x);
        return py::make_tuple(d.alpha, d.theta);
      },
      py::arg("samples"), "Maximum-likelihood (alpha, theta).");
  m.def(
      "prior",
      [](const std::string& material) {
        py::dict d;
        const auto& p = builtin_prior(material);
        for (std::size_t i = 0; i < 4; ++i)
          d[py::str(std::string(to_string(static_cast<Parameter>(i))))] =
              py::make_tuple(p.marginals[i].alpha, p.marginals[i].theta);
        return d;
      },
      py::arg("material"), "(alpha, theta) per parameter in g/cm^3, GPa, 1, GPa.");
  m.def(
      "lhs_sample",
      [](std::size_t n, std::size_t dims, std::uint64_t seed, int restarts) {
        return Matrix(lhs_sample(n, dims, seed, restarts).points);
      },
      py::arg("n"), py::arg("dims"), py::arg("seed"), py::arg("restarts") = 100);
}
