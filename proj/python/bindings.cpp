#include <memory>
#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tsmcmc/app.hpp"
#include "tsmcmc/corrector.hpp"
#include "tsmcmc/datasets.hpp"
#include "tsmcmc/density.hpp"
#include "tsmcmc/error.hpp"
#include "tsmcmc/generators.hpp"
#include "tsmcmc/metrics.hpp"
#include "tsmcmc/theory.hpp"

namespace py = pybind11;
using namespace tsmcmc;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::unique_ptr<ProposalSource> make_source(const TimeSeries& s, const std::string& kind, std::size_t order,
                                            std::size_t context_len, const std::optional<Vector>& drift,
                                            double noise_scale) {
  std::unique_ptr<ProposalSource> src;
  if (kind == "var") {
    src = std::make_unique<VarSource>(fit_var(s, order), std::max(context_len, order));
  } else if (kind == "bootstrap") {
    src = make_bootstrap_source(s, context_len);
  } else {
    throw Error(ErrorCode::InvalidArgument, "source must be 'var' or 'bootstrap'");
  }
  if (drift || noise_scale != 1.0) {
    src = make_biased_source(std::move(src), drift.value_or(Vector::Zero(static_cast<Eigen::Index>(s.dims()))),
                             noise_scale);
  }
  return src;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Metropolis-Hastings correction of synthetic multivariate time series";

  static py::handle error_type = py::exception<Error>(m, "TsmcmcError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(std::string(e.name()) + ": " +
                                                                      std::string(e.message()));
      exc.attr("code") = std::string(e.name());
      exc.attr("step") = e.step() ? py::cast(*e.step()) : py::none();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def(
      "simulate_lorenz",
      [](std::size_t steps, std::size_t transient, double dt, double sigma, double rho, double beta,
         std::array<double, 3> x0) {
        LorenzConfig cfg;
        cfg.steps = steps;
        cfg.transient = transient;
        cfg.dt = dt;
        cfg.sigma = sigma;
        cfg.rho = rho;
        cfg.beta = beta;
        cfg.x0 = x0;
        cfg.validate();
        return simulate_lorenz(cfg).values();
      },
      py::arg("steps") = 2000, py::arg("transient") = 1000, py::arg("dt") = 0.01, py::arg("sigma") = 10.0,
      py::arg("rho") = 28.0, py::arg("beta") = 8.0 / 3.0, py::arg("x0") = std::array<double, 3>{1.0, 1.0, 1.0});

  py::class_<DiffDensity>(m, "DiffDensity")
      .def_property_readonly("dims", &DiffDensity::dims)
      .def_property_readonly("kind", [](const DiffDensity& d) { return to_string(d.kind()); })
      .def("__call__", [](const DiffDensity& d, const Vector& theta) { return density(d, theta); })
      .def("to_json", [](const DiffDensity& d) { return to_python(d.to_json()); })
      .def_static("from_json", [](const py::object& o) { return DiffDensity::from_json(from_python(o)); });

  m.def(
      "fit_diff_density",
      [](const Matrix& values, const std::string& kind, std::size_t bins_per_dim, double epsilon_floor) {
        return fit_diff_density(TimeSeries(values), {density_kind_from_string(kind), bins_per_dim, epsilon_floor});
      },
      py::arg("values"), py::arg("kind") = "gaussian_kde", py::arg("bins_per_dim") = 16,
      py::arg("epsilon_floor") = 1e-12);

  m.def(
      "generate_raw",
      [](const Matrix& values, const std::string& source, std::size_t order, std::size_t context_len,
         std::optional<Vector> drift, double noise_scale, std::uint64_t seed, const std::string& mode) {
        const TimeSeries s(values);
        auto src = make_source(s, source, order, context_len, drift, noise_scale);
        return generate_raw(s, *src, seed, conditioning_mode_from_string(mode)).values();
      },
      py::arg("values"), py::arg("source") = "var", py::arg("order") = 1, py::arg("context_len") = 16,
      py::arg("drift") = py::none(), py::arg("noise_scale") = 1.0, py::arg("seed") = 0,
      py::arg("conditioning_mode") = "synthetic");

  m.def(
      "correct",
      [](const Matrix& values, const DiffDensity& dens, const std::string& source, std::size_t order,
         std::size_t context_len, std::optional<Vector> drift, double noise_scale, double beta, double epsilon,
         std::size_t max_retries, const std::string& mode, std::uint64_t seed) {
        const TimeSeries s(values);
        auto src = make_source(s, source, order, context_len, drift, noise_scale);
        CorrectionConfig cfg;
        cfg.beta = beta;
        cfg.epsilon = epsilon;
        cfg.max_retries = max_retries;
        cfg.conditioning_mode = conditioning_mode_from_string(mode);
        cfg.seed = seed;
        const CorrectionRun run = correct_series(s, *src, dens, cfg);
        py::dict out;
        out["corrected"] = run.corrected.values();
        out["raw"] = generate_raw(s, *src, seed, cfg.conditioning_mode).values();
        out["proposed"] = run.proposed;
        out["accepted"] = run.accepted;
        out["forced_accepts"] = run.forced_accepts;
        out["acceptance_rate"] = run.acceptance_rate();
        out["warm_start"] = run.warm_start;
        return out;
      },
      py::arg("values"), py::arg("density"), py::arg("source") = "var", py::arg("order") = 1,
      py::arg("context_len") = 16, py::arg("drift") = py::none(), py::arg("noise_scale") = 1.0,
      py::arg("beta") = 0.5, py::arg("epsilon") = 1e-8, py::arg("max_retries") = 64,
      py::arg("conditioning_mode") = "synthetic", py::arg("seed") = 0);

  m.def(
      "evaluate",
      [](const Matrix& real, const Matrix& gen, std::size_t p, std::size_t q, std::uint64_t seed) {
        MetricsConfig cfg;
        cfg.p = p;
        cfg.q = q;
        cfg.predictive.lag = p;
        cfg.seed = seed;
        return to_python(evaluate(TimeSeries(real), TimeSeries(gen), cfg).to_json());
      },
      py::arg("real"), py::arg("gen"), py::arg("p") = 16, py::arg("q") = 32, py::arg("seed") = 0);

  m.def("acf", [](const Vector& x, std::size_t max_lag) { return acf(x, max_lag); }, py::arg("x"),
        py::arg("max_lag"));
  m.def("skewness", [](const Vector& x) { return skewness(x); });
  m.def("kurtosis", [](const Vector& x) { return kurtosis(x); });

  m.def(
      "verify_theory", [](std::uint64_t seed) { return to_python(theory::run_verification(seed)); },
      py::arg("seed") = 0);

  m.def(
      "run",
      [](const std::string& command, const py::object& config, const std::string& base_dir) {
        const app::RunConfig cfg = app::parse_config(from_python(config), base_dir);
        if (command == "simulate") return app::cmd_simulate(cfg);
        if (command == "fit-density") return app::cmd_fit_density(cfg);
        if (command == "generate") return app::cmd_generate(cfg);
        if (command == "correct") return app::cmd_correct(cfg);
        if (command == "evaluate") return app::cmd_evaluate(cfg);
        if (command == "compare") return app::cmd_compare(cfg);
        throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
      },
      py::arg("command"), py::arg("config"), py::arg("base_dir") = "");
}
