#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>

#include "slipopt/algorithms.hpp"
#include "slipopt/config.hpp"
#include "slipopt/constants.hpp"
#include "slipopt/diagnostics.hpp"
#include "slipopt/experiment.hpp"
#include "slipopt/problem.hpp"
#include "slipopt/suites.hpp"
#include "slipopt/svg_plot.hpp"
#include "slipopt/synthetic.hpp"
#include "slipopt/trace_csv.hpp"
#include "slipopt/verify.hpp"

namespace py = pybind11;
using namespace slipopt;

namespace {

py::dict trace_columns_dict(const Trace& trace) {
  const std::size_t n = trace.size();
  py::dict out;
  for (const std::string& column : trace_columns()) {
    py::array_t<double> values(static_cast<py::ssize_t>(n));
    auto v = values.mutable_unchecked<1>();
    for (std::size_t i = 0; i < n; ++i) {
      const auto value = trace_value(trace[i], column);
      v(static_cast<py::ssize_t>(i)) = value ? *value : std::numeric_limits<double>::quiet_NaN();
    }
    out[py::str(column)] = values;
  }
  return out;
}

py::dict run_result_dict(const RunResult& r) {
  py::dict out;
  out["x"] = r.state.x;
  out["y"] = r.state.y;
  out["z"] = r.state.z;
  out["m"] = r.state.m;
  out["status"] = to_string(r.status);
  out["failed_at"] = r.failed_at ? py::object(py::int_(*r.failed_at)) : py::object(py::none());
  out["skipped_steps"] = r.skipped_steps;
  out["warm_start_y"] = r.warm_start_y;
  out["calls"] = py::dict(py::arg("gxF") = r.state.calls.n_grad_x_F, py::arg("gyF") = r.state.calls.n_grad_y_F,
                          py::arg("gyG") = r.state.calls.n_grad_y_G, py::arg("hxy") = r.state.calls.n_hvp_xy,
                          py::arg("hyy") = r.state.calls.n_hvp_yy);
  out["trace"] = trace_columns_dict(r.trace);
  return out;
}

ScheduleInputs schedule_inputs(double eps, double delta, double Delta0, double Delta_y0, double Delta_z0,
                               std::optional<double> grad_phi0_norm) {
  ScheduleInputs in;
  in.eps = eps;
  in.delta = delta;
  in.Delta0 = Delta0;
  in.Delta_y0 = Delta_y0;
  in.Delta_z0 = Delta_z0;
  in.grad_phi0_norm = grad_phi0_norm;
  return in;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic bilevel optimization: problems, schedules, solvers and checks";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SchedulingError>(m, "SchedulingError", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<>())
      .def_static("noiseless", &NoiseModel::noiseless)
      .def_static("gaussian", &NoiseModel::gaussian, py::arg("sigma_f1"), py::arg("sigma_g1"), py::arg("sigma_g2"))
      .def_static("bounded", &NoiseModel::bounded, py::arg("sigma_f1"), py::arg("sigma_g1"), py::arg("sigma_g2"),
                  py::arg("sigma_z"))
      .def_property_readonly("kind", [](const NoiseModel& n) { return to_string(n.kind); })
      .def_readwrite("sigma_f1", &NoiseModel::sigma_f1)
      .def_readwrite("sigma_g1", &NoiseModel::sigma_g1)
      .def_readwrite("sigma_g2", &NoiseModel::sigma_g2)
      .def_readwrite("sigma_z", &NoiseModel::sigma_z);

  py::class_<SmoothnessConstants>(m, "SmoothnessConstants")
      .def(py::init<>())
      .def_readwrite("mu", &SmoothnessConstants::mu)
      .def_readwrite("l_g1", &SmoothnessConstants::l_g1)
      .def_readwrite("l_g2", &SmoothnessConstants::l_g2)
      .def_readwrite("l_f0", &SmoothnessConstants::l_f0)
      .def_readwrite("L_x0", &SmoothnessConstants::L_x0)
      .def_readwrite("L_x1", &SmoothnessConstants::L_x1)
      .def_readwrite("L_y0", &SmoothnessConstants::L_y0)
      .def_readwrite("L_y1", &SmoothnessConstants::L_y1)
      .def_readwrite("sigma_f1", &SmoothnessConstants::sigma_f1)
      .def_readwrite("sigma_g1", &SmoothnessConstants::sigma_g1)
      .def_readwrite("sigma_g2", &SmoothnessConstants::sigma_g2)
      .def_readwrite("sigma_z", &SmoothnessConstants::sigma_z)
      .def_readonly("L0", &SmoothnessConstants::L0)
      .def_readonly("L1", &SmoothnessConstants::L1)
      .def_readonly("l_zstar", &SmoothnessConstants::l_zstar);
  m.def("derive_constants", &derive_constants, py::arg("raw"));

  py::class_<BilevelProblem>(m, "BilevelProblem")
      .def_readonly("name", &BilevelProblem::name)
      .def_readonly("constants", &BilevelProblem::constants)
      .def_property_readonly("dim_x", &BilevelProblem::dim_x)
      .def_property_readonly("dim_y", &BilevelProblem::dim_y)
      .def_property_readonly("has_analytic", [](const BilevelProblem& p) { return p.analytic.has_value(); })
      .def_property_readonly("noise", [](const BilevelProblem& p) { return p.oracle.noise(); })
      .def("phi", &BilevelProblem::phi, py::arg("x"))
      .def("y_star",
           [](const BilevelProblem& p, const Vector& x) {
             if (!p.analytic) throw ConfigError("problem '" + p.name + "' has no analytic oracle");
             return p.analytic->y_star(x);
           },
           py::arg("x"))
      .def("z_star",
           [](const BilevelProblem& p, const Vector& x) {
             if (!p.analytic) throw ConfigError("problem '" + p.name + "' has no analytic oracle");
             return p.analytic->z_star(x);
           },
           py::arg("x"))
      .def("hypergradient",
           [](const BilevelProblem& p, const Vector& x) {
             if (!p.analytic) throw ConfigError("problem '" + p.name + "' has no analytic oracle");
             return p.analytic->hypergrad(x);
           },
           py::arg("x"))
      .def("hypergrad_estimate",
           [](const BilevelProblem& p, const Vector& x, const Vector& y, const Vector& z, std::uint64_t counter,
              std::uint64_t seed) {
             return hypergrad_estimate(x, y, z, {Stream::XiPrime, counter, seed}, {Stream::ZetaPrime, counter, seed},
                                       p.oracle);
           },
           py::arg("x"), py::arg("y"), py::arg("z"), py::arg("counter") = 0, py::arg("seed") = 0);

  m.def("q2", [](const NoiseModel& noise) { return make_quadratic(q2_spec(), noise); },
        py::arg("noise") = NoiseModel{});
  m.def("random_quadratic",
        [](int dim_x, int dim_y, std::uint64_t seed, const NoiseModel& noise) {
          return make_quadratic(random_quadratic_spec(dim_x, dim_y, seed), noise);
        },
        py::arg("dim_x"), py::arg("dim_y"), py::arg("seed"), py::arg("noise") = NoiseModel{});
  m.def("unbounded_smooth",
        [](double a, const NoiseModel& noise) { return make_unbounded_smooth({a, q2_spec()}, noise); },
        py::arg("a") = 1.0, py::arg("noise") = NoiseModel{});
  m.def("hyperclean",
        [](int n_train, int n_val, int feature_dim, double corruption, double lambda, std::uint64_t seed,
           const NoiseModel& noise) {
          HypercleanInstance inst = make_hyperclean({n_train, n_val, feature_dim, corruption, lambda, seed}, noise);
          return py::make_tuple(inst.problem, inst.data->corrupted);
        },
        py::arg("n_train") = 200, py::arg("n_val") = 200, py::arg("feature_dim") = 10, py::arg("corruption") = 0.2,
        py::arg("lambda_") = 0.1, py::arg("seed") = 7, py::arg("noise") = NoiseModel{});
  m.def("hyperclean_weights",
        [](const Vector& x, const std::vector<int>& corrupted) {
          const WeightReport w = hyperclean_weight_report(x, corrupted);
          return py::make_tuple(w.mean_sigma_clean, w.mean_sigma_corrupted);
        },
        py::arg("x"), py::arg("corrupted"));

  py::class_<ParamSchedule>(m, "ParamSchedule")
      .def_property_readonly("mode", [](const ParamSchedule& s) { return to_string(s.mode); })
      .def_readonly("alpha_init", &ParamSchedule::alpha_init)
      .def_readonly("T0", &ParamSchedule::T0)
      .def_readonly("alpha", &ParamSchedule::alpha)
      .def_readonly("beta", &ParamSchedule::beta)
      .def_readonly("gamma", &ParamSchedule::gamma)
      .def_readonly("eta", &ParamSchedule::eta)
      .def_readonly("T", &ParamSchedule::T)
      .def_readonly("T_real", &ParamSchedule::T_real)
      .def_readonly("T_saturated", &ParamSchedule::T_saturated)
      .def_readonly("eps", &ParamSchedule::eps)
      .def_readonly("delta", &ParamSchedule::delta)
      .def_readonly("eps_ceiling", &ParamSchedule::eps_ceiling)
      .def_readonly("binding_term", &ParamSchedule::binding_term)
      .def("truncated",
           [](ParamSchedule s, std::int64_t T) {
             if (T < 1) throw ConfigError("truncated: T must be >= 1");
             if (s.T_saturated || T < s.T) {
               s.T = T;
               s.T_saturated = false;
             }
             return s;
           },
           py::arg("T"));

  m.def("practical_schedule", &schedule_practical, py::arg("values"));
  m.def("theorem_schedule",
        [](const SmoothnessConstants& c, const std::string& mode, double eps, double delta, double Delta0,
           double Delta_y0, double Delta_z0, std::optional<double> grad_phi0_norm) {
          const ScheduleInputs in = schedule_inputs(eps, delta, Delta0, Delta_y0, Delta_z0, grad_phi0_norm);
          switch (parse_schedule_mode(mode)) {
            case ScheduleMode::Theorem41: return schedule_theorem41(c, in);
            case ScheduleMode::Theorem42: return schedule_theorem42(c, in);
            case ScheduleMode::Practical: break;
          }
          throw ConfigError("theorem_schedule: mode must be theorem41 or theorem42");
        },
        py::arg("constants"), py::arg("mode"), py::arg("eps"), py::arg("delta"), py::arg("Delta0"),
        py::arg("Delta_y0"), py::arg("Delta_z0"), py::arg("grad_phi0_norm") = py::none());

  m.def("run",
        [](const BilevelProblem& problem, const ParamSchedule& schedule, const Vector& x0, const Vector& y0,
           const std::optional<Vector>& z0, std::uint64_t seed, const std::string& algorithm,
           std::int64_t refine_interval, std::int64_t refine_steps, std::int64_t fd_every) {
          AlgorithmConfig algo;
          algo.name = algorithm;
          algo.refine_interval = refine_interval;
          algo.refine_steps = refine_steps;
          const InitialPoint init{x0, y0, z0 ? *z0 : Vector::Zero(problem.dim_y())};
          RunOptions opts;
          opts.fd_every = fd_every;
          RunResult r;
          {
            py::gil_scoped_release release;
            r = execute_algorithm(algo, problem, schedule, init, seed, opts);
          }
          return run_result_dict(r);
        },
        py::arg("problem"), py::arg("schedule"), py::arg("x0"), py::arg("y0"), py::arg("z0") = py::none(),
        py::arg("seed") = 1, py::arg("algorithm") = "slip", py::arg("refine_interval") = 2,
        py::arg("refine_steps") = 3, py::arg("fd_every") = 50);

  m.def("run_config",
        [](const std::string& text, const std::optional<std::string>& out, int workers) {
          RunConfig cfg = parse_config(text);
          if (out) cfg.run.out = *out;
          ExperimentOutcome res;
          {
            py::gil_scoped_release release;
            res = run_experiment(cfg, workers);
          }
          py::list seeds;
          for (const SeedOutcome& s : res.seeds) {
            seeds.append(py::dict(py::arg("seed") = s.seed, py::arg("trace") = s.trace_path,
                                  py::arg("status") = to_string(s.status), py::arg("rows") = s.rows,
                                  py::arg("final_x") = s.final_x));
          }
          return py::dict(py::arg("metadata") = res.metadata_path, py::arg("failed") = res.any_failed,
                          py::arg("seeds") = seeds);
        },
        py::arg("config_text"), py::arg("out") = py::none(), py::arg("workers") = 0);

  m.def("sweep",
        [](const std::string& text, const std::vector<double>& eps) {
          const SweepSummary s = sweep_eps(parse_config(text), eps);
          py::list rows;
          for (const SweepRow& r : s.rows) {
            rows.append(py::dict(py::arg("eps") = r.eps, py::arg("skipped") = r.skipped, py::arg("T") = r.T,
                                 py::arg("T0") = r.T0, py::arg("total_calls") = r.total_calls,
                                 py::arg("avg_grad_norm") = r.avg_grad_norm, py::arg("eps_ceiling") = r.eps_ceiling,
                                 py::arg("binding_term") = r.binding_term));
          }
          return py::dict(py::arg("rows") = rows, py::arg("slope") = s.slope, py::arg("csv") = format_sweep_csv(s));
        },
        py::arg("config_text"), py::arg("eps"));

  m.def("suite_names", &suite_names);
  m.def("verify",
        [](const std::string& suite) {
          std::vector<SuiteCheck> checks;
          {
            py::gil_scoped_release release;
            checks = run_suite(suite);
          }
          py::list out;
          for (const SuiteCheck& c : checks) {
            out.append(py::dict(py::arg("suite") = c.suite, py::arg("name") = c.name, py::arg("passed") = c.pass,
                                py::arg("detail") = c.detail));
          }
          return out;
        },
        py::arg("suite") = "all");

  m.def("read_trace", [](const std::filesystem::path& path) { return trace_columns_dict(read_trace(path)); },
        py::arg("path"));
  m.def("render_svg",
        [](const std::vector<std::tuple<std::string, std::vector<double>, std::vector<double>>>& series,
           const std::string& title, const std::string& x_label, const std::string& y_label, bool log_y) {
          std::vector<PlotSeries> s;
          for (const auto& [label, x, y] : series) s.push_back({label, x, y});
          PlotOptions opts;
          opts.title = title;
          opts.x_label = x_label;
          opts.y_label = y_label;
          opts.log_y = log_y;
          return render_svg(s, opts);
        },
        py::arg("series"), py::arg("title") = "", py::arg("x_label") = "t", py::arg("y_label") = "",
        py::arg("log_y") = false);
}
