#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "odlc/analytics.hpp"
#include "odlc/config.hpp"
#include "odlc/experiment.hpp"
#include "odlc/montecarlo.hpp"
#include "odlc/qp_engine.hpp"
#include "odlc/trace.hpp"
#include "odlc/valley_engine.hpp"

namespace py = pybind11;
using namespace odlc;

PYBIND11_MODULE(_odlc, m) {
  m.doc() = "Deferrable-load MPC engines, closed-form variance bounds and ensembles.";

  auto base_error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());
  py::register_exception<DataError>(m, "DataError", base_error.ptr());
  py::register_exception<SolverError>(m, "SolverError", base_error.ptr());
  py::register_exception<RunError>(m, "RunError", base_error.ptr());

  py::class_<CausalFilter>(m, "CausalFilter")
      .def(py::init<std::vector<double>>(), py::arg("coefficients"))
      .def_static("identity", &CausalFilter::identity)
      .def("at", &CausalFilter::at, py::arg("lag"))
      .def("cumulative", &CausalFilter::cumulative, py::arg("t"))
      .def_property_readonly("coefficients", &CausalFilter::coefficients)
      .def("warnings", &CausalFilter::warnings);

  py::class_<BaseloadModel>(m, "BaseloadModel")
      .def(py::init([](std::vector<double> mean_profile, CausalFilter filter, double sigma,
                       double eps2) {
             BaseloadModel b{std::move(mean_profile), std::move(filter), sigma, eps2};
             b.validate();
             return b;
           }),
           py::arg("mean_profile"), py::arg("filter") = CausalFilter::identity(),
           py::arg("sigma") = 0.0, py::arg("eps2") = 0.0)
      .def_readonly("mean_profile", &BaseloadModel::mean_profile)
      .def_readonly("filter", &BaseloadModel::filter)
      .def_readonly("sigma", &BaseloadModel::sigma)
      .def_readonly("eps2", &BaseloadModel::eps2)
      .def_property_readonly("horizon", &BaseloadModel::horizon);

  py::class_<ArrivalModel>(m, "ArrivalModel")
      .def(py::init([](double lambda, double s, double eps1, bool allow_negative) {
             ArrivalModel a{lambda, s, eps1, allow_negative};
             a.validate();
             return a;
           }),
           py::arg("lam"), py::arg("s") = 0.0, py::arg("eps1") = 0.0,
           py::arg("allow_negative") = false)
      .def_readonly("lam", &ArrivalModel::lambda)
      .def_readonly("s", &ArrivalModel::s)
      .def_readonly("eps1", &ArrivalModel::eps1);

  py::class_<ScenarioDraw>(m, "ScenarioDraw")
      .def(py::init([](std::vector<double> e, std::vector<double> a,
                       std::vector<double> realized) {
             return ScenarioDraw{std::move(e), std::move(a), std::move(realized), 0};
           }),
           py::arg("e"), py::arg("a"), py::arg("realized_baseload"))
      .def_readonly("e", &ScenarioDraw::e)
      .def_readonly("a", &ScenarioDraw::a)
      .def_readonly("realized_baseload", &ScenarioDraw::realized_baseload)
      .def_readonly("seed", &ScenarioDraw::seed);

  m.def("sample_scenario", &sample_scenario, py::arg("baseload"), py::arg("arrivals"),
        py::arg("T"), py::arg("seed"));
  m.def("adversarial_scenario", &adversarial_scenario, py::arg("baseload"),
        py::arg("arrivals"), py::arg("T"));
  m.def("predict_baseload", &predict_baseload, py::arg("baseload"), py::arg("e"), py::arg("t"));

  py::class_<AggregateTrajectory>(m, "AggregateTrajectory")
      .def_readonly("d", &AggregateTrajectory::d)
      .def_readonly("levels", &AggregateTrajectory::levels)
      .def_readonly("variance", &AggregateTrajectory::variance)
      .def_readonly("negative_deferrable_slots", &AggregateTrajectory::negative_deferrable_slots);

  m.def("run_valley_mpc", &run_valley_mpc, py::arg("scenario"), py::arg("baseload"),
        py::arg("arrivals"));
  m.def("check_valley_filling",
        [](const std::vector<double>& aggregate, double tol) {
          return check_valley_filling(aggregate, tol);
        },
        py::arg("aggregate"), py::arg("tol") = kValleyFillingTol);
  m.def("load_variance", [](const std::vector<double>& d) { return load_variance(d); },
        py::arg("d"));

  m.def("project_box_sum",
        [](const std::vector<double>& v, const std::vector<double>& lo,
           const std::vector<double>& hi, double total) {
          return project_box_sum(v, lo, hi, total);
        },
        py::arg("v"), py::arg("lower"), py::arg("upper"), py::arg("total"));

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init([](double kkt_tol, int max_iters) {
             SolverOptions o;
             o.kkt_tol = kkt_tol;
             o.max_iters = max_iters;
             o.validate();
             return o;
           }),
           py::arg("kkt_tol") = 1e-8, py::arg("max_iters") = 50'000)
      .def_readonly("kkt_tol", &SolverOptions::kkt_tol)
      .def_readonly("max_iters", &SolverOptions::max_iters);

  m.def("run_mpc",
        [](const ScenarioDraw& scenario, const BaseloadModel& baseload,
           const ArrivalModel& arrivals, int devices_per_slot, double p_max,
           const SolverOptions& opts) {
          const auto loads = loads_from_arrivals(scenario, devices_per_slot, p_max);
          return run_mpc(loads, scenario, baseload, arrivals, opts).trajectory;
        },
        "Device-level MPC with each slot's arrivals split over identical devices.",
        py::arg("scenario"), py::arg("baseload"), py::arg("arrivals"),
        py::arg("devices_per_slot") = 1, py::arg("p_max") = 1e6,
        py::arg("options") = SolverOptions{});

  py::class_<ErrorBounds>(m, "ErrorBounds")
      .def(py::init([](double eps1, double eps2) { return ErrorBounds{eps1, eps2}; }),
           py::arg("eps1") = 0.0, py::arg("eps2") = 0.0)
      .def_readonly("eps1", &ErrorBounds::eps1)
      .def_readonly("eps2", &ErrorBounds::eps2);

  py::class_<VDecomposition>(m, "VDecomposition")
      .def_readonly("v1", &VDecomposition::v1)
      .def_readonly("v2", &VDecomposition::v2)
      .def_readonly("cross", &VDecomposition::cross)
      .def("total", &VDecomposition::total);

  m.def("v_decomposition", &v_decomposition, py::arg("scenario"), py::arg("filter"),
        py::arg("lam"), py::arg("T"));
  m.def("expected_variance", &expected_variance, py::arg("T"), py::arg("s"), py::arg("sigma"),
        py::arg("filter"));
  m.def("worst_case_variance", &worst_case_variance, py::arg("T"), py::arg("bounds"),
        py::arg("filter"));
  m.def("coupled_worst_case_variance", &coupled_worst_case_variance, py::arg("T"),
        py::arg("bounds"), py::arg("filter"));
  m.def("lambda1", &lambda1, py::arg("T"), py::arg("filter"));
  m.def("lambda1_trace", &lambda1_trace, py::arg("T"), py::arg("filter"));
  m.def("bernstein_tail", &bernstein_tail, py::arg("dev"), py::arg("expected_v"),
        py::arg("bounds"), py::arg("lambda1"));
  m.def("percentile_bound", &percentile_bound, py::arg("eta"), py::arg("expected_v"),
        py::arg("bounds"), py::arg("lambda1"));
  m.def("variance_upper_bound", &variance_upper_bound, py::arg("T"), py::arg("bounds"),
        py::arg("s"), py::arg("sigma"), py::arg("filter"));
  m.def("chebyshev_tail", &chebyshev_tail, py::arg("dev"), py::arg("variance_bound"));

  m.def("analytic_report",
        [](const BaseloadModel& b, const ArrivalModel& a, int points) {
          return py::module_::import("json").attr("loads")(
              to_json(make_analytic_report(b, a, points)).dump());
        },
        "Every closed form for one environment, as a dict.", py::arg("baseload"),
        py::arg("arrivals"), py::arg("points") = 21);

  m.def("run_ensemble",
        [](const BaseloadModel& b, const ArrivalModel& a, int count, std::uint64_t base_seed,
           const std::string& engine, int threads, int devices_per_slot, double p_max) {
          SimulationSetup setup;
          setup.baseload = b;
          setup.arrivals = a;
          setup.fleet = FleetOptions{devices_per_slot, p_max};
          EnsembleResult r;
          {
            py::gil_scoped_release release;
            r = run_ensemble(setup, count, base_seed, parse_engine(engine), threads);
          }
          return py::make_tuple(r.samples, r.seeds);
        },
        "Returns (samples, seeds).", py::arg("baseload"), py::arg("arrivals"),
        py::arg("count"), py::arg("base_seed") = 0, py::arg("engine") = "valley",
        py::arg("threads") = 1, py::arg("devices_per_slot") = 1, py::arg("p_max") = 1e6);

  m.def("empirical_cdf",
        [](const std::vector<double>& samples) {
          const auto cdf = empirical_cdf(samples);
          return py::make_tuple(cdf.values, cdf.probabilities);
        },
        py::arg("samples"));
  m.def("empirical_percentile",
        [](const std::vector<double>& samples, double eta) {
          return empirical_percentile(samples, eta);
        },
        py::arg("samples"), py::arg("eta"));

  m.def("ingest_trace",
        [](const std::filesystem::path& path, int T, std::optional<double> penetration) {
          auto trace = read_trace(path);
          if (penetration) trace = scale_renewable(std::move(trace), *penetration);
          return ingest_trace(trace, T);
        },
        py::arg("path"), py::arg("T"), py::arg("penetration") = py::none());

  m.def("run_experiment",
        [](const std::filesystem::path& config_path, const std::string& command,
           const std::filesystem::path& out_dir) {
          Command cmd;
          if (command == "simulate") cmd = Command::kSimulate;
          else if (command == "mc") cmd = Command::kMonteCarlo;
          else if (command == "bounds") cmd = Command::kBounds;
          else if (command == "worst-case") cmd = Command::kWorstCase;
          else throw ConfigError("unknown command '" + command + "'");
          const auto config = load_config(config_path);
          ExperimentArtifacts art;
          {
            py::gil_scoped_release release;
            art = run_experiment(config, cmd, out_dir);
          }
          return py::module_::import("json").attr("loads")(art.report.dump());
        },
        "Runs a CLI subcommand from a config file and returns report.json as a dict.",
        py::arg("config"), py::arg("command"), py::arg("out_dir"));
}
