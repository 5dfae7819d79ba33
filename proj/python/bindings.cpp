// Python entry points. Results cross the boundary as plain dicts and lists;
// design records and summaries travel as JSON text.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "oid/config.hpp"
#include "oid/design.hpp"
#include "oid/error.hpp"
#include "oid/experiment.hpp"
#include "oid/serialization.hpp"

namespace py = pybind11;

namespace {

using Overrides = std::map<std::string, py::object>;

std::string config_value(const py::handle& value) {
  if (py::isinstance<py::str>(value)) return value.cast<std::string>();
  if (py::isinstance<py::bool_>(value)) return value.cast<bool>() ? "true" : "false";
  if (py::isinstance<py::int_>(value)) return std::to_string(value.cast<long long>());
  if (py::isinstance<py::float_>(value)) return oid::format_double(value.cast<double>());
  std::string joined;
  for (const auto& item : value) {
    if (!joined.empty()) joined += ", ";
    joined += config_value(item);
  }
  return joined;
}

oid::KeyValueConfig make_config(const Overrides& overrides) {
  oid::KeyValueConfig kv = oid::KeyValueConfig::parse("", "<python>");
  for (const auto& [key, value] : overrides) kv.set(key, config_value(value));
  return kv;
}

std::vector<double> to_vector(const oid::ParameterVector& mu) {
  return {mu.data(), mu.data() + mu.size()};
}

oid::ParameterVector to_mu(const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(oid::kNumParameters)) {
    throw oid::Error(oid::ErrorCode::kConfig, "mu needs 9 entries");
  }
  oid::ParameterVector mu;
  for (int j = 0; j < oid::kNumParameters; ++j) mu[j] = values[static_cast<std::size_t>(j)];
  return mu;
}

py::dict result_dict(const oid::EstimationResult& r, std::size_t points) {
  py::dict d;
  d["mu"] = to_vector(r.mu);
  d["J"] = r.cost;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  d["evaluations"] = r.evaluations;
  d["message"] = r.message;
  d["data_points"] = points;
  return d;
}

oid::DataSet rows_dataset(const std::vector<double>& time,
                          const std::vector<double>& current,
                          const std::vector<double>& voltage,
                          const std::vector<std::string>& phase,
                          const std::string& mode, double dt) {
  const std::size_t n = time.size();
  if (current.size() != n || voltage.size() != n || phase.size() != n) {
    throw oid::Error(oid::ErrorCode::kData, "time, current, voltage and phase differ in length");
  }
  std::vector<oid::MeasurementRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = {time[i], current[i], voltage[i], oid::parse_phase(phase[i])};
  }
  return oid::ingest_measurements(rows, oid::parse_ingest_mode(mode), dt);
}

py::dict simulate(const std::vector<double>& mu, const std::vector<double>& amplitudes,
                  double horizon, double initial_voltage, const Overrides& config) {
  const oid::ModelConfig model = oid::model_config_from(make_config(config));
  oid::VoltageTrace trace;
  {
    py::gil_scoped_release release;
    const auto profile = oid::CurrentProfile::uniform_steps(amplitudes, horizon);
    trace = oid::simulate(model, to_mu(mu), profile, initial_voltage);
  }
  py::dict d;
  d["time"] = trace.time;
  d["current"] = trace.current;
  d["voltage"] = trace.voltage;
  return d;
}

std::string design(const std::string& framework, const Overrides& config,
                   const std::function<void(int, double)>& progress) {
  oid::KeyValueConfig kv = make_config(config);
  kv.set("design.framework", framework);
  if (!kv.has("experiment.test")) {
    kv.set("experiment.test",
           oid::parse_framework(framework) == oid::Framework::kCollection ? "1" : "3");
  }
  const oid::ExperimentConfig cfg = oid::experiment_config_from(kv);
  oid::VirtualDataSource source(cfg.model, cfg.truth, cfg.noise_sigma, cfg.noise_seed);
  oid::DesignObserver observer;
  if (progress) {
    observer = [&progress](const oid::DesignIteration& it) {
      py::gil_scoped_acquire acquire;
      progress(it.index, it.phi);
    };
  }
  py::gil_scoped_release release;
  return oid::design_record_json(oid::run_design(cfg.model, cfg.design, source, observer));
}

py::dict estimate(const std::vector<double>& time, const std::vector<double>& current,
                  const std::vector<double>& voltage, const std::vector<std::string>& phase,
                  const std::string& mode, const std::optional<std::vector<double>>& start,
                  const Overrides& config) {
  const oid::ExperimentConfig cfg = oid::experiment_config_from(make_config(config));
  const oid::DataSet data =
      rows_dataset(time, current, voltage, phase, mode, cfg.model.time_step);
  const oid::ParameterVector mu0 = start ? to_mu(*start) : cfg.design.initial_guess;
  oid::EstimationResult r;
  {
    py::gil_scoped_release release;
    r = oid::estimate(cfg.model, mu0, data, cfg.solver);
  }
  return result_dict(r, data.size());
}

py::dict study(const std::vector<double>& time, const std::vector<double>& current,
               const std::vector<double>& voltage, const std::vector<std::string>& phase,
               const std::string& mode, int runs, std::uint64_t seed,
               const Overrides& config) {
  oid::ExperimentConfig cfg = oid::experiment_config_from(make_config(config));
  cfg.study.runs = runs;
  cfg.study.seed = seed;
  const oid::DataSet data =
      rows_dataset(time, current, voltage, phase, mode, cfg.model.time_step);
  oid::StudyTable table;
  {
    py::gil_scoped_release release;
    table = oid::restart_study(cfg.model, data, cfg.study);
  }
  py::list list;
  for (const auto& run : table.runs) {
    py::dict d = result_dict(run.result, data.size());
    d["start"] = to_vector(run.start);
    list.append(d);
  }
  py::dict out;
  out["runs"] = list;
  out["proposed"] = to_vector(oid::propose_optimum(table));
  return out;
}

std::string run_test(int test, const Overrides& config,
                     const std::filesystem::path& output_dir) {
  oid::KeyValueConfig kv = make_config(config);
  kv.set("experiment.test", std::to_string(test));
  kv.set("experiment.output_dir", output_dir.string());
  const oid::ExperimentConfig cfg = oid::experiment_config_from(kv);
  py::gil_scoped_release release;
  return oid::summary_json(oid::run_test(cfg));
}

}  // namespace

PYBIND11_MODULE(_oid_spm, m) {
  m.doc() = "Optimal input design for single-particle-model parameter estimation";

  static py::exception<oid::Error> error(m, "OidError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const oid::Error& e) {
      PyErr_SetString(error.ptr(),
                      (std::string(oid::to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.attr("NUM_PARAMETERS") = oid::kNumParameters;
  m.def("synthetic_truth", [] { return to_vector(oid::synthetic_truth()); });
  m.def("initial_guess", [] { return to_vector(oid::default_initial_guess()); });
  m.def("relative_error", [](const std::vector<double>& estimate, const std::vector<double>& truth) {
    return oid::relative_parameter_error(to_mu(estimate), to_mu(truth));
  });

  m.def("simulate", &simulate, py::arg("mu"), py::arg("amplitudes"), py::arg("horizon"),
        py::arg("initial_voltage"), py::arg("config") = Overrides{},
        "Voltage trace for a piecewise-constant current of equal steps over `horizon`.");
  m.def("design", &design, py::arg("framework") = "collection",
        py::arg("config") = Overrides{}, py::arg("progress") = nullptr,
        "Runs a design against simulated measurements; returns the record as JSON.");
  m.def("estimate", &estimate, py::arg("time"), py::arg("current"), py::arg("voltage"),
        py::arg("phase"), py::arg("mode") = "cut", py::arg("start") = py::none(),
        py::arg("config") = Overrides{});
  m.def("study", &study, py::arg("time"), py::arg("current"), py::arg("voltage"),
        py::arg("phase"), py::arg("mode") = "cut", py::arg("runs") = 100,
        py::arg("seed") = 1, py::arg("config") = Overrides{});
  m.def("run_test", &run_test, py::arg("test"), py::arg("config") = Overrides{},
        py::arg("output_dir") = "oid_report",
        "Runs one test pipeline; returns the summary as JSON.");
}
