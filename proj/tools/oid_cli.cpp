// Command-line front end: simulate, design, estimate, study, run-test, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "oid/config.hpp"
#include "oid/design.hpp"
#include "oid/error.hpp"
#include "oid/estimation.hpp"
#include "oid/experiment.hpp"
#include "oid/serialization.hpp"
#include "oid/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsageExit = 2;
constexpr int kFailureExit = 1;

oid::KeyValueConfig load_config(const std::string& path) {
  return path.empty() ? oid::KeyValueConfig::parse("", "<defaults>")
                      : oid::KeyValueConfig::load(path);
}

json vector_json(const oid::ParameterVector& mu) {
  return std::vector<double>(mu.data(), mu.data() + oid::kNumParameters);
}

void print_iteration(const oid::DesignIteration& it) {
  std::fprintf(stderr, "iteration %d: phi %.4g  J %.3e  beta %.3e", it.index,
               it.phi, it.cost, it.beta);
  if (it.relative_error) std::fprintf(stderr, "  rel_err %.3e", *it.relative_error);
  std::fprintf(stderr, "  (%.1f s)\n", it.wall_seconds);
}

int cmd_simulate(const std::string& params, const std::string& input,
                 const std::string& out, const std::string& config,
                 std::optional<double> v0) {
  const oid::ModelConfig model = oid::model_config_from(load_config(config));
  const oid::ParameterVector mu = oid::load_parameters(params);
  std::ifstream in(input);
  if (!in) throw oid::Error(oid::ErrorCode::kIo, "cannot open " + input);
  const oid::ProfileFile file = oid::read_profile_csv(in, input);
  const oid::VoltageTrace trace =
      oid::simulate(model, mu, file.profile, v0.value_or(file.initial_voltage));
  std::ostringstream text;
  oid::write_trace_csv(trace, text);
  oid::write_text_file(out, text.str());
  return 0;
}

int cmd_design(const std::string& framework, const std::string& config,
               const std::string& out) {
  oid::KeyValueConfig kv = load_config(config);
  const oid::Framework fw = oid::parse_framework(framework);
  if (kv.has("design.framework") &&
      oid::parse_framework(kv.get_string("design.framework", "")) != fw) {
    throw oid::Error(oid::ErrorCode::kConfig,
                     "--framework contradicts design.framework in the config");
  }
  kv.set("design.framework", framework);
  if (!kv.has("experiment.test")) {
    kv.set("experiment.test", fw == oid::Framework::kCollection ? "1" : "3");
  }
  const oid::ExperimentConfig cfg = oid::experiment_config_from(kv);
  oid::VirtualDataSource source(cfg.model, cfg.truth, cfg.noise_sigma, cfg.noise_seed);
  const oid::DesignRecord record =
      oid::run_design(cfg.model, cfg.design, source, print_iteration);

  const fs::path dir(out);
  oid::write_text_file(dir / "design_record.json", oid::design_record_json(record));
  std::ostringstream summary;
  oid::write_design_summary_csv(record, summary);
  oid::write_text_file(dir / "design_summary.csv", summary.str());
  const auto profiles = record.input_profiles();
  for (std::size_t n = 0; n < profiles.size(); ++n) {
    std::ostringstream csv;
    oid::write_profile_csv(profiles[n], record.iterations[n].input.initial_voltage, csv);
    oid::write_text_file(dir / ("input_" + std::to_string(n + 1) + ".csv"), csv.str());
  }
  if (record.framework == oid::Framework::kConcatenated) {
    std::ostringstream csv;
    oid::write_profile_csv(record.full_profile(), record.config.global_voltage, csv);
    oid::write_text_file(dir / "full_profile.csv", csv.str());
  }
  std::ostringstream matrices;
  for (const auto& it : record.iterations) {
    matrices << "# iteration " << it.index << '\n';
    oid::write_matrix_csv(it.information, matrices);
  }
  oid::write_text_file(dir / "information_matrices.csv", matrices.str());
  std::cout << json{{"inputs", record.iterations.size()},
                    {"experiment_time_s", record.experiment_time()},
                    {"stopped_by_criterion", record.stopped_by_criterion},
                    {"out", dir.string()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_estimate(const std::string& data_path, const std::string& config,
                 const std::string& mode, const std::string& start,
                 const std::string& out) {
  const oid::ExperimentConfig cfg = oid::experiment_config_from(load_config(config));
  const oid::DataSet data = oid::ingest_measurements(
      fs::path(data_path), oid::parse_ingest_mode(mode), cfg.model.time_step);
  const oid::ParameterVector mu0 =
      start.empty() ? cfg.design.initial_guess : oid::load_parameters(start);
  const oid::EstimationResult r = oid::estimate(cfg.model, mu0, data, cfg.solver);
  json doc{{"mu", vector_json(r.mu)},
           {"J", r.cost},
           {"converged", r.converged},
           {"iterations", r.iterations},
           {"evaluations", r.evaluations},
           {"message", r.message},
           {"data_points", data.size()}};
  const std::string text = doc.dump(2) + "\n";
  if (!out.empty()) oid::write_text_file(out, text);
  std::cout << text;
  return r.converged ? 0 : kFailureExit;
}

int cmd_study(const std::string& data_path, const std::string& config,
              const std::string& mode, std::optional<int> runs,
              std::optional<std::uint64_t> seed, const std::string& out) {
  oid::ExperimentConfig cfg = oid::experiment_config_from(load_config(config));
  if (runs) cfg.study.runs = *runs;
  if (seed) cfg.study.seed = *seed;
  const oid::DataSet data = oid::ingest_measurements(
      fs::path(data_path), oid::parse_ingest_mode(mode), cfg.model.time_step);
  const oid::StudyTable table = oid::restart_study(cfg.model, data, cfg.study);
  const fs::path dir(out);
  std::ostringstream csv;
  oid::write_study_csv(table, csv);
  oid::write_text_file(dir / "study.csv", csv.str());
  for (int j = 0; j < oid::kNumParameters; ++j) {
    oid::write_text_file(dir / ("hist_mu" + std::to_string(j + 1) + ".json"),
                         oid::histogram_json(table.histograms[static_cast<std::size_t>(j)], j));
  }
  int converged = 0;
  for (const auto& r : table.runs) converged += r.result.converged ? 1 : 0;
  std::cout << json{{"runs", table.runs.size()},
                    {"converged", converged},
                    {"mu_opt", vector_json(oid::propose_optimum(table))},
                    {"out", dir.string()}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_run_test(int test, const std::string& config, const std::string& out,
                 std::optional<int> runs) {
  oid::KeyValueConfig kv = load_config(config);
  kv.set("experiment.test", std::to_string(test));
  oid::ExperimentConfig cfg = oid::experiment_config_from(kv);
  if (!out.empty()) cfg.output_dir = out;
  if (runs) cfg.study.runs = *runs;
  const oid::TestReport report = oid::run_test(cfg);
  std::cout << oid::summary_json(report);
  return 0;
}

int cmd_report(const std::string& dir_text) {
  const fs::path dir(dir_text);
  const json summary = json::parse(oid::read_text_file(dir / "summary.json"));
  std::optional<double> mean_time;
  if (fs::exists(dir / "timing.json")) {
    mean_time = json::parse(oid::read_text_file(dir / "timing.json"))
                    .at("mean_optimization_time_s")
                    .get<double>();
  }
  std::printf("Test %d (%s framework, %s data)\n", summary.at("test").get<int>(),
              summary.at("framework").get<std::string>().c_str(),
              summary.at("mode").get<std::string>().c_str());
  std::printf("  experiment time (s)      %.0f\n",
              summary.at("experiment_time_s").get<double>());
  std::printf("  data points              %zu\n",
              summary.at("data_points").get<std::size_t>());
  if (mean_time) std::printf("  mean optimization (s)    %.3f\n", *mean_time);
  std::printf("  study runs (converged)   %d (%d)\n",
              summary.at("study_runs").get<int>(),
              summary.at("study_converged").get<int>());
  std::printf("  proposed mu              ");
  for (const auto& v : summary.at("mu_opt")) std::printf(" %.6g", v.get<double>());
  std::printf("\n");
  if (!summary.at("mu_opt_rel_err").is_null()) {
    std::printf("  rel. error of proposal   %.3e\n",
                summary.at("mu_opt_rel_err").get<double>());
  }
  if (!summary.at("success_fraction_1e-2").is_null()) {
    std::printf("  runs within 1e-2         %.2f\n",
                summary.at("success_fraction_1e-2").get<double>());
  }
  std::printf("  max |relative error|     %.3e\n",
              summary.at("max_abs_rel_error_trace").get<double>());
  return 0;
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal input design and parameter estimation for a "
               "single-particle lithium-ion cell model"};
  app.require_subcommand(1);

  std::string params, input, out, config, framework, data, mode = "cut", start, dir;
  std::string study_out = ".";
  std::optional<double> v0;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  int test = 0;

  auto* sim = app.add_subcommand("simulate", "Simulate the voltage for a current profile");
  sim->add_option("--params", params, "Parameter file (mu = ... or JSON {\"mu\": [...]})")->required()->check(CLI::ExistingFile);
  sim->add_option("--input", input, "Current profile CSV (time_s,current_A)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output trace CSV")->required();
  sim->add_option("--config", config, "Key-value config file")->check(CLI::ExistingFile);
  sim->add_option("--v0", v0, "Initial voltage (overrides the profile file)");

  auto* des = app.add_subcommand("design", "Run an adaptive input design on virtual data");
  des->add_option("--framework", framework, "collection or concat")->required()
      ->check(CLI::IsMember({"collection", "concat", "concatenated"}));
  des->add_option("--config", config, "Key-value config file")->check(CLI::ExistingFile);
  des->add_option("--out", out, "Output directory")->required();

  auto* est = app.add_subcommand("estimate", "Estimate parameters from a measurement CSV");
  est->add_option("--data", data, "Measurement CSV")->required()->check(CLI::ExistingFile);
  est->add_option("--config", config, "Key-value config file")->check(CLI::ExistingFile);
  est->add_option("--mode", mode, "cut or full")->check(CLI::IsMember({"cut", "full"}));
  est->add_option("--start", start, "Start parameter file")->check(CLI::ExistingFile);
  est->add_option("--out", out, "Write the result JSON here as well");

  auto* stu = app.add_subcommand("study", "Randomized-restart estimation study");
  stu->add_option("--data", data, "Measurement CSV")->required()->check(CLI::ExistingFile);
  stu->add_option("--runs", runs, "Number of restarts")->check(CLI::PositiveNumber);
  stu->add_option("--seed", seed, "Random seed");
  stu->add_option("--config", config, "Key-value config file")->check(CLI::ExistingFile);
  stu->add_option("--mode", mode, "cut or full")->check(CLI::IsMember({"cut", "full"}));
  stu->add_option("--out", study_out, "Output directory")->capture_default_str();

  auto* run = app.add_subcommand("run-test", "Run one of the four test pipelines");
  run->add_option("--test", test, "Test number 1-4")->required()->check(CLI::Range(1, 4));
  run->add_option("--config", config, "Key-value config file")->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides experiment.output_dir)");
  run->add_option("--runs", runs, "Number of study restarts")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "Print a summary of a report bundle");
  rep->add_option("--dir", dir, "Report bundle directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsageExit;
  }

  try {
    if (*sim) return cmd_simulate(params, input, out, config, v0);
    if (*des) return cmd_design(framework, config, out);
    if (*est) return cmd_estimate(data, config, mode, start, out);
    if (*stu) return cmd_study(data, config, mode, runs, seed, study_out);
    if (*run) return cmd_run_test(test, config, out, runs);
    if (*rep) return cmd_report(dir);
  } catch (const oid::Error& e) {
    print_error(oid::to_string(e.code()), e.what());
    return kFailureExit;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kFailureExit;
  }
  return kUsageExit;
}
