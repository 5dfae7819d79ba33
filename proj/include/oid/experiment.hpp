#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oid/config.hpp"
#include "oid/design.hpp"
#include "oid/estimation.hpp"
#include "oid/simulator.hpp"

namespace oid {

enum class IngestMode { kCut, kFull };

const char* to_string(IngestMode mode);
IngestMode parse_ingest_mode(const std::string& text);

struct ExperimentConfig {
  ModelConfig model;
  DesignConfig design;
  LeastSquaresOptions solver;
  StudyOptions study;
  int test = 1;  // 1, 2: collection; 3, 4: concatenated
  std::optional<IngestMode> mode;  // default: cut for 1 and 3, full otherwise
  std::filesystem::path output_dir = "oid_report";
  std::optional<std::filesystem::path> design_record;
  std::optional<std::filesystem::path> measurements;
  ParameterVector truth = synthetic_truth();
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 7;
  double rest_between_inputs = 600.0;  // full-timeline fixtures
  double prep_duration = 60.0;

  IngestMode ingest_mode() const;
  Framework framework() const;
  // Range and framework consistency; runs before any computation.
  void validate() const;
};

// Builds a configuration from `key = value` entries. Unknown keys are an
// error so that typos never fall back to defaults silently.
ExperimentConfig experiment_config_from(const KeyValueConfig& kv);
ModelConfig model_config_from(const KeyValueConfig& kv);

struct MeasurementRow {
  double time = 0.0;
  double current = 0.0;
  double voltage = 0.0;
  Phase phase = Phase::kImpulse;
};

// `time_s,current_A,voltage_V,phase` with `#` comment lines.
std::vector<MeasurementRow> read_measurements(std::istream& in,
                                              const std::string& origin);
std::vector<MeasurementRow> read_measurements(const std::filesystem::path& path);
void write_measurements(const std::vector<MeasurementRow>& rows,
                        std::ostream& out);

// Current profile on the model grid from sampled currents: the value on
// [k dt, (k+1) dt) is the last sample taken at or before k dt.
CurrentProfile hold_profile(const std::vector<double>& time,
                            const std::vector<double>& current, double dt);

// cut: one block per run of impulse rows, starting from the voltage of the
// row before it; full: one block over every row.
DataSet ingest_measurements(const std::vector<MeasurementRow>& rows,
                            IngestMode mode, double dt);
DataSet ingest_measurements(const std::filesystem::path& path, IngestMode mode,
                            double dt);

// Rows of the kept samples, in block order.
std::vector<MeasurementRow> dataset_rows(const DataSet& data);

// Noiseless (or noisy, sigma > 0) data for each designed record: the
// collection inputs, or the whole concatenated profile as one block.
DataSet generate_virtual_data(const ModelConfig& model,
                              const ParameterVector& truth,
                              const DesignRecord& record,
                              double noise_sigma = 0.0, std::uint64_t seed = 1);

// Synthetic lab files. `blocks` puts a short rest at each record's exact
// initial voltage before its impulse rows. `timeline` runs the whole
// experiment as one simulation: a preparation rest, then each record followed
// by `rest` seconds at zero current sampled every second. Later records are
// preceded by a tapered charge to their initial voltage and a settling rest.
std::vector<MeasurementRow> blocks_fixture(const ModelConfig& model,
                                           const ParameterVector& truth,
                                           const DesignRecord& record,
                                           double noise_sigma, std::uint64_t seed);
std::vector<MeasurementRow> timeline_fixture(const ModelConfig& model,
                                             const ParameterVector& truth,
                                             const DesignRecord& record,
                                             double prep, double rest,
                                             double noise_sigma,
                                             std::uint64_t seed);

struct TestReport {
  int test = 0;
  Framework framework = Framework::kCollection;
  IngestMode mode = IngestMode::kCut;
  double experiment_time = 0.0;
  std::size_t data_points = 0;
  std::size_t blocks = 0;
  double mean_optimization_time = 0.0;
  ParameterVector proposed = ParameterVector::Zero();
  std::optional<double> proposed_error;
  std::optional<double> success_fraction;  // rel error <= 1e-2
  double max_trace_error = 0.0;
  StudyTable study;
  std::vector<std::filesystem::path> files;
};

// Design (loaded or computed) -> data (file or synthetic fixture) -> restart
// study -> proposed optimum -> relative error traces, written to
// config.output_dir.
TestReport run_test(const ExperimentConfig& config);

std::string summary_json(const TestReport& report);

}  // namespace oid
