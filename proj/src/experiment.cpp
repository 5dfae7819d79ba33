#include "oid/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "oid/error.hpp"
#include "oid/serialization.hpp"

namespace oid {
namespace {

struct Record {
  CurrentProfile profile;
  double initial_voltage;
};

// What was actually applied to the cell: every collection input, or the
// concatenated profile as a single record.
std::vector<Record> applied_records(const DesignRecord& record) {
  if (record.iterations.empty()) {
    throw Error(ErrorCode::kData, "design record has no iterations");
  }
  std::vector<Record> out;
  if (record.framework == Framework::kCollection) {
    for (const auto& it : record.iterations) {
      out.push_back({it.input.profile(), it.input.initial_voltage});
    }
  } else {
    out.push_back({record.full_profile(), record.config.global_voltage});
  }
  return out;
}

constexpr double kSettle = 600.0;  // s of rest after a charge

// Charge or discharge that brings the settled voltage across `target`, as a
// lab charger would before an input. The current starts at 1 A and is halved
// whenever a step engages the concentration guard more than resting would,
// like the taper of a constant-voltage phase.
CurrentProfile charge_to(const CellSimulator& cell, double target, double dt) {
  constexpr double kCurrent = 1.0;         // A
  constexpr double kMinCurrent = 1.0 / 64.0;
  constexpr double kMaxDuration = 7200.0;  // s
  const double gap = cell.settled_voltage() - target;
  if (gap == 0.0) return {};
  VoltageTrace scratch;
  CellSimulator trial = cell;
  trial.advance(CurrentProfile::constant(kCurrent * 1e-3, dt), &scratch);
  const bool rises = trial.settled_voltage() > cell.settled_voltage();
  double current = (gap < 0.0) == rises ? kCurrent : -kCurrent;
  const auto max_steps = std::llround(kMaxDuration / dt);

  CurrentProfile out;
  long long run = 0;  // steps at `current` not yet appended to `out`
  auto flush = [&] {
    if (run > 0) out = out.then(CurrentProfile::constant(current, run * dt));
    run = 0;
  };
  CellSimulator probe = cell;
  for (long long k = 0;
       k < max_steps && (probe.settled_voltage() - target) * gap > 0.0; ++k) {
    CellSimulator next = probe;
    CellSimulator resting = probe;
    scratch = VoltageTrace{};
    next.advance(CurrentProfile::constant(current, dt), &scratch);
    resting.advance(CurrentProfile::constant(0.0, dt), &scratch);
    if (next.events().clamps > resting.events().clamps &&
        std::abs(current) > kMinCurrent) {
      flush();
      current *= 0.5;
      --k;
      continue;
    }
    probe = std::move(next);
    ++run;
  }
  flush();
  return out;
}

void add_noise(std::vector<MeasurementRow>* rows, double sigma,
               std::uint64_t seed) {
  if (sigma <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& r : *rows) r.voltage += noise(rng);
}

double parse_field(const std::string& text, const std::string& origin,
                   int line, const char* what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
  const auto r = std::from_chars(begin, end, value);
  if (begin == end || r.ec != std::errc() || r.ptr != end) {
    throw Error(ErrorCode::kData, origin + ":" + std::to_string(line) +
                                      ": cannot parse " + what + " '" + text + "'");
  }
  return value;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void write_csv_file(const std::filesystem::path& path,
                    const std::function<void(std::ostream&)>& body) {
  std::ostringstream out;
  body(out);
  write_text_file(path, out.str());
}

}  // namespace

const char* to_string(IngestMode mode) {
  return mode == IngestMode::kCut ? "cut" : "full";
}

IngestMode parse_ingest_mode(const std::string& text) {
  if (text == "cut") return IngestMode::kCut;
  if (text == "full") return IngestMode::kFull;
  throw Error(ErrorCode::kConfig, "unknown ingest mode '" + text + "' (cut|full)");
}

IngestMode ExperimentConfig::ingest_mode() const {
  if (mode) return *mode;
  return (test == 1 || test == 3) ? IngestMode::kCut : IngestMode::kFull;
}

Framework ExperimentConfig::framework() const {
  return test <= 2 ? Framework::kCollection : Framework::kConcatenated;
}

void ExperimentConfig::validate() const {
  if (test < 1 || test > 4) {
    throw Error(ErrorCode::kConfig, "test selector must be 1, 2, 3 or 4");
  }
  if (design.framework != framework()) {
    throw Error(ErrorCode::kConfig,
                "test " + std::to_string(test) + " needs the " +
                    to_string(framework()) + " framework, config selects " +
                    to_string(design.framework));
  }
  design.validate();
  if (design_record && !std::filesystem::exists(*design_record)) {
    throw Error(ErrorCode::kConfig,
                "design record not found: " + design_record->string());
  }
  if (measurements && !std::filesystem::exists(*measurements)) {
    throw Error(ErrorCode::kConfig,
                "measurement file not found: " + measurements->string());
  }
  if (study.runs < 1) throw Error(ErrorCode::kConfig, "study.runs must be >= 1");
  if (noise_sigma < 0.0 || rest_between_inputs < 0.0 || prep_duration < 0.0) {
    throw Error(ErrorCode::kConfig, "noise and fixture durations must be >= 0");
  }
  if (!scaled_bounds().contains(truth)) {
    throw Error(ErrorCode::kConfig, "virtual truth outside the parameter box");
  }
}

ModelConfig model_config_from(const KeyValueConfig& kv) {
  ModelConfig m;
  m.shells = static_cast<int>(kv.get_int("model.shells", m.shells));
  m.time_step = kv.get_double("model.time_step", m.time_step);
  m.clamp_budget = static_cast<std::size_t>(
      kv.get_int("model.clamp_budget", static_cast<long long>(m.clamp_budget)));
  if (m.shells < 2 || !(m.time_step > 0.0)) {
    throw Error(ErrorCode::kConfig, "model.shells >= 2 and model.time_step > 0");
  }
  return m;
}

ExperimentConfig experiment_config_from(const KeyValueConfig& kv) {
  ExperimentConfig c;
  c.model = model_config_from(kv);
  c.test = static_cast<int>(kv.get_int("experiment.test", c.test));
  const Framework fw = kv.has("design.framework")
                           ? parse_framework(kv.get_string("design.framework", ""))
                           : c.framework();
  DesignConfig& d = c.design;
  d = fw == Framework::kCollection ? DesignConfig::collection()
                                   : DesignConfig::concatenated();
  d.steps = static_cast<int>(kv.get_int("design.steps", d.steps));
  d.horizon = kv.get_double("design.horizon", d.horizon);
  d.rest = kv.get_double("design.rest", d.rest);
  d.max_inputs = static_cast<int>(kv.get_int("design.max_inputs", d.max_inputs));
  d.epsilon = kv.get_double("design.epsilon", d.epsilon);
  d.gamma = kv.get_double("design.gamma", d.gamma);
  d.sensitivity_step = kv.get_double("design.sensitivity_step", d.sensitivity_step);
  d.bounds.current_min = kv.get_double("design.current_min", d.bounds.current_min);
  d.bounds.current_max = kv.get_double("design.current_max", d.bounds.current_max);
  d.bounds.voltage_min = kv.get_double("design.voltage_min", d.bounds.voltage_min);
  d.bounds.voltage_max = kv.get_double("design.voltage_max", d.bounds.voltage_max);
  d.design_clamp_budget = static_cast<std::size_t>(kv.get_int(
      "design.clamp_budget", static_cast<long long>(d.design_clamp_budget)));
  d.first_voltage = kv.get_double("design.first_voltage", d.first_voltage);
  d.global_voltage = kv.get_double("design.global_voltage", d.global_voltage);
  if (kv.has("design.initial_guess")) {
    const auto g = kv.get_doubles("design.initial_guess", {});
    if (g.size() != kNumParameters) {
      throw Error(ErrorCode::kConfig, "design.initial_guess needs 9 values");
    }
    d.initial_guess = Eigen::Map<const ParameterVector>(g.data());
  }
  BoxMinimizerOptions& o = d.optimizer;
  o.max_iterations = static_cast<int>(
      kv.get_int("design.optimizer.max_iterations", o.max_iterations));
  o.projected_gradient_tolerance = kv.get_double(
      "design.optimizer.gradient_tolerance", o.projected_gradient_tolerance);
  o.gradient_step = kv.get_double("design.optimizer.gradient_step", o.gradient_step);
  o.reduction_factor =
      kv.get_double("design.optimizer.reduction_factor", o.reduction_factor);
  o.memory = static_cast<int>(kv.get_int("design.optimizer.memory", o.memory));

  LeastSquaresOptions& s = c.solver;
  s.jacobian_step = kv.get_double("estimation.jacobian_step", s.jacobian_step);
  s.max_iterations =
      static_cast<int>(kv.get_int("estimation.max_iterations", s.max_iterations));
  s.cost_tolerance = kv.get_double("estimation.cost_tolerance", s.cost_tolerance);
  s.step_tolerance = kv.get_double("estimation.step_tolerance", s.step_tolerance);
  s.initial_damping = kv.get_double("estimation.initial_damping", s.initial_damping);
  d.solver = s;

  c.study.runs = static_cast<int>(kv.get_int("study.runs", c.study.runs));
  c.study.seed = static_cast<std::uint64_t>(
      kv.get_int("study.seed", static_cast<long long>(c.study.seed)));
  c.study.histogram_bins =
      static_cast<int>(kv.get_int("study.bins", c.study.histogram_bins));
  c.study.solver = s;

  if (kv.has("experiment.mode")) {
    c.mode = parse_ingest_mode(kv.get_string("experiment.mode", ""));
  }
  c.output_dir = kv.get_string("experiment.output_dir", c.output_dir.string());
  if (kv.has("experiment.design_record")) {
    c.design_record = kv.get_string("experiment.design_record", "");
  }
  if (kv.has("experiment.measurements")) {
    c.measurements = kv.get_string("experiment.measurements", "");
  }
  if (kv.has("virtual.truth")) {
    const auto t = kv.get_doubles("virtual.truth", {});
    if (t.size() != kNumParameters) {
      throw Error(ErrorCode::kConfig, "virtual.truth needs 9 values");
    }
    c.truth = Eigen::Map<const ParameterVector>(t.data());
  }
  c.noise_sigma = kv.get_double("virtual.noise_sigma", c.noise_sigma);
  c.noise_seed = static_cast<std::uint64_t>(
      kv.get_int("virtual.noise_seed", static_cast<long long>(c.noise_seed)));
  c.rest_between_inputs =
      kv.get_double("fixture.rest_between_inputs", c.rest_between_inputs);
  c.prep_duration = kv.get_double("fixture.prep_duration", c.prep_duration);

  const auto unused = kv.unused_keys();
  if (!unused.empty()) {
    std::string list;
    for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
    throw Error(ErrorCode::kConfig, kv.origin() + ": unknown keys: " + list);
  }
  return c;
}

std::vector<MeasurementRow> read_measurements(std::istream& in,
                                              const std::string& origin) {
  std::vector<MeasurementRow> rows;
  std::string line;
  int number = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header) {
      if (t != "time_s,current_A,voltage_V,phase") {
        throw Error(ErrorCode::kData,
                    origin + ":" + std::to_string(number) +
                        ": expected header time_s,current_A,voltage_V,phase");
      }
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream row(t);
    std::string f;
    while (std::getline(row, f, ',')) fields.push_back(f);
    if (fields.size() != 4) {
      throw Error(ErrorCode::kData, origin + ":" + std::to_string(number) +
                                        ": expected 4 fields, got " +
                                        std::to_string(fields.size()));
    }
    MeasurementRow r;
    r.time = parse_field(fields[0], origin, number, "time");
    r.current = parse_field(fields[1], origin, number, "current");
    r.voltage = parse_field(fields[2], origin, number, "voltage");
    try {
      r.phase = parse_phase(trim(fields[3]));
    } catch (const Error& e) {
      throw Error(ErrorCode::kData,
                  origin + ":" + std::to_string(number) + ": " + e.what());
    }
    if (!(r.voltage > 0.0)) {
      throw Error(ErrorCode::kData, origin + ":" + std::to_string(number) +
                                        ": voltage must be positive");
    }
    if (!rows.empty() && !(r.time > rows.back().time)) {
      throw Error(ErrorCode::kData, origin + ":" + std::to_string(number) +
                                        ": time is not strictly increasing");
    }
    rows.push_back(r);
  }
  if (!header) throw Error(ErrorCode::kData, origin + ": missing header");
  if (rows.empty()) throw Error(ErrorCode::kData, origin + ": no data rows");
  return rows;
}

std::vector<MeasurementRow> read_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_measurements(in, path.string());
}

void write_measurements(const std::vector<MeasurementRow>& rows,
                        std::ostream& out) {
  out << "# schema: " << kSchemaVersion << " measurements\n";
  out << "time_s,current_A,voltage_V,phase\n";
  for (const auto& r : rows) {
    out << format_double(r.time) << ',' << format_double(r.current) << ','
        << format_double(r.voltage) << ',' << to_string(r.phase) << '\n';
  }
}

CurrentProfile hold_profile(const std::vector<double>& time,
                            const std::vector<double>& current, double dt) {
  if (time.empty() || time.size() != current.size()) {
    throw Error(ErrorCode::kData, "current samples missing");
  }
  const double t0 = time.front();
  const double span = time.back() - t0;
  const auto steps = std::max<long long>(
      1, static_cast<long long>(std::ceil(span / dt - 1e-9)));
  std::vector<double> edges{0.0};
  std::vector<double> amplitudes;
  std::size_t idx = 0;
  const double slack = 1e-6 * dt;
  for (long long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    while (idx + 1 < time.size() && time[idx + 1] - t0 <= t + slack) ++idx;
    const double a = current[idx];
    if (amplitudes.empty() || a != amplitudes.back()) {
      if (!amplitudes.empty()) edges.push_back(t);
      amplitudes.push_back(a);
    }
  }
  edges.push_back(static_cast<double>(steps) * dt);
  return CurrentProfile(std::move(edges), std::move(amplitudes));
}

DataSet ingest_measurements(const std::vector<MeasurementRow>& rows,
                            IngestMode mode, double dt) {
  DataSet data;
  data.provenance = Provenance::kMeasured;
  const auto make_block = [&](std::size_t begin, std::size_t end, double v0) {
    DataBlock b;
    b.label = "block_" + std::to_string(data.blocks.size() + 1);
    b.initial_voltage = v0;
    b.time_origin = rows[begin].time;
    for (std::size_t i = begin; i < end; ++i) {
      b.time.push_back(rows[i].time);
      b.current.push_back(rows[i].current);
      b.voltage.push_back(rows[i].voltage);
      b.phase.push_back(rows[i].phase);
    }
    b.profile = hold_profile(b.time, b.current, dt);
    data.blocks.push_back(std::move(b));
  };
  if (mode == IngestMode::kFull) {
    make_block(0, rows.size(), rows.front().voltage);
  } else {
    std::size_t i = 0;
    while (i < rows.size()) {
      if (rows[i].phase != Phase::kImpulse) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < rows.size() && rows[j].phase == Phase::kImpulse) ++j;
      const double v0 = i > 0 ? rows[i - 1].voltage : rows[i].voltage;
      make_block(i, j, v0);
      i = j;
    }
    if (data.blocks.empty()) {
      throw Error(ErrorCode::kData, "no impulse rows to keep in cut mode");
    }
  }
  data.validate();
  return data;
}

DataSet ingest_measurements(const std::filesystem::path& path, IngestMode mode,
                            double dt) {
  return ingest_measurements(read_measurements(path), mode, dt);
}

std::vector<MeasurementRow> dataset_rows(const DataSet& data) {
  std::vector<MeasurementRow> rows;
  for (const auto& b : data.blocks) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      rows.push_back({b.time[k], b.current.empty() ? 0.0 : b.current[k],
                      b.voltage[k],
                      b.phase.empty() ? Phase::kImpulse : b.phase[k]});
    }
  }
  return rows;
}

DataSet generate_virtual_data(const ModelConfig& model,
                              const ParameterVector& truth,
                              const DesignRecord& record, double noise_sigma,
                              std::uint64_t seed) {
  VirtualDataSource source(model, truth, noise_sigma, seed);
  DataSet data;
  data.provenance = Provenance::kVirtual;
  int n = 0;
  for (const Record& r : applied_records(record)) {
    data.blocks.push_back(source.acquire(r.profile, r.initial_voltage,
                                         "input_" + std::to_string(++n)));
  }
  return data;
}

std::vector<MeasurementRow> blocks_fixture(const ModelConfig& model,
                                           const ParameterVector& truth,
                                           const DesignRecord& record,
                                           double noise_sigma,
                                           std::uint64_t seed) {
  constexpr int kRestRows = 10;  // one per second
  std::vector<MeasurementRow> rows;
  double clock = 0.0;
  for (const Record& r : applied_records(record)) {
    for (int s = 0; s < kRestRows; ++s) {
      rows.push_back({clock + s, 0.0, r.initial_voltage, Phase::kRest});
    }
    clock += kRestRows;
    const VoltageTrace trace = simulate(model, truth, r.profile, r.initial_voltage);
    for (std::size_t k = 0; k < trace.size(); ++k) {
      rows.push_back({clock + trace.time[k], trace.current[k], trace.voltage[k],
                      Phase::kImpulse});
    }
    clock += r.profile.duration() + 1.0;
  }
  add_noise(&rows, noise_sigma, seed);
  return rows;
}

std::vector<MeasurementRow> timeline_fixture(const ModelConfig& model,
                                             const ParameterVector& truth,
                                             const DesignRecord& record,
                                             double prep, double rest,
                                             double noise_sigma,
                                             std::uint64_t seed) {
  struct Segment {
    CurrentProfile profile;
    Phase phase;
  };
  const std::vector<Record> records = applied_records(record);
  const double dt = model.time_step;
  // The probe follows the timeline so that each charge starts from the
  // state the cell is actually in; its guard events are not budgeted.
  ModelConfig probe_model = model;
  probe_model.clamp_budget = std::numeric_limits<std::size_t>::max();
  CellSimulator probe(probe_model, truth, records.front().initial_voltage);
  VoltageTrace scratch;
  std::vector<Segment> segments;
  auto push = [&](CurrentProfile profile, Phase phase) {
    if (profile.duration() <= 0.0) return;
    probe.advance(profile, &scratch);
    scratch = VoltageTrace{};
    segments.push_back({std::move(profile), phase});
  };
  if (prep > 0.0) push(CurrentProfile::constant(0.0, prep), Phase::kPreparation);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0) {
      CurrentProfile charge = charge_to(probe, records[i].initial_voltage, dt);
      if (charge.duration() > 0.0) {
        push(std::move(charge), Phase::kPreparation);
        push(CurrentProfile::constant(0.0, kSettle), Phase::kPreparation);
      }
    }
    push(records[i].profile, Phase::kImpulse);
    if (rest > 0.0 && record.framework == Framework::kCollection) {
      push(CurrentProfile::constant(0.0, rest), Phase::kRest);
    }
  }
  CurrentProfile all = segments.front().profile;
  for (std::size_t i = 1; i < segments.size(); ++i) all = all.then(segments[i].profile);
  const VoltageTrace trace =
      simulate(model, truth, all, records.front().initial_voltage);

  const auto stride = std::max<long long>(1, std::llround(1.0 / dt));
  std::vector<MeasurementRow> rows;
  long long start = 0;
  for (const Segment& s : segments) {
    const long long end = start + std::llround(s.profile.duration() / dt);
    const long long step = s.phase == Phase::kImpulse ? 1 : stride;
    for (long long k = start; k < end; k += step) {
      const auto q = static_cast<std::size_t>(k);
      rows.push_back({trace.time[q], trace.current[q], trace.voltage[q], s.phase});
    }
    start = end;
  }
  const std::size_t last = trace.size() - 1;
  rows.push_back({trace.time[last], trace.current[last], trace.voltage[last],
                  segments.back().phase});
  add_noise(&rows, noise_sigma, seed);
  return rows;
}

std::string summary_json(const TestReport& report) {
  nlohmann::json doc;
  doc["schema"] = kSchemaVersion;
  doc["test"] = report.test;
  doc["framework"] = to_string(report.framework);
  doc["mode"] = to_string(report.mode);
  doc["experiment_time_s"] = report.experiment_time;
  doc["data_points"] = report.data_points;
  doc["blocks"] = report.blocks;
  doc["study_runs"] = report.study.runs.size();
  int converged = 0;
  for (const auto& r : report.study.runs) converged += r.result.converged ? 1 : 0;
  doc["study_converged"] = converged;
  std::vector<double> mu(report.proposed.data(),
                         report.proposed.data() + kNumParameters);
  doc["mu_opt"] = mu;
  doc["mu_opt_rel_err"] = report.proposed_error ? nlohmann::json(*report.proposed_error)
                                                : nlohmann::json(nullptr);
  doc["success_fraction_1e-2"] = report.success_fraction
                                     ? nlohmann::json(*report.success_fraction)
                                     : nlohmann::json(nullptr);
  doc["max_abs_rel_error_trace"] = report.max_trace_error;
  doc["timing_file"] = "timing.json";
  return doc.dump(2) + "\n";
}

TestReport run_test(const ExperimentConfig& config) {
  config.validate();
  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  TestReport report;
  report.test = config.test;
  report.framework = config.framework();
  report.mode = config.ingest_mode();

  DesignRecord record;
  if (config.design_record) {
    record = load_design_record(*config.design_record);
    if (record.framework != report.framework) {
      throw Error(ErrorCode::kConfig, "design record framework does not match test " +
                                          std::to_string(config.test));
    }
  } else {
    VirtualDataSource source(config.model, config.truth);
    record = run_design(config.model, config.design, source);
  }

  std::vector<MeasurementRow> rows;
  const bool synthetic = !config.measurements;
  if (synthetic) {
    rows = report.mode == IngestMode::kCut
               ? blocks_fixture(config.model, config.truth, record,
                                config.noise_sigma, config.noise_seed)
               : timeline_fixture(config.model, config.truth, record,
                                  config.prep_duration, config.rest_between_inputs,
                                  config.noise_sigma, config.noise_seed);
    write_csv_file(dir / "measurements.csv",
                   [&](std::ostream& o) { write_measurements(rows, o); });
    report.files.push_back(dir / "measurements.csv");
  } else {
    rows = read_measurements(*config.measurements);
  }
  const DataSet data = ingest_measurements(rows, report.mode, config.model.time_step);
  report.data_points = data.size();
  report.blocks = data.blocks.size();
  for (const auto& b : data.blocks) report.experiment_time += b.time.back() - b.time.front();

  report.study = restart_study(config.model, data, config.study);
  report.mean_optimization_time = report.study.mean_wall_seconds();
  report.proposed = propose_optimum(report.study);
  if (synthetic) {
    report.proposed_error = relative_parameter_error(report.proposed, config.truth);
    report.success_fraction = report.study.success_fraction(config.truth, 1e-2);
  }

  for (std::size_t n = 0; n < data.blocks.size(); ++n) {
    const DataBlock& b = data.blocks[n];
    const std::vector<double> v = model_voltage(config.model, report.proposed, b);
    const auto path = dir / ("error_trace_" + std::to_string(n + 1) + ".csv");
    write_csv_file(path, [&](std::ostream& o) {
      o << "# schema: " << kSchemaVersion << " error-trace\n";
      o << "time_s,voltage_V,model_V,rel_error\n";
      for (std::size_t k = 0; k < b.size(); ++k) {
        const double e = (v[k] - b.voltage[k]) / b.voltage[k];
        report.max_trace_error = std::max(report.max_trace_error, std::abs(e));
        o << format_double(b.time[k]) << ',' << format_double(b.voltage[k]) << ','
          << format_double(v[k]) << ',' << format_double(e) << '\n';
      }
    });
    report.files.push_back(path);
  }

  write_text_file(dir / "design_record.json", design_record_json(record));
  write_csv_file(dir / "study.csv",
                 [&](std::ostream& o) { write_study_csv(report.study, o); });
  for (int j = 0; j < kNumParameters; ++j) {
    write_text_file(dir / ("hist_mu" + std::to_string(j + 1) + ".json"),
                    histogram_json(report.study.histograms[static_cast<std::size_t>(j)], j));
  }
  write_text_file(dir / "summary.json", summary_json(report));
  nlohmann::json timing;
  timing["mean_optimization_time_s"] = report.mean_optimization_time;
  write_text_file(dir / "timing.json", timing.dump(2) + "\n");
  for (const char* f : {"design_record.json", "study.csv", "summary.json", "timing.json"}) {
    report.files.push_back(dir / f);
  }
  return report;
}

}  // namespace oid
