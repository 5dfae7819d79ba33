#include "oid/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "oid/config.hpp"
#include "oid/error.hpp"

namespace oid {
namespace {

using nlohmann::json;

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(vector_json(m.row(i).transpose()));
  }
  return rows;
}

// Non-finite values become null in JSON and come back as +infinity.
double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

ParameterVector parameter_from_json(const json& j) {
  if (!j.is_array() || j.size() != kNumParameters) {
    throw Error(ErrorCode::kData, "expected an array of 9 parameters");
  }
  ParameterVector mu;
  for (int i = 0; i < kNumParameters; ++i) mu[i] = j[static_cast<std::size_t>(i)].get<double>();
  return mu;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string design_record_json(const DesignRecord& record) {
  const DesignConfig& c = record.config;
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["framework"] = to_string(record.framework);
  doc["config"] = {
      {"steps", c.steps},
      {"horizon_s", c.horizon},
      {"rest_s", c.rest},
      {"max_inputs", c.max_inputs},
      {"epsilon", c.epsilon},
      {"gamma", c.gamma},
      {"sensitivity_step", c.sensitivity_step},
      {"current_bounds", {c.bounds.current_min, c.bounds.current_max}},
      {"voltage_bounds", {c.bounds.voltage_min, c.bounds.voltage_max}},
      {"first_voltage", c.first_voltage},
      {"global_voltage", c.global_voltage},
      {"initial_guess", vector_json(c.initial_guess)},
  };
  doc["stopped_by_criterion"] = record.stopped_by_criterion;
  doc["stopped_by_infeasibility"] = record.stopped_by_infeasibility;
  doc["experiment_time_s"] = record.iterations.empty() ? 0.0 : record.experiment_time();
  if (record.truth) doc["truth"] = vector_json(*record.truth);
  json iters = json::array();
  for (const DesignIteration& it : record.iterations) {
    json j;
    j["iter"] = it.index;
    j["amplitudes"] = it.input.amplitudes;
    j["initial_voltage"] = it.input.initial_voltage;
    j["horizon_s"] = it.input.horizon;
    j["information"] = matrix_json(it.information);
    j["design_mu"] = vector_json(it.design_mu);
    j["mu"] = vector_json(it.mu);
    j["phi"] = it.phi;
    j["phi_hat"] = it.phi_hat;
    j["J"] = it.cost;
    j["rel_err"] = it.relative_error ? json(*it.relative_error) : json(nullptr);
    j["beta"] = it.beta;
    j["design_converged"] = it.design_converged;
    j["design_message"] = it.design_message;
    j["design_iterations"] = it.design_iterations;
    j["estimation_converged"] = it.estimation_converged;
    j["estimation_message"] = it.estimation_message;
    iters.push_back(std::move(j));
  }
  doc["iterations"] = std::move(iters);
  return doc.dump(2) + "\n";
}

DesignRecord parse_design_record(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kData, std::string("design record: ") + e.what());
  }
  try {
    DesignRecord record;
    record.framework = parse_framework(doc.at("framework").get<std::string>());
    const json& c = doc.at("config");
    DesignConfig& cfg = record.config;
    cfg = record.framework == Framework::kCollection ? DesignConfig::collection()
                                                     : DesignConfig::concatenated();
    cfg.steps = c.at("steps").get<int>();
    cfg.horizon = c.at("horizon_s").get<double>();
    cfg.rest = c.at("rest_s").get<double>();
    cfg.max_inputs = c.at("max_inputs").get<int>();
    cfg.epsilon = c.at("epsilon").get<double>();
    cfg.gamma = c.at("gamma").get<double>();
    cfg.sensitivity_step = c.at("sensitivity_step").get<double>();
    cfg.bounds.current_min = c.at("current_bounds")[0].get<double>();
    cfg.bounds.current_max = c.at("current_bounds")[1].get<double>();
    cfg.bounds.voltage_min = c.at("voltage_bounds")[0].get<double>();
    cfg.bounds.voltage_max = c.at("voltage_bounds")[1].get<double>();
    cfg.first_voltage = c.at("first_voltage").get<double>();
    cfg.global_voltage = c.at("global_voltage").get<double>();
    cfg.initial_guess = parameter_from_json(c.at("initial_guess"));
    record.stopped_by_criterion = doc.value("stopped_by_criterion", false);
    record.stopped_by_infeasibility = doc.value("stopped_by_infeasibility", false);
    if (doc.contains("truth")) record.truth = parameter_from_json(doc["truth"]);
    for (const json& j : doc.at("iterations")) {
      DesignIteration it;
      it.index = j.at("iter").get<int>();
      it.input.amplitudes = j.at("amplitudes").get<std::vector<double>>();
      it.input.initial_voltage = j.at("initial_voltage").get<double>();
      it.input.horizon = j.at("horizon_s").get<double>();
      const json& m = j.at("information");
      for (int r = 0; r < kNumParameters; ++r) {
        for (int q = 0; q < kNumParameters; ++q) {
          it.information(r, q) = m.at(static_cast<std::size_t>(r))
                                     .at(static_cast<std::size_t>(q))
                                     .get<double>();
        }
      }
      it.design_mu = parameter_from_json(j.at("design_mu"));
      it.mu = parameter_from_json(j.at("mu"));
      it.phi = number_or_inf(j.at("phi"));
      it.phi_hat = number_or_inf(j.at("phi_hat"));
      it.cost = number_or_inf(j.at("J"));
      if (!j.at("rel_err").is_null()) it.relative_error = j["rel_err"].get<double>();
      it.beta = number_or_inf(j.at("beta"));
      it.design_converged = j.value("design_converged", true);
      it.design_message = j.value("design_message", "");
      it.design_iterations = j.value("design_iterations", 0);
      it.estimation_converged = j.value("estimation_converged", true);
      it.estimation_message = j.value("estimation_message", "");
      record.iterations.push_back(std::move(it));
    }
    return record;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kData, std::string("design record: ") + e.what());
  }
}

DesignRecord load_design_record(const std::filesystem::path& path) {
  return parse_design_record(read_text_file(path));
}

void write_design_summary_csv(const DesignRecord& record, std::ostream& out) {
  out << "# schema: " << kSchemaVersion << " design-summary\n";
  out << "iter,phi,J,rel_err,beta\n";
  for (const DesignIteration& it : record.iterations) {
    out << it.index << ',' << format_double(it.phi) << ','
        << format_double(it.cost) << ','
        << (it.relative_error ? format_double(*it.relative_error) : "") << ','
        << format_double(it.beta) << '\n';
  }
}

void write_profile_csv(const CurrentProfile& profile, double initial_voltage,
                       std::ostream& out) {
  out << "# schema: " << kSchemaVersion << " current-profile\n";
  out << "# horizon_s = " << format_double(profile.duration()) << '\n';
  out << "# initial_voltage_V = " << format_double(initial_voltage) << '\n';
  out << "time_s,current_A\n";
  for (std::size_t i = 0; i < profile.step_count(); ++i) {
    out << format_double(profile.edges()[i]) << ','
        << format_double(profile.amplitudes()[i]) << '\n';
  }
}

ProfileFile read_profile_csv(std::istream& in, const std::string& origin) {
  ProfileFile file;
  std::vector<double> edges;
  std::vector<double> amplitudes;
  double horizon = -1.0;
  std::string line;
  int number = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto cfg = KeyValueConfig::parse(line.substr(1), origin);
      if (cfg.has("horizon_s")) horizon = cfg.get_double("horizon_s", -1.0);
      if (cfg.has("initial_voltage_V")) {
        file.initial_voltage = cfg.get_double("initial_voltage_V", 3.7);
      }
      continue;
    }
    if (!header) {
      if (line.rfind("time_s,current_A", 0) != 0) {
        throw Error(ErrorCode::kData, origin + ":" + std::to_string(number) +
                                          ": expected header time_s,current_A");
      }
      header = true;
      continue;
    }
    std::istringstream row(line);
    double t = 0.0;
    double a = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> a) || comma != ',') {
      throw Error(ErrorCode::kData, origin + ":" + std::to_string(number) +
                                        ": cannot parse row '" + line + "'");
    }
    edges.push_back(t);
    amplitudes.push_back(a);
  }
  if (amplitudes.empty()) {
    throw Error(ErrorCode::kData, origin + ": no profile rows");
  }
  if (!(horizon > edges.back())) {
    throw Error(ErrorCode::kData,
                origin + ": missing or invalid '# horizon_s = ...' line");
  }
  edges.push_back(horizon);
  file.profile = CurrentProfile(std::move(edges), std::move(amplitudes));
  return file;
}

void write_matrix_csv(const Eigen::MatrixXd& m, std::ostream& out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_study_csv(const StudyTable& table, std::ostream& out) {
  out << "# schema: " << kSchemaVersion << " study\n";
  out << "run,converged,J";
  for (int j = 1; j <= kNumParameters; ++j) out << ",mu_" << j;
  out << '\n';
  for (const StudyRun& r : table.runs) {
    out << r.index << ',' << (r.result.converged ? 1 : 0) << ','
        << format_double(r.result.cost);
    for (int j = 0; j < kNumParameters; ++j) out << ',' << format_double(r.result.mu[j]);
    out << '\n';
  }
}

std::string histogram_json(const Histogram& h, int parameter_index) {
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["parameter"] = parameter_index + 1;
  doc["name"] = std::string(parameter_name(parameter_index));
  doc["edges"] = h.edges;
  doc["counts"] = h.counts;
  return doc.dump(2) + "\n";
}

std::string parameters_json(const ParameterVector& mu) {
  json doc;
  doc["mu"] = vector_json(mu);
  return doc.dump(2) + "\n";
}

ParameterVector load_parameters(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return parameter_from_json(json::parse(text).at("mu"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kData, path.string() + ": " + e.what());
    }
  }
  const KeyValueConfig cfg = KeyValueConfig::parse(text, path.string());
  const std::vector<double> values = cfg.get_doubles("mu", {});
  if (values.size() != kNumParameters) {
    throw Error(ErrorCode::kData, path.string() + ": 'mu' needs 9 values");
  }
  return Eigen::Map<const ParameterVector>(values.data());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace oid
