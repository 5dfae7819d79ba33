#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "oid/design.hpp"
#include "oid/estimation.hpp"
#include "oid/information.hpp"

namespace oid {

inline constexpr const char* kSchemaVersion = "oid-spm/1";

// Shortest text that parses back to the same double.
std::string format_double(double x);

// Design record as a JSON document (inputs, matrices, per-iteration
// scalars). Wall-clock fields are left out so reruns serialize identically.
std::string design_record_json(const DesignRecord& record);
DesignRecord parse_design_record(const std::string& json_text);
DesignRecord load_design_record(const std::filesystem::path& path);

// `iter,phi,J,rel_err,beta`; rel_err is empty without a known truth.
void write_design_summary_csv(const DesignRecord& record, std::ostream& out);

// `time_s,current_A` at step left endpoints, with the horizon and initial
// voltage in `#` comment lines so the file can be replayed.
void write_profile_csv(const CurrentProfile& profile, double initial_voltage,
                       std::ostream& out);
struct ProfileFile {
  CurrentProfile profile;
  double initial_voltage = 3.7;
};
ProfileFile read_profile_csv(std::istream& in, const std::string& origin);

void write_matrix_csv(const Eigen::MatrixXd& m, std::ostream& out);

// `run,converged,J,mu_1..mu_9`.
void write_study_csv(const StudyTable& table, std::ostream& out);
std::string histogram_json(const Histogram& h, int parameter_index);

std::string parameters_json(const ParameterVector& mu);
// Reads `mu = a, b, ...` (key-value file) or a JSON object with a "mu" array.
ParameterVector load_parameters(const std::filesystem::path& path);

// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace oid
