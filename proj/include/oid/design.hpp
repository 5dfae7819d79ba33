#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oid/box_lbfgs.hpp"
#include "oid/current_profile.hpp"
#include "oid/estimation.hpp"
#include "oid/information.hpp"
#include "oid/least_squares.hpp"
#include "oid/simulator.hpp"

namespace oid {

enum class Framework { kCollection, kConcatenated };

const char* to_string(Framework framework);
Framework parse_framework(const std::string& text);  // collection | concat[enated]

struct DesignConfig {
  Framework framework = Framework::kCollection;
  int steps = 24;            // amplitudes per input or per segment
  double horizon = 60.0;     // active duration per input or segment (s)
  double rest = 0.0;         // zero-current tail per segment (s)
  int max_inputs = 10;
  double epsilon = 0.1;      // L2 stopping distance (A s^1/2)
  double gamma = 1e-4;
  double sensitivity_step = 1e-3;
  InputBounds bounds;
  // Clamp events tolerated while evaluating design objectives; inputs that
  // drive the model at the current estimate out of [0, 1] score as singular.
  std::size_t design_clamp_budget = 0;
  double first_voltage = 3.7;   // v0 of the fixed first collection input
  double global_voltage = 3.9;  // v0 of the concatenated profile
  ParameterVector initial_guess = default_initial_guess();
  BoxMinimizerOptions optimizer;
  LeastSquaresOptions solver;

  // Full-scale presets: 24 steps over 60 s, at most 10 inputs; or 9
  // segments of six 20 s steps followed by 600 s of rest.
  static DesignConfig collection();
  static DesignConfig concatenated();

  void validate() const;
};

struct DesignIteration {
  int index = 0;
  InputArray input;  // concatenated: the segment's amplitudes, v0 global
  InformationMatrix information = InformationMatrix::Zero();
  ParameterVector design_mu = ParameterVector::Zero();  // mu used to design
  ParameterVector mu = ParameterVector::Zero();         // estimate after data
  double phi = 0.0;
  double phi_hat = 0.0;
  double cost = 0.0;
  std::optional<double> relative_error;
  double beta = 0.0;
  bool design_converged = true;
  std::string design_message;
  int design_iterations = 0;
  bool estimation_converged = true;
  std::string estimation_message;
  double wall_seconds = 0.0;
};

struct DesignRecord {
  Framework framework = Framework::kCollection;
  DesignConfig config;
  std::vector<DesignIteration> iterations;
  bool stopped_by_criterion = false;
  // The next input could not be run without saturating the cell.
  bool stopped_by_infeasibility = false;
  std::optional<ParameterVector> truth;

  // All designed currents as one profile: collection inputs back to back,
  // or the concatenated segments with their rests.
  std::vector<CurrentProfile> input_profiles() const;
  CurrentProfile full_profile() const;
  double experiment_time() const;
  std::vector<InputArray> inputs() const;
};

// Segment n of a concatenated design: `steps` equal steps over `horizon`
// then a single zero-current step of length `rest`.
CurrentProfile segment_profile(std::span<const double> amplitudes,
                               double horizon, double rest);

class DataSource {
 public:
  virtual ~DataSource() = default;
  // Voltage record for `profile` applied from rest at `initial_voltage`.
  virtual DataBlock acquire(const CurrentProfile& profile,
                            double initial_voltage, const std::string& label) = 0;
  virtual std::optional<ParameterVector> truth() const { return std::nullopt; }
};

// Simulated measurements at a hidden parameter, optionally with additive
// Gaussian noise. The truth is only exposed for error reporting.
class VirtualDataSource : public DataSource {
 public:
  VirtualDataSource(ModelConfig config, ParameterVector truth,
                    double noise_sigma = 0.0, std::uint64_t seed = 1);
  DataBlock acquire(const CurrentProfile& profile, double initial_voltage,
                    const std::string& label) override;
  std::optional<ParameterVector> truth() const override { return truth_; }

 private:
  ModelConfig config_;
  ParameterVector truth_;
  double noise_sigma_;
  std::mt19937_64 rng_;
};

struct DesignStepResult {
  InputArray input;
  double start_objective = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

// Local minimizer of the penalized objective over the input box, started
// from `start`.
DesignStepResult design_step(const ModelConfig& model, const DesignConfig& config,
                             const ParameterVector& mu,
                             std::span<const InformationMatrix> prior,
                             std::span<const InputArray> previous,
                             const InputArray& start);

// Exact L2 distance of the new current to each previous one; true when the
// nearest is closer than epsilon. No previous input never stops.
bool stopping_criterion(const InputArray& candidate,
                        std::span<const InputArray> previous, double epsilon);

// Called after every completed iteration (progress reporting).
using DesignObserver = std::function<void(const DesignIteration&)>;

DesignRecord run_collection_design(const ModelConfig& model,
                                   const DesignConfig& config,
                                   DataSource& source,
                                   const DesignObserver& observer = {});

DesignRecord run_concatenated_design(const ModelConfig& model,
                                     const DesignConfig& config,
                                     DataSource& source,
                                     const DesignObserver& observer = {});

DesignRecord run_design(const ModelConfig& model, const DesignConfig& config,
                        DataSource& source, const DesignObserver& observer = {});

}  // namespace oid
