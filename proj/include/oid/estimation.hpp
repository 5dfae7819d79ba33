#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oid/current_profile.hpp"
#include "oid/least_squares.hpp"
#include "oid/parameters.hpp"
#include "oid/simulator.hpp"

namespace oid {

enum class Phase { kPreparation, kRest, kImpulse };
enum class Provenance { kVirtual, kMeasured };

const char* to_string(Phase phase);
Phase parse_phase(const std::string& text);  // "prep" | "rest" | "impulse"
const char* to_string(Provenance provenance);

// One contiguous record: the current applied from the block start, the
// voltage the cell rests at before it, and the samples as recorded. Sample
// times keep their original clock; the model sees time - time_origin.
struct DataBlock {
  std::string label;
  CurrentProfile profile;
  double initial_voltage = 3.7;
  double time_origin = 0.0;
  std::vector<double> time;
  std::vector<double> current;
  std::vector<double> voltage;
  std::vector<Phase> phase;

  std::size_t size() const { return time.size(); }
};

struct DataSet {
  std::vector<DataBlock> blocks;
  Provenance provenance = Provenance::kVirtual;

  std::size_t size() const;
  // Times increasing and inside the profile, finite voltages, w > 0.
  void validate() const;
};

// Model voltage at the block's timestamps: simulation on the internal grid,
// linear interpolation in between grid nodes.
std::vector<double> model_voltage(const ModelConfig& config,
                                  const ParameterVector& mu,
                                  const DataBlock& block);

// Linear interpolation of a uniform-grid trace (node k at k * dt). Times
// within 1e-9 of a node take the node value.
double interpolate_uniform(const std::vector<double>& values, double dt,
                           double t);

// Stacked relative errors (v - w) / w over all blocks.
Eigen::VectorXd residuals(const ModelConfig& config, const ParameterVector& mu,
                          const DataSet& data);

double relative_parameter_error(const ParameterVector& estimate,
                                const ParameterVector& truth);

struct EstimationResult {
  ParameterVector mu = ParameterVector::Zero();
  double cost = 0.0;
  Eigen::VectorXd residual;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
  double wall_seconds = 0.0;
};

// Bounded least squares on J(mu) = 0.5 ||residuals||^2 over the scaled box.
// Simulation failures never escape: they yield a non-converged result.
EstimationResult estimate(const ModelConfig& config,
                          const ParameterVector& start, const DataSet& data,
                          const LeastSquaresOptions& options = {});

struct Conditioning {
  double beta = 0.0;  // +infinity when the smallest eigenvalue is not positive
  bool singular = false;
  Eigen::VectorXd eigenvalues;  // descending
};

Conditioning conditioning_of(const Eigen::MatrixXd& hessian);

// Gauss-Newton Hessian G^T G of the stacked residuals at mu; G by forward
// differences with the estimator's Jacobian step.
Eigen::MatrixXd gauss_newton_hessian(const ModelConfig& config,
                                     const ParameterVector& mu,
                                     const DataSet& data, double step = 1e-6);

Conditioning hessian_conditioning(const ModelConfig& config,
                                  const ParameterVector& mu,
                                  const DataSet& data, double step = 1e-6);

struct StudyOptions {
  int runs = 100;
  std::uint64_t seed = 1;
  LeastSquaresOptions solver;
  int histogram_bins = 20;
};

struct StudyRun {
  int index = 0;
  ParameterVector start = ParameterVector::Zero();
  EstimationResult result;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<int> counts;
};

struct StudyTable {
  std::vector<StudyRun> runs;
  std::vector<Histogram> histograms;  // one per parameter

  double mean_wall_seconds() const;
  // Fraction of runs whose estimate lies within `tolerance` relative error.
  double success_fraction(const ParameterVector& truth,
                          double tolerance) const;
};

// Start point of run `index`: uniform in the scaled box from a stream
// seeded by (seed, index), so runs are independent of execution order.
ParameterVector study_start(std::uint64_t seed, int index);

StudyTable restart_study(const ModelConfig& config, const DataSet& data,
                         const StudyOptions& options);

// Bins of estimate component j over its box.
Histogram parameter_histogram(const std::vector<StudyRun>& runs, int j,
                              int bins);

// Most frequent optimizer: estimates rounded to three decimals are grouped,
// and the mean of the largest group is returned (ties go to the lower mean
// cost). Converged runs are used when there are any.
ParameterVector propose_optimum(const StudyTable& table);

}  // namespace oid
