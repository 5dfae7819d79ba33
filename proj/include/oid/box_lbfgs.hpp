#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace oid {

struct BoxMinimizerOptions {
  int max_iterations = 200;
  double projected_gradient_tolerance = 1e-6;
  // Relative reduction below which the run counts as converged, in units
  // of machine epsilon (the usual factr = 1e7 setting).
  double reduction_factor = 1e7;
  double gradient_step = 1e-4;
  int memory = 10;
  int max_line_search = 25;
};

struct BoxMinimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

using ScalarObjective = std::function<double(const Eigen::VectorXd&)>;

// Forward-difference gradient; components at the upper bound are differenced
// backwards so every evaluation stays inside [lower, upper].
Eigen::VectorXd box_gradient(const ScalarObjective& f, const Eigen::VectorXd& x,
                             double fx, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, double step,
                             int* evaluations = nullptr);

// Projected limited-memory BFGS with Armijo backtracking along the
// projection arc. Accepted values never increase and iterates never leave
// the box; on line-search failure the best iterate is returned with
// converged = false.
BoxMinimizerResult minimize_in_box(const ScalarObjective& f,
                                   const Eigen::VectorXd& start,
                                   const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper,
                                   const BoxMinimizerOptions& options = {});

}  // namespace oid
