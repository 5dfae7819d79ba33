#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace oid {

struct LeastSquaresOptions {
  double jacobian_step = 1e-6;
  int max_iterations = 300;
  double cost_tolerance = 1e-12;  // relative decrease of the cost
  double step_tolerance = 1e-10;  // relative to ||x||
  double initial_damping = 1e-3;  // times max diag(J^T J)
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  double cost = 0.0;  // 0.5 ||r||^2
  int iterations = 0;
  int evaluations = 0;
  int rejected_steps = 0;
  bool converged = false;
  std::string message;
};

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Forward-difference Jacobian, stepping backwards where x_j + h would exceed
// the upper bound.
Eigen::MatrixXd forward_jacobian(const ResidualFunction& residual,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, double step,
                                 int* evaluations = nullptr);

// Levenberg-Marquardt with Marquardt scaling, projection onto the box and
// Nielsen's damping update. A trial step whose residual evaluation throws
// oid::Error counts as rejected and raises the damping.
LeastSquaresResult solve_bounded_least_squares(
    const ResidualFunction& residual, const Eigen::VectorXd& start,
    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const LeastSquaresOptions& options = {});

}  // namespace oid
