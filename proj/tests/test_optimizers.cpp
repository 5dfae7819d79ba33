#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Core>

#include "oid/box_lbfgs.hpp"
#include "oid/error.hpp"
#include "oid/least_squares.hpp"

namespace {

TEST(BoxMinimizer, UnconstrainedQuadratic) {
  const Eigen::Vector3d target(0.3, -0.2, 0.5);
  const oid::ScalarObjective f = [&](const Eigen::VectorXd& x) {
    const Eigen::Vector3d d = x - target;
    return d.dot(Eigen::Vector3d(1.0, 4.0, 9.0).cwiseProduct(d));
  };
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(3, -1.0);
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(3, 1.0);
  const auto r = oid::minimize_in_box(f, Eigen::VectorXd::Zero(3), lower, upper, {});
  EXPECT_LT((r.x - target).norm(), 1e-4);
  EXPECT_LE(r.value, r.initial_value);
}

TEST(BoxMinimizer, ActiveBoundsAndBoxRespected) {
  // Minimum of the Rosenbrock valley lies outside the box at (1, 1).
  const oid::ScalarObjective f = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  Eigen::VectorXd lower(2), upper(2), start(2);
  lower << -2.0, -2.0;
  upper << 0.5, 2.0;
  start << -1.2, 1.0;
  oid::BoxMinimizerOptions options;
  options.max_iterations = 500;
  const auto r = oid::minimize_in_box(f, start, lower, upper, options);
  EXPECT_NEAR(r.x[0], 0.5, 1e-6);
  EXPECT_NEAR(r.x[1], 0.25, 1e-3);
  EXPECT_TRUE((r.x.array() >= lower.array()).all());
  EXPECT_TRUE((r.x.array() <= upper.array()).all());
}

TEST(BoxGradient, BackwardStepAtUpperBound) {
  const oid::ScalarObjective f = [](const Eigen::VectorXd& x) { return 3.0 * x[0]; };
  Eigen::VectorXd x(1), lower(1), upper(1);
  x << 1.0;
  lower << 0.0;
  upper << 1.0;
  int evals = 0;
  const Eigen::VectorXd g = oid::box_gradient(f, x, f(x), lower, upper, 1e-4, &evals);
  EXPECT_NEAR(g[0], 3.0, 1e-9);
  EXPECT_EQ(evals, 1);
}

TEST(LeastSquares, ExponentialFitRecoversParameters) {
  const double a = 2.0, b = -0.7;
  const oid::ResidualFunction residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(20);
    for (int k = 0; k < 20; ++k) {
      const double t = 0.1 * k;
      r[k] = x[0] * std::exp(x[1] * t) - a * std::exp(b * t);
    }
    return r;
  };
  Eigen::VectorXd lower(2), upper(2), start(2);
  lower << 0.0, -5.0;
  upper << 5.0, 5.0;
  start << 1.0, 0.0;
  const auto r = oid::solve_bounded_least_squares(residual, start, lower, upper, {});
  EXPECT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(r.x[0], a, 1e-8);
  EXPECT_NEAR(r.x[1], b, 1e-8);
  EXPECT_LT(r.cost, 1e-18);
}

TEST(LeastSquares, SolutionOnBoundStaysInside) {
  const oid::ResidualFunction residual = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << x[0] - 3.0, x[1] + 1.0;
    return r;
  };
  Eigen::VectorXd lower(2), upper(2), start(2);
  lower << 0.0, 0.0;
  upper << 2.0, 2.0;
  start << 1.0, 1.0;
  const auto r = oid::solve_bounded_least_squares(residual, start, lower, upper, {});
  EXPECT_NEAR(r.x[0], 2.0, 1e-12);
  EXPECT_NEAR(r.x[1], 0.0, 1e-12);
  EXPECT_NEAR(r.cost, 0.5 * (1.0 + 1.0), 1e-10);
}

TEST(LeastSquares, ThrowingTrialIsRejectedNotFatal) {
  const oid::ResidualFunction residual = [](const Eigen::VectorXd& x) {
    if (x[0] > 1.5) throw oid::Error(oid::ErrorCode::kSimulation, "model blew up");
    Eigen::VectorXd r(1);
    r << x[0] - 1.0;
    return r;
  };
  Eigen::VectorXd lower(1), upper(1), start(1);
  lower << 0.0;
  upper << 10.0;
  start << 0.2;
  const auto r = oid::solve_bounded_least_squares(residual, start, lower, upper, {});
  EXPECT_NEAR(r.x[0], 1.0, 1e-8);
}

TEST(ForwardJacobian, ReflectedAtUpperBound) {
  const oid::ResidualFunction residual = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << 2.0 * x[0], x[0] * x[0];
    return r;
  };
  Eigen::VectorXd x(1), lower(1), upper(1);
  x << 1.0;
  lower << 0.0;
  upper << 1.0;
  int evals = 0;
  const Eigen::MatrixXd j =
      oid::forward_jacobian(residual, x, residual(x), lower, upper, 1e-6, &evals);
  EXPECT_NEAR(j(0, 0), 2.0, 1e-8);
  EXPECT_NEAR(j(1, 0), 2.0, 1e-5);
}

}  // namespace
