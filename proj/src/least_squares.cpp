#include "oid/least_squares.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "oid/error.hpp"

namespace oid {

Eigen::MatrixXd forward_jacobian(const ResidualFunction& residual,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, double step,
                                 int* evaluations) {
  Eigen::MatrixXd jac(r.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd shifted = x;
    double h = x[j] + step > upper[j] ? -step : step;
    if (x[j] + h < lower[j]) h = upper[j] - x[j];  // box thinner than step
    shifted[j] = x[j] + h;
    if (h == 0.0) {
      jac.col(j).setZero();
      continue;
    }
    const Eigen::VectorXd rj = residual(shifted);
    if (evaluations) ++*evaluations;
    if (rj.size() != r.size()) {
      throw Error(ErrorCode::kData, "residual length changed between calls");
    }
    jac.col(j) = (rj - r) / h;
  }
  return jac;
}

LeastSquaresResult solve_bounded_least_squares(
    const ResidualFunction& residual, const Eigen::VectorXd& start,
    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const LeastSquaresOptions& options) {
  const Eigen::Index n = start.size();
  if (lower.size() != n || upper.size() != n ||
      (lower.array() > upper.array()).any()) {
    throw Error(ErrorCode::kConfig, "inconsistent box for least squares");
  }
  LeastSquaresResult out;
  Eigen::VectorXd x = start.cwiseMax(lower).cwiseMin(upper);
  Eigen::VectorXd r = residual(x);
  out.evaluations = 1;
  if (!r.allFinite()) {
    throw Error(ErrorCode::kSimulation, "non-finite residual at start point");
  }
  double cost = 0.5 * r.squaredNorm();

  double lambda = -1.0;
  double nu = 2.0;
  bool need_jacobian = true;
  Eigen::MatrixXd jac;
  Eigen::VectorXd grad;
  Eigen::MatrixXd jtj;

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (cost == 0.0) {
      out.converged = true;
      out.message = "zero residual";
      break;
    }
    if (need_jacobian) {
      jac = forward_jacobian(residual, x, r, lower, upper,
                             options.jacobian_step, &out.evaluations);
      jtj = jac.transpose() * jac;
      grad = jac.transpose() * r;
      need_jacobian = false;
      if (lambda < 0.0) {
        lambda = options.initial_damping *
                 std::max(jtj.diagonal().maxCoeff(), 1e-300);
      }
    }

    // Variables held at a bound by a gradient pointing outward stay fixed.
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool pinned = (x[j] <= lower[j] && grad[j] > 0.0) ||
                          (x[j] >= upper[j] && grad[j] < 0.0);
      if (!pinned) free.push_back(j);
    }
    if (free.empty()) {
      out.converged = true;
      out.message = "all variables at active bounds";
      break;
    }
    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (Eigen::Index p = 0; p < m; ++p) {
      b[p] = -grad[free[p]];
      for (Eigen::Index q = 0; q < m; ++q) a(p, q) = jtj(free[p], free[q]);
    }
    for (Eigen::Index p = 0; p < m; ++p) {
      a(p, p) += lambda * std::max(a(p, p), 1e-12);
    }
    const Eigen::VectorXd dz = a.ldlt().solve(b);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    for (Eigen::Index p = 0; p < m; ++p) step[free[p]] = dz[p];
    const Eigen::VectorXd x_trial = (x + step).cwiseMax(lower).cwiseMin(upper);
    const Eigen::VectorXd dx = x_trial - x;

    if (!dx.allFinite() ||
        dx.norm() <= options.step_tolerance * (x.norm() + options.step_tolerance)) {
      out.converged = dx.allFinite();
      out.message = "step below tolerance";
      break;
    }

    // Predicted decrease of the linear model along the projected step.
    const double predicted = -(grad.dot(dx) + 0.5 * (jac * dx).squaredNorm());
    Eigen::VectorXd r_trial;
    bool ok = true;
    try {
      r_trial = residual(x_trial);
      ++out.evaluations;
      ok = r_trial.allFinite();
    } catch (const Error&) {
      ++out.evaluations;
      ok = false;
    }
    const double cost_trial = ok ? 0.5 * r_trial.squaredNorm() : cost;
    const double actual = cost - cost_trial;
    if (ok && actual > 0.0 && predicted > 0.0) {
      const double rho = actual / predicted;
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      x = x_trial;
      r = std::move(r_trial);
      const double previous = cost;
      cost = cost_trial;
      need_jacobian = true;
      if (actual <= options.cost_tolerance * previous) {
        out.converged = true;
        out.message = "relative cost decrease below tolerance";
        ++iter;
        break;
      }
    } else {
      ++out.rejected_steps;
      lambda *= nu;
      nu *= 2.0;
      if (!std::isfinite(lambda) || lambda > 1e300) {
        out.message = "damping overflow";
        break;
      }
    }
  }
  if (out.message.empty()) out.message = "iteration limit reached";
  out.iterations = iter;
  out.x = x;
  out.residual = r;
  out.cost = cost;
  return out;
}

}  // namespace oid
