#include "oid/box_lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "oid/error.hpp"

namespace oid {
namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion on the free subspace.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g,
                                const Eigen::Array<bool, Eigen::Dynamic, 1>& free,
                                const std::deque<CurvaturePair>& pairs) {
  const Eigen::VectorXd mask = free.cast<double>().matrix();
  Eigen::VectorXd q = g.cwiseProduct(mask);
  std::vector<double> alpha(pairs.size());
  for (std::size_t i = pairs.size(); i-- > 0;) {
    const auto& p = pairs[i];
    alpha[i] = p.rho * p.s.cwiseProduct(mask).dot(q);
    q -= alpha[i] * p.y.cwiseProduct(mask);
  }
  if (!pairs.empty()) {
    const auto& last = pairs.back();
    const Eigen::VectorXd y = last.y.cwiseProduct(mask);
    const double yy = y.squaredNorm();
    const double sy = last.s.cwiseProduct(mask).dot(y);
    if (yy > 0.0 && sy > 0.0) q *= sy / yy;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const double beta = p.rho * p.y.cwiseProduct(mask).dot(q);
    q += (alpha[i] - beta) * p.s.cwiseProduct(mask);
  }
  return -q.cwiseProduct(mask);
}

}  // namespace

Eigen::VectorXd box_gradient(const ScalarObjective& f, const Eigen::VectorXd& x,
                             double fx, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, double step,
                             int* evaluations) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd shifted = x;
    const double h = x[i] + step > upper[i] ? -step : step;
    shifted[i] = x[i] + h;
    if (shifted[i] < lower[i]) shifted[i] = lower[i];
    const double actual = shifted[i] - x[i];
    g[i] = actual == 0.0 ? 0.0 : (f(shifted) - fx) / actual;
    if (evaluations) ++*evaluations;
  }
  return g;
}

BoxMinimizerResult minimize_in_box(const ScalarObjective& f,
                                   const Eigen::VectorXd& start,
                                   const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper,
                                   const BoxMinimizerOptions& options) {
  if (start.size() != lower.size() || start.size() != upper.size() ||
      (lower.array() > upper.array()).any()) {
    throw Error(ErrorCode::kConfig, "inconsistent box for minimize_in_box");
  }
  BoxMinimizerResult result;
  Eigen::VectorXd x = project(start, lower, upper);
  double fx = f(x);
  result.evaluations = 1;
  result.initial_value = fx;
  Eigen::VectorXd g = box_gradient(f, x, fx, lower, upper,
                                   options.gradient_step, &result.evaluations);
  std::deque<CurvaturePair> pairs;
  const double eps = std::numeric_limits<double>::epsilon();

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd pg = project(x - g, lower, upper) - x;
    result.projected_gradient_norm = pg.lpNorm<Eigen::Infinity>();
    if (result.projected_gradient_norm <= options.projected_gradient_tolerance) {
      result.converged = true;
      result.message = "projected gradient below tolerance";
      break;
    }

    Eigen::Array<bool, Eigen::Dynamic, 1> free(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      free[i] = !((x[i] <= lower[i] && g[i] > 0.0) ||
                  (x[i] >= upper[i] && g[i] < 0.0));
    }

    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = fx;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::VectorXd d = lbfgs_direction(g, free, pairs);
      if (attempt == 1 || !d.allFinite() || d.dot(g) >= 0.0) {
        pairs.clear();
        d = -g.cwiseProduct(free.cast<double>().matrix());
      }
      // Without curvature information, cap the first trial at a unit step
      // in the largest component.
      double alpha = 1.0;
      if (pairs.empty()) {
        const double dmax = d.lpNorm<Eigen::Infinity>();
        if (dmax > 0.0) alpha = std::min(1.0, 1.0 / dmax);
      }
      for (int ls = 0; ls < options.max_line_search; ++ls) {
        x_new = project(x + alpha * d, lower, upper);
        const Eigen::VectorXd dx = x_new - x;
        if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
        f_new = f(x_new);
        ++result.evaluations;
        if (std::isfinite(f_new) && f_new <= fx + 1e-4 * g.dot(dx) &&
            f_new <= fx) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (pairs.empty() && !accepted) break;
    }
    if (!accepted) {
      result.message = "line search failed";
      break;
    }

    const double reduction = (fx - f_new) / std::max({std::abs(fx), std::abs(f_new), 1.0});
    const Eigen::VectorXd g_new =
        box_gradient(f, x_new, f_new, lower, upper, options.gradient_step,
                     &result.evaluations);
    CurvaturePair pair{x_new - x, g_new - g, 0.0};
    const double sy = pair.s.dot(pair.y);
    if (sy > eps * pair.y.squaredNorm()) {
      pair.rho = 1.0 / sy;
      pairs.push_back(std::move(pair));
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
    x = std::move(x_new);
    fx = f_new;
    g = g_new;
    if (reduction <= options.reduction_factor * eps) {
      result.converged = true;
      result.message = "relative reduction below tolerance";
      ++iter;
      break;
    }
  }
  if (iter >= options.max_iterations && result.message.empty()) {
    result.message = "iteration limit reached";
  }
  result.iterations = iter;
  result.x = x;
  result.value = fx;
  if (result.message.empty()) result.message = "stopped";
  return result;
}

}  // namespace oid
