#include "oid/information.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "oid/error.hpp"

namespace oid {

double perturbation(const ParameterVector& mu, int j, double step) {
  return mu[j] + step > scaled_bounds().upper[j] ? -step : step;
}

SensitivityBundle sensitivities(const ModelConfig& config,
                                const ParameterVector& mu,
                                const CurrentProfile& profile,
                                double initial_voltage, double step) {
  SensitivityBundle bundle;
  bundle.step = step;
  bundle.base = simulate(config, mu, profile, initial_voltage);
  const auto rows = static_cast<Eigen::Index>(bundle.base.size());
  bundle.columns.resize(rows, kNumParameters);
  const Eigen::Map<const Eigen::VectorXd> base(bundle.base.voltage.data(), rows);
  for (int j = 0; j < kNumParameters; ++j) {
    const double h = perturbation(mu, j, step);
    bundle.backward[static_cast<std::size_t>(j)] = h < 0.0;
    ParameterVector shifted = mu;
    shifted[j] += h;
    VoltageTrace trace;
    try {
      trace = simulate(config, shifted, profile, initial_voltage);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "sensitivity column " << j + 1 << " (" << parameter_name(j)
          << "): " << e.what();
      throw Error(e.code(), msg.str());
    }
    const Eigen::Map<const Eigen::VectorXd> v(trace.voltage.data(), rows);
    bundle.columns.col(j) = (v - base) / h;
  }
  return bundle;
}

SensitivityBundle sensitivities(const ModelConfig& config,
                                const ParameterVector& mu,
                                const InputArray& input, double step) {
  return sensitivities(config, mu, input.profile(), input.initial_voltage,
                       step);
}

std::vector<double> trapezoid_weights(std::span<const double> time) {
  const std::size_t n = time.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double half = 0.5 * (time[k + 1] - time[k]);
    w[k] += half;
    w[k + 1] += half;
  }
  return w;
}

InformationMatrix information_matrix(const SensitivityMatrix& columns,
                                     std::span<const double> time) {
  if (static_cast<std::size_t>(columns.rows()) != time.size()) {
    throw Error(ErrorCode::kData,
                "sensitivity rows do not match the time grid");
  }
  const std::vector<double> w = trapezoid_weights(time);
  const Eigen::Map<const Eigen::VectorXd> weights(w.data(),
                                                  static_cast<Eigen::Index>(w.size()));
  const SensitivityMatrix weighted = weights.asDiagonal() * columns;
  InformationMatrix m = columns.transpose() * weighted;
  return 0.5 * (m + m.transpose());
}

Eigen::Matrix<double, kNumParameters, 1> spectrum(const InformationMatrix& m) {
  Eigen::SelfAdjointEigenSolver<InformationMatrix> solver(
      m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double d_criterion(const InformationMatrix& m) {
  const auto eigenvalues = spectrum(m);
  double sum = 0.0;
  for (int i = 0; i < kNumParameters; ++i) {
    if (!(eigenvalues[i] > 1e-300)) return std::numeric_limits<double>::infinity();
    sum -= std::log(eigenvalues[i]);
  }
  return sum;
}

double design_objective_from_matrix(const InformationMatrix& total,
                                    std::span<const double> flat_input,
                                    double gamma) {
  const double phi = d_criterion(total);
  if (!std::isfinite(phi)) return kSingularObjective;
  double norm2 = 0.0;
  for (double x : flat_input) norm2 += x * x;
  return phi / std::log(10.0) + gamma * norm2;
}

double closeness_penalty(const InputArray& u,
                         std::span<const InputArray> previous) {
  const std::vector<double> flat = u.flatten();
  double total = 0.0;
  for (const InputArray& prev : previous) {
    const std::vector<double> other = prev.flatten();
    if (other.size() != flat.size()) {
      throw Error(ErrorCode::kComparison,
                  "cannot compare input arrays of different length");
    }
    double dist = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      dist = std::max(dist, std::abs(flat[i] - other[i]));
    }
    total += 1.0 / (1.0 + 100.0 * dist);
  }
  return total;
}

InformationMatrix sum_matrices(std::span<const InformationMatrix> matrices) {
  InformationMatrix total = InformationMatrix::Zero();
  for (const auto& m : matrices) total += m;
  return total;
}

double design_objective(const ModelConfig& config, const InputArray& u,
                        const ParameterVector& mu,
                        std::span<const InformationMatrix> prior,
                        double gamma, double step) {
  InformationMatrix total = sum_matrices(prior);
  try {
    total += information_matrix(sensitivities(config, mu, u, step));
  } catch (const Error&) {
    return kSingularObjective;
  }
  return design_objective_from_matrix(total, u.flatten(), gamma);
}

double penalized_objective(const ModelConfig& config, const InputArray& u,
                           const ParameterVector& mu,
                           std::span<const InformationMatrix> prior,
                           std::span<const InputArray> previous, double gamma,
                           double step) {
  const double phi = design_objective(config, u, mu, prior, gamma, step);
  return phi + closeness_penalty(u, previous);
}

}  // namespace oid
