#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "oid/current_profile.hpp"
#include "oid/simulator.hpp"

namespace oid {

using InformationMatrix = Eigen::Matrix<double, kNumParameters, kNumParameters>;
using SensitivityMatrix = Eigen::Matrix<double, Eigen::Dynamic, kNumParameters>;

// Returned by the design objectives when the accumulated matrix is
// singular or a simulation fails; finite so line searches can back off.
inline constexpr double kSingularObjective = 1e6;

struct SensitivityBundle {
  SensitivityMatrix columns;   // (K+1) x 9, column j = d v / d mu_j
  VoltageTrace base;
  double step = 1e-3;
  std::array<bool, kNumParameters> backward{};  // bound-adjacent columns
};

// Perturbation used for column j: +step, or -step when mu_j + step leaves
// the box.
double perturbation(const ParameterVector& mu, int j, double step);

// Forward-difference sensitivities from d + 1 simulations.
SensitivityBundle sensitivities(const ModelConfig& config,
                                const ParameterVector& mu,
                                const CurrentProfile& profile,
                                double initial_voltage, double step = 1e-3);
SensitivityBundle sensitivities(const ModelConfig& config,
                                const ParameterVector& mu,
                                const InputArray& input, double step = 1e-3);

// Trapezoidal weights w_k with sum_k w_k f_k = sum_k (f_k + f_{k+1})/2 dt_k.
std::vector<double> trapezoid_weights(std::span<const double> time);

// M_jl = trapezoidal approximation of <s^j, s^l> in L2(0, t_f).
InformationMatrix information_matrix(const SensitivityMatrix& columns,
                                     std::span<const double> time);
inline InformationMatrix information_matrix(const SensitivityBundle& bundle) {
  return information_matrix(bundle.columns, bundle.base.time);
}

// -ln det M from the spectrum; +infinity once an eigenvalue is <= 1e-300.
double d_criterion(const InformationMatrix& m);

// Eigenvalues in ascending order.
Eigen::Matrix<double, kNumParameters, 1> spectrum(const InformationMatrix& m);

// -log10 det(total) + gamma ||u||^2 for an already assembled total matrix.
double design_objective_from_matrix(const InformationMatrix& total,
                                    std::span<const double> flat_input,
                                    double gamma);

// sum over previous inputs of 1 / (1 + 100 ||u - u_prev||_inf), v0 included.
double closeness_penalty(const InputArray& u,
                         std::span<const InputArray> previous);

InformationMatrix sum_matrices(std::span<const InformationMatrix> matrices);

// Phi(u) = -log10 det(sum prior + M_mu^u) + gamma ||u||_2^2.
double design_objective(const ModelConfig& config, const InputArray& u,
                        const ParameterVector& mu,
                        std::span<const InformationMatrix> prior,
                        double gamma = 1e-4, double step = 1e-3);

// Phi-hat(u) = Phi(u) + closeness_penalty(u, previous).
double penalized_objective(const ModelConfig& config, const InputArray& u,
                           const ParameterVector& mu,
                           std::span<const InformationMatrix> prior,
                           std::span<const InputArray> previous,
                           double gamma = 1e-4, double step = 1e-3);

}  // namespace oid
