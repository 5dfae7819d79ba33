#pragma once

#include <array>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace oid {

inline constexpr double kFaraday = 96485.33212;    // C/mol
inline constexpr double kGasConstant = 8.314462618;  // J/(mol K)
inline constexpr double kDefaultTemperature = 298.15;  // K

inline constexpr int kNumParameters = 9;

// Scaled parameter vector mu, ordered
//   0 log10(D_C/D_C^L)   1 log10(D_A/D_A^L)   2 xi_A0 / mid
//   3 R_I / mid          4 m_C / mid          5 m_A / mid
//   6 k_C + 10.5         7 k_A - k_C          8 U_0 / mid
using ParameterVector = Eigen::Matrix<double, kNumParameters, 1>;

std::string_view parameter_name(int index);

// Constants of one spherical electrode particle. Only the product rho*c_m
// enters the diffusion boundary condition and only rho enters the current
// balance, so both are stored as given.
struct ElectrodeConstants {
  double radius = 1.0;
  double rho_c = 1.0;      // rho_i * c_{m,i}
  double rho = 1.0;        // rho_i in the current balance
  double mass = 1.0;       // m_i (kg)
  double diffusion = 1.0;  // D_i (scaled)
  double log_rate = 0.0;   // log k_i
  std::vector<double> rk;  // Redlich-Kister coefficients A_{i,0..n_i}
  double u0 = 0.0;         // OCV offset U_{0,i}
};

struct CellParameters {
  ElectrodeConstants cathode;
  ElectrodeConstants anode;
  double inner_resistance = 0.0;
  double anode_initial_soc = 0.1;
  double temperature = kDefaultTemperature;
};

// Unscaled admissible ranges of the nine estimable quantities.
struct PhysicalBounds {
  double diffusion_cathode[2] = {1e-4, 1e-2};
  double diffusion_anode[2] = {1e-4, 1e-2};
  double anode_initial_soc[2] = {0.007, 0.2};
  double inner_resistance[2] = {0.003, 0.07};
  double mass_cathode[2] = {0.01, 0.052};
  double mass_anode[2] = {0.006, 0.034};
  double log_rate_cathode[2] = {-20.0, -1.0};
  double log_rate_anode[2] = {-23.0, 10.0};
  double u0[2] = {3.0, 4.0};
};

inline constexpr PhysicalBounds kPhysicalBounds{};

struct ParameterBounds {
  ParameterVector lower;
  ParameterVector upper;

  bool contains(const ParameterVector& mu) const;
  ParameterVector project(const ParameterVector& mu) const;
  ParameterVector midpoint() const { return 0.5 * (lower + upper); }
};

// Optimization box for mu. Components 1-7 and 9 are the images of the
// physical bounds; component 8 is the narrower [-3, 11] box.
const ParameterBounds& scaled_bounds();

ParameterVector scale_parameters(const CellParameters& params);

// Inverse of scale_parameters. Non-estimable fields are copied from `base`.
CellParameters unscale_parameters(const ParameterVector& mu,
                                  const CellParameters& base);

// Documented synthetic default cell: RK coefficients, radii and flux
// scalings chosen so all nine parameters are identifiable from short
// current pulses. The estimable fields equal unscale(synthetic_truth()).
CellParameters default_cell();

// Hidden parameter used for virtual-data experiments.
ParameterVector synthetic_truth();

// Default starting guess mu^0 of the design loops (box midpoint).
ParameterVector default_initial_guess();

}  // namespace oid
