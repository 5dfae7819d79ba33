#pragma once

#include <cstddef>

#include "oid/parameters.hpp"

namespace oid {

// Numerical guards for the open-circuit potential. The logarithm needs the
// surface fraction away from 0 and 1; RK terms with k >= 2 divide by
// (2 xi - 1)^(k-1) and need it away from 1/2.
struct OcvGuards {
  double soc_clamp = 1e-6;
  double singular_guard = 1e-9;
};

// Counts every guard intervention so callers can enforce a budget.
struct GuardEvents {
  std::size_t clamps = 0;
  std::size_t nudges = 0;
};

inline double thermal_voltage(double temperature) {
  return kGasConstant * temperature / kFaraday;
}

// Applies the clamp window and the singularity nudge. Returns the fraction
// the potential is actually evaluated at.
double guard_soc(const ElectrodeConstants& electrode, double soc,
                 const OcvGuards& guards, GuardEvents* events);

// Redlich-Kister open-circuit potential O_i(xi).
double rk_ocv(const ElectrodeConstants& electrode, double soc,
              double temperature, const OcvGuards& guards = {},
              GuardEvents* events = nullptr);

// Integral of O_i over [0, soc]. Offset, logarithmic and k <= 1 terms use
// closed forms; higher terms go through adaptive Gauss-Kronrod quadrature
// split at x = 1/2. Throws ErrorCode::kIntegration when the quadrature does
// not reach its tolerance (k >= 2 terms are not integrable across 1/2).
double rk_ocv_integral(const ElectrodeConstants& electrode, double soc,
                       double temperature);

// Exchange current from an already evaluated potential and its integral.
// Exposed separately so constant-potential cases can be checked exactly.
double log_exchange_current(double log_rate, double soc, double ocv,
                            double ocv_integral, double temperature);

// j0 = exp(log k + F/(R T) [(xi - 1/2) O(xi) - int_0^xi O]).
double exchange_current(const ElectrodeConstants& electrode, double soc,
                        double temperature);

// Reaction flux imposed by the cell current: j = -i rho R / (3 m F).
double boundary_flux(const ElectrodeConstants& electrode, double current);

// Electrode potential u_i from inverting Butler-Volmer at the imposed flux:
// u = O(xi) + (R T / F) asinh(j / j0).
double electrode_potential(const ElectrodeConstants& electrode, double soc,
                           double current, double temperature,
                           const OcvGuards& guards = {},
                           GuardEvents* events = nullptr);

// Cathode fraction xi_C0 with O_C(xi_C0) + O_A(xi_A0) = v0 at rest. The
// cathode potential is scanned first; no sign change means the voltage is
// unreachable, more than one means the potential is not monotone.
double initial_cathode_soc(const CellParameters& params, double v0,
                           const OcvGuards& guards = {});

}  // namespace oid
