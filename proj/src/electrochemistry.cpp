#include "oid/electrochemistry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "oid/error.hpp"

namespace oid {
namespace {

bool has_singular_terms(const ElectrodeConstants& electrode) {
  for (std::size_t k = 2; k < electrode.rk.size(); ++k) {
    if (electrode.rk[k] != 0.0) return true;
  }
  return false;
}

// Sum_k A_k [(2x-1)^(k+1) - 2 x k (1-x) / (2x-1)^(k-1)], dimensionless.
double rk_sum(const std::vector<double>& coefficients, double x) {
  const double y = 2.0 * x - 1.0;
  double sum = 0.0;
  double y_pow = y;  // y^(k+1)
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    double term = y_pow;
    if (k == 1) {
      term -= 2.0 * x * (1.0 - x);
    } else if (k >= 2) {
      const double kk = static_cast<double>(k);
      term -= 2.0 * x * kk * (1.0 - x) / std::pow(y, kk - 1.0);
    }
    sum += coefficients[k] * term;
    y_pow *= y;
  }
  return sum;
}

// Terms with k >= 2 only.
double rk_singular_sum(const std::vector<double>& coefficients, double x) {
  const double y = 2.0 * x - 1.0;
  double sum = 0.0;
  for (std::size_t k = 2; k < coefficients.size(); ++k) {
    const double kk = static_cast<double>(k);
    sum += coefficients[k] *
           (std::pow(y, kk + 1.0) - 2.0 * x * kk * (1.0 - x) / std::pow(y, kk - 1.0));
  }
  return sum;
}

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
void gauss_kronrod(const F& f, double a, double b, double* kronrod,
                   double* gauss) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double k = fc * kKronrodWeights[7];
  double g = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double pair = f(center - dx) + f(center + dx);
    k += kKronrodWeights[i] * pair;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * pair;
  }
  *kronrod = k * half;
  *gauss = g * half;
}

struct QuadratureState {
  double worst_error = 0.0;
  bool failed = false;
};

template <typename F>
double adaptive_integrate(const F& f, double a, double b, double tolerance,
                          int depth, QuadratureState* state) {
  double kronrod = 0.0;
  double gauss = 0.0;
  gauss_kronrod(f, a, b, &kronrod, &gauss);
  const double error = std::abs(kronrod - gauss);
  if (!std::isfinite(kronrod)) {
    state->failed = true;
    state->worst_error = std::numeric_limits<double>::infinity();
    return kronrod;
  }
  if (error <= std::max(tolerance, 1e-15 * std::abs(kronrod))) {
    return kronrod;
  }
  if (depth == 0) {
    state->failed = true;
    state->worst_error = std::max(state->worst_error, error);
    return kronrod;
  }
  const double m = 0.5 * (a + b);
  return adaptive_integrate(f, a, m, 0.5 * tolerance, depth - 1, state) +
         adaptive_integrate(f, m, b, 0.5 * tolerance, depth - 1, state);
}

double integrate_singular_terms(const std::vector<double>& coefficients,
                                double soc) {
  auto integrand = [&](double x) { return rk_singular_sum(coefficients, x); };
  constexpr double kTolerance = 1e-12;
  constexpr int kMaxDepth = 30;
  QuadratureState state;
  double total = adaptive_integrate(integrand, 0.0, std::min(soc, 0.5),
                                    kTolerance, kMaxDepth, &state);
  if (soc > 0.5) {
    total += adaptive_integrate(integrand, 0.5, soc, kTolerance, kMaxDepth,
                                &state);
  }
  if (state.failed) {
    std::ostringstream msg;
    msg << "Redlich-Kister integral did not converge on [0, " << soc
        << "], achieved error " << state.worst_error;
    throw Error(ErrorCode::kIntegration, msg.str());
  }
  return total;
}

}  // namespace

double guard_soc(const ElectrodeConstants& electrode, double soc,
                 const OcvGuards& guards, GuardEvents* events) {
  double x = soc;
  if (x < guards.soc_clamp || x > 1.0 - guards.soc_clamp || !std::isfinite(x)) {
    x = std::isfinite(x) ? std::clamp(x, guards.soc_clamp, 1.0 - guards.soc_clamp)
                         : 0.5;
    if (events) ++events->clamps;
  }
  if (has_singular_terms(electrode) &&
      std::abs(2.0 * x - 1.0) < guards.singular_guard) {
    x = 0.5 + (x >= 0.5 ? 0.5 : -0.5) * guards.singular_guard;
    if (events) ++events->nudges;
  }
  return x;
}

double rk_ocv(const ElectrodeConstants& electrode, double soc,
              double temperature, const OcvGuards& guards,
              GuardEvents* events) {
  const double x = guard_soc(electrode, soc, guards, events);
  const double vt = thermal_voltage(temperature);
  return electrode.u0 + vt * std::log((1.0 - x) / x) +
         vt * rk_sum(electrode.rk, x);
}

double rk_ocv_integral(const ElectrodeConstants& electrode, double soc,
                       double temperature) {
  if (!(soc >= 0.0 && soc < 1.0)) {
    throw Error(ErrorCode::kIntegration,
                "OCV integral needs a fraction in [0, 1)");
  }
  if (soc == 0.0) return 0.0;
  const double vt = thermal_voltage(temperature);
  const double x = soc;
  // d/dx [-(1-x) ln(1-x) - x ln x] = ln((1-x)/x)
  const double log_part = -(1.0 - x) * std::log1p(-x) - x * std::log(x);
  double rk_part = 0.0;
  const auto& a = electrode.rk;
  if (!a.empty()) rk_part += a[0] * (x * x - x);
  if (a.size() > 1) rk_part += a[1] * ((2.0 * x - 3.0) * x + 1.0) * x;
  if (has_singular_terms(electrode)) {
    rk_part += integrate_singular_terms(a, x);
  }
  return electrode.u0 * x + vt * (log_part + rk_part);
}

double log_exchange_current(double log_rate, double soc, double ocv,
                            double ocv_integral, double temperature) {
  return log_rate +
         ((soc - 0.5) * ocv - ocv_integral) / thermal_voltage(temperature);
}

double exchange_current(const ElectrodeConstants& electrode, double soc,
                        double temperature) {
  const double ocv = rk_ocv(electrode, soc, temperature);
  const double log_j0 = log_exchange_current(
      electrode.log_rate, soc, ocv,
      rk_ocv_integral(electrode, soc, temperature), temperature);
  if (log_j0 > 709.0) {
    std::ostringstream msg;
    msg << "exchange current overflows: log j0 = " << log_j0 << " at xi = " << soc;
    throw Error(ErrorCode::kOverflow, msg.str());
  }
  return std::exp(log_j0);
}

double boundary_flux(const ElectrodeConstants& electrode, double current) {
  return -current * electrode.rho * electrode.radius /
         (3.0 * electrode.mass * kFaraday);
}

double electrode_potential(const ElectrodeConstants& electrode, double soc,
                           double current, double temperature,
                           const OcvGuards& guards, GuardEvents* events) {
  const double x = guard_soc(electrode, soc, guards, events);
  const double ocv = rk_ocv(electrode, x, temperature, guards, nullptr);
  const double log_j0 = log_exchange_current(
      electrode.log_rate, x, ocv, rk_ocv_integral(electrode, x, temperature),
      temperature);
  if (!(log_j0 > -745.0)) {
    std::ostringstream msg;
    msg << "exchange current underflows for electrode with U0 = "
        << electrode.u0 << " at surface fraction " << x;
    throw Error(ErrorCode::kUnderflow, msg.str());
  }
  if (log_j0 > 709.0) {
    std::ostringstream msg;
    msg << "exchange current overflows at surface fraction " << x;
    throw Error(ErrorCode::kOverflow, msg.str());
  }
  const double flux = boundary_flux(electrode, current);
  if (flux == 0.0) return ocv;
  // asinh(z) = sign(z) [ln 2|z| + O(z^-2)]; use the log form once z would
  // leave the double range.
  const double log_ratio = std::log(std::abs(flux)) - log_j0;
  double overpotential_units;
  if (log_ratio > 300.0) {
    overpotential_units = std::copysign(std::log(2.0) + log_ratio, flux);
  } else {
    overpotential_units = std::asinh(flux * std::exp(-log_j0));
  }
  return ocv + thermal_voltage(temperature) * overpotential_units;
}

double initial_cathode_soc(const CellParameters& params, double v0,
                           const OcvGuards& guards) {
  const double anode_ocv = rk_ocv(params.anode, params.anode_initial_soc,
                                  params.temperature, guards, nullptr);
  const double target = v0 - anode_ocv;
  auto residual = [&](double x) {
    return rk_ocv(params.cathode, x, params.temperature, guards, nullptr) -
           target;
  };

  constexpr int kScanPoints = 512;
  const double lo = guards.soc_clamp;
  const double hi = 1.0 - guards.soc_clamp;
  int sign_changes = 0;
  double bracket_lo = lo;
  double bracket_hi = hi;
  double f_prev = residual(lo);
  double x_prev = lo;
  if (f_prev == 0.0) return lo;
  for (int i = 1; i <= kScanPoints; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / kScanPoints;
    const double f = residual(x);
    if (f == 0.0 && i == kScanPoints) return x;
    if ((f_prev < 0.0) != (f < 0.0)) {
      ++sign_changes;
      bracket_lo = x_prev;
      bracket_hi = x;
    }
    f_prev = f;
    x_prev = x;
  }
  if (sign_changes == 0) {
    std::ostringstream msg;
    msg << "voltage unreachable: v0 = " << v0
        << " V is outside the cathode potential range";
    throw Error(ErrorCode::kVoltageUnreachable, msg.str());
  }
  if (sign_changes > 1) {
    std::ostringstream msg;
    msg << "non-monotone cathode OCV: " << sign_changes
        << " roots for v0 = " << v0 << " V";
    throw Error(ErrorCode::kNonMonotoneOcv, msg.str());
  }

  double f_lo = residual(bracket_lo);
  for (int iter = 0; iter < 200; ++iter) {
    const double m = 0.5 * (bracket_lo + bracket_hi);
    if (m <= bracket_lo || m >= bracket_hi) break;
    const double fm = residual(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (f_lo < 0.0)) {
      bracket_lo = m;
      f_lo = fm;
    } else {
      bracket_hi = m;
    }
  }
  const double f_hi = residual(bracket_hi);
  return std::abs(f_lo) <= std::abs(f_hi) ? bracket_lo : bracket_hi;
}

}  // namespace oid
