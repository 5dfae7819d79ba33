#include "oid/parameters.hpp"

#include <cmath>
#include <string>

#include "oid/error.hpp"

namespace oid {
namespace {

double mid(const double (&range)[2]) { return 0.5 * (range[0] + range[1]); }

constexpr double kLogRateShift = -10.5;

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kScaling,
                std::string("non-finite parameter: ") + what);
  }
}

}  // namespace

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kScaling: return "scaling";
    case ErrorCode::kIntegration: return "integration";
    case ErrorCode::kOverflow: return "overflow";
    case ErrorCode::kUnderflow: return "underflow";
    case ErrorCode::kVoltageUnreachable: return "voltage_unreachable";
    case ErrorCode::kNonMonotoneOcv: return "non_monotone_ocv";
    case ErrorCode::kSaturation: return "concentration_saturation";
    case ErrorCode::kSimulation: return "simulation";
    case ErrorCode::kData: return "data";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kComparison: return "comparison";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

std::string_view parameter_name(int index) {
  static constexpr std::array<std::string_view, kNumParameters> kNames = {
      "log_diffusion_cathode", "log_diffusion_anode", "anode_initial_soc",
      "inner_resistance",      "mass_cathode",        "mass_anode",
      "log_rate_cathode",      "log_rate_gap",        "ocv_offset"};
  return kNames.at(static_cast<std::size_t>(index));
}

bool ParameterBounds::contains(const ParameterVector& mu) const {
  return (mu.array() >= lower.array()).all() &&
         (mu.array() <= upper.array()).all();
}

ParameterVector ParameterBounds::project(const ParameterVector& mu) const {
  return mu.cwiseMax(lower).cwiseMin(upper);
}

const ParameterBounds& scaled_bounds() {
  static const ParameterBounds bounds = [] {
    const PhysicalBounds& b = kPhysicalBounds;
    ParameterBounds out;
    out.lower << 0.0, 0.0, b.anode_initial_soc[0] / mid(b.anode_initial_soc),
        b.inner_resistance[0] / mid(b.inner_resistance),
        b.mass_cathode[0] / mid(b.mass_cathode),
        b.mass_anode[0] / mid(b.mass_anode),
        b.log_rate_cathode[0] - kLogRateShift, -3.0, b.u0[0] / mid(b.u0);
    out.upper << std::log10(b.diffusion_cathode[1] / b.diffusion_cathode[0]),
        std::log10(b.diffusion_anode[1] / b.diffusion_anode[0]),
        b.anode_initial_soc[1] / mid(b.anode_initial_soc),
        b.inner_resistance[1] / mid(b.inner_resistance),
        b.mass_cathode[1] / mid(b.mass_cathode),
        b.mass_anode[1] / mid(b.mass_anode),
        b.log_rate_cathode[1] - kLogRateShift, 11.0, b.u0[1] / mid(b.u0);
    return out;
  }();
  return bounds;
}

ParameterVector scale_parameters(const CellParameters& p) {
  const PhysicalBounds& b = kPhysicalBounds;
  require_finite(p.cathode.diffusion, "cathode diffusion");
  require_finite(p.anode.diffusion, "anode diffusion");
  require_finite(p.anode_initial_soc, "anode initial soc");
  require_finite(p.inner_resistance, "inner resistance");
  require_finite(p.cathode.mass, "cathode mass");
  require_finite(p.anode.mass, "anode mass");
  require_finite(p.cathode.log_rate, "cathode log rate");
  require_finite(p.anode.log_rate, "anode log rate");
  require_finite(p.cathode.u0, "ocv offset");
  if (p.cathode.diffusion <= 0.0 || p.anode.diffusion <= 0.0) {
    throw Error(ErrorCode::kScaling, "diffusion coefficients must be positive");
  }

  ParameterVector mu;
  mu << std::log10(p.cathode.diffusion / b.diffusion_cathode[0]),
      std::log10(p.anode.diffusion / b.diffusion_anode[0]),
      p.anode_initial_soc / mid(b.anode_initial_soc),
      p.inner_resistance / mid(b.inner_resistance),
      p.cathode.mass / mid(b.mass_cathode), p.anode.mass / mid(b.mass_anode),
      p.cathode.log_rate - kLogRateShift,
      p.anode.log_rate - p.cathode.log_rate, p.cathode.u0 / mid(b.u0);
  return mu;
}

CellParameters unscale_parameters(const ParameterVector& mu,
                                  const CellParameters& base) {
  for (int i = 0; i < kNumParameters; ++i) require_finite(mu[i], "mu");
  const PhysicalBounds& b = kPhysicalBounds;
  CellParameters p = base;
  p.cathode.diffusion = b.diffusion_cathode[0] * std::pow(10.0, mu[0]);
  p.anode.diffusion = b.diffusion_anode[0] * std::pow(10.0, mu[1]);
  p.anode_initial_soc = mu[2] * mid(b.anode_initial_soc);
  p.inner_resistance = mu[3] * mid(b.inner_resistance);
  p.cathode.mass = mu[4] * mid(b.mass_cathode);
  p.anode.mass = mu[5] * mid(b.mass_anode);
  p.cathode.log_rate = mu[6] + kLogRateShift;
  p.anode.log_rate = mu[7] + p.cathode.log_rate;
  p.cathode.u0 = mu[8] * mid(b.u0);
  p.anode.u0 = 0.0;
  return p;
}

ParameterVector synthetic_truth() {
  ParameterVector mu;
  mu << 1.2, 0.7, 1.1, 0.9, 1.05, 0.95, 0.5, 4.5, 1.02;
  return mu;
}

ParameterVector default_initial_guess() { return scaled_bounds().midpoint(); }

CellParameters default_cell() {
  CellParameters p;
  p.cathode.radius = 1.0;
  p.cathode.rho = 7.95e-34;
  p.cathode.rho_c = 8.43e-34;
  p.cathode.rk = {-30.0, 2.0};
  p.anode.radius = 1.0;
  p.anode.rho = 9.64;
  p.anode.rho_c = 17.5;
  p.anode.rk = {-2.0};
  p.temperature = kDefaultTemperature;
  return unscale_parameters(synthetic_truth(), p);
}

}  // namespace oid
