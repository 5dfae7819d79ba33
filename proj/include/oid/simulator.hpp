#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "oid/current_profile.hpp"
#include "oid/electrochemistry.hpp"
#include "oid/parameters.hpp"

namespace oid {

struct ModelConfig {
  // Fixed constants. The nine estimable fields are overwritten from mu.
  CellParameters cell = default_cell();
  int shells = 50;
  double time_step = 0.1;
  OcvGuards guards;
  // Guard interventions tolerated per simulation before the run is declared
  // saturated.
  std::size_t clamp_budget = 2000;
};

struct VoltageTrace {
  std::vector<double> time;
  std::vector<double> current;
  std::vector<double> voltage;

  std::size_t size() const { return time.size(); }
  void reserve(std::size_t n);
  void append(const VoltageTrace& other);
};

// Header `time_s,current_A,voltage_V`.
void write_trace_csv(const VoltageTrace& trace, std::ostream& out);

// Finite-volume discretization of radial diffusion in one sphere: N uniform
// shells with r^2-weighted volumes, zero flux at the center and a prescribed
// flux through the outer face. Implicit Euler with a fixed step, so the
// tridiagonal system is factorized once.
class ParticleDiffusion {
 public:
  ParticleDiffusion(double radius, double diffusion, int shells, double dt,
                    double initial_soc);

  // One implicit Euler step with outer-face flux D d(xi)/dr = inflow.
  void step(double inflow);

  // Linear extrapolation of the outer shell to r = R using the boundary
  // gradient.
  double surface_soc(double inflow) const;

  // Sum over shells of volume * xi (volumes without the 4 pi factor).
  double total_lithium() const;
  double surface_area() const { return radius_ * radius_; }
  double volume() const { return radius_ * radius_ * radius_ / 3.0; }
  const std::vector<double>& concentration() const { return xi_; }
  const std::vector<double>& shell_volumes() const { return volumes_; }

 private:
  double radius_;
  double diffusion_;
  double dt_;
  double width_;
  std::vector<double> xi_;
  std::vector<double> volumes_;
  std::vector<double> lower_;
  std::vector<double> upper_c_;   // eliminated super-diagonal
  std::vector<double> inv_pivot_;
  std::vector<double> rhs_;
};

// Same implicit Euler scheme as ParticleDiffusion, advanced in the
// eigenbasis of the shell operator. The operator is D times a matrix that
// depends only on (R, N), so the basis is computed once per geometry and
// each step reduces to a diagonal update plus one dot product.
class ModalDiffusion {
 public:
  struct Basis;

  ModalDiffusion(double radius, double diffusion, int shells, double dt,
                 double initial_soc);

  void step(double inflow) { modes_ = decay_ * modes_ + gain_ * inflow; }
  double surface_soc(double inflow) const;
  double total_lithium() const;
  // Volume-weighted mean fraction, the value a long rest settles to.
  double mean_soc() const;
  std::vector<double> concentration() const;

 private:
  std::shared_ptr<const Basis> basis_;
  double diffusion_;
  double width_;
  Eigen::ArrayXd modes_;
  Eigen::ArrayXd decay_;
  Eigen::ArrayXd gain_;
};

struct CellState {
  std::vector<double> cathode;
  std::vector<double> anode;
  double time = 0.0;
};

// Stateful single-particle cell. advance() may be called repeatedly to build
// a concatenated profile; the result is bit-identical to one advance() over
// the concatenation.
class CellSimulator {
 public:
  CellSimulator(const ModelConfig& config, const ParameterVector& mu,
                double initial_voltage);

  // Integrates over `profile` starting at the current time. Appends the
  // samples at every step start (the end point is not sampled).
  void advance(const CurrentProfile& profile, VoltageTrace* out);

  // Appends the output at the current time for `current`.
  void append_sample(double current, VoltageTrace* out);

  double voltage(double current);
  // Open-circuit voltage after an infinitely long rest from the current state.
  // Guard events of this evaluation are not counted.
  double settled_voltage() const;
  double inflow(const ElectrodeConstants& electrode, double current) const;

  CellState state() const;
  const GuardEvents& events() const { return events_; }
  const CellParameters& params() const { return params_; }
  const ModalDiffusion& cathode() const { return cathode_; }
  const ModalDiffusion& anode() const { return anode_; }
  double initial_cathode_soc() const { return cathode_soc0_; }

 private:
  void check_budget() const;

  const ModelConfig* config_;
  CellParameters params_;
  double cathode_soc0_;
  ModalDiffusion cathode_;
  ModalDiffusion anode_;
  long long step_index_ = 0;
  GuardEvents events_;
};

// Full trace on t_k = k dt, k = 0..K, K = t_f / dt.
VoltageTrace simulate(const ModelConfig& config, const ParameterVector& mu,
                      const CurrentProfile& profile, double initial_voltage);
VoltageTrace simulate(const ModelConfig& config, const ParameterVector& mu,
                      const InputArray& input);

}  // namespace oid
