#include "oid/simulator.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>

#include "oid/error.hpp"

namespace oid {

void VoltageTrace::reserve(std::size_t n) {
  time.reserve(n);
  current.reserve(n);
  voltage.reserve(n);
}

void VoltageTrace::append(const VoltageTrace& other) {
  time.insert(time.end(), other.time.begin(), other.time.end());
  current.insert(current.end(), other.current.begin(), other.current.end());
  voltage.insert(voltage.end(), other.voltage.begin(), other.voltage.end());
}

void write_trace_csv(const VoltageTrace& trace, std::ostream& out) {
  out << "time_s,current_A,voltage_V\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << trace.time[k] << ',' << trace.current[k] << ',' << trace.voltage[k]
        << '\n';
  }
}

ParticleDiffusion::ParticleDiffusion(double radius, double diffusion,
                                     int shells, double dt,
                                     double initial_soc)
    : radius_(radius),
      diffusion_(diffusion),
      dt_(dt),
      width_(radius / shells),
      xi_(static_cast<std::size_t>(shells), initial_soc),
      volumes_(static_cast<std::size_t>(shells)),
      lower_(static_cast<std::size_t>(shells), 0.0),
      upper_c_(static_cast<std::size_t>(shells), 0.0),
      inv_pivot_(static_cast<std::size_t>(shells)),
      rhs_(static_cast<std::size_t>(shells)) {
  if (shells < 2 || !(radius > 0.0) || !(diffusion > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorCode::kSimulation, "invalid diffusion discretization");
  }
  const auto n = static_cast<std::size_t>(shells);
  std::vector<double> conductance(n + 1, 0.0);  // per face, 0 at both ends
  for (std::size_t k = 0; k < n; ++k) {
    const double r0 = width_ * static_cast<double>(k);
    const double r1 = width_ * static_cast<double>(k + 1);
    volumes_[k] = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
    if (k + 1 < n) conductance[k + 1] = diffusion_ * r1 * r1 / width_;
  }
  std::vector<double> diag(n);
  std::vector<double> upper(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    diag[k] = volumes_[k] / dt_ + conductance[k] + conductance[k + 1];
    lower_[k] = -conductance[k];
    upper[k] = -conductance[k + 1];
  }
  // Thomas forward elimination; the matrix is constant over the run.
  inv_pivot_[0] = 1.0 / diag[0];
  upper_c_[0] = upper[0] * inv_pivot_[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double pivot = diag[k] - lower_[k] * upper_c_[k - 1];
    inv_pivot_[k] = 1.0 / pivot;
    upper_c_[k] = upper[k] * inv_pivot_[k];
  }
}

void ParticleDiffusion::step(double inflow) {
  const std::size_t n = xi_.size();
  const double inv_dt = 1.0 / dt_;
  for (std::size_t k = 0; k < n; ++k) rhs_[k] = volumes_[k] * inv_dt * xi_[k];
  rhs_[n - 1] += surface_area() * inflow;
  rhs_[0] *= inv_pivot_[0];
  for (std::size_t k = 1; k < n; ++k) {
    rhs_[k] = (rhs_[k] - lower_[k] * rhs_[k - 1]) * inv_pivot_[k];
  }
  xi_[n - 1] = rhs_[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    xi_[k] = rhs_[k] - upper_c_[k] * xi_[k + 1];
  }
}

double ParticleDiffusion::surface_soc(double inflow) const {
  return xi_.back() + 0.5 * width_ * inflow / diffusion_;
}

double ParticleDiffusion::total_lithium() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < xi_.size(); ++k) sum += volumes_[k] * xi_[k];
  return sum;
}

struct ModalDiffusion::Basis {
  Eigen::ArrayXd eigenvalues;     // of the D = 1 operator, ascending
  Eigen::ArrayXd surface_row;     // outer shell value = surface_row . modes
  Eigen::ArrayXd input_column;    // modal image of a unit outer-face inflow
  Eigen::ArrayXd uniform_modes;   // modes of xi = 1; also the lithium row
  Eigen::MatrixXd to_shells;      // xi = to_shells * modes
};

namespace {

std::shared_ptr<const ModalDiffusion::Basis> build_basis(double radius,
                                                         int shells) {
  const auto n = static_cast<Eigen::Index>(shells);
  const double width = radius / shells;
  Eigen::ArrayXd volume(n);
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r0 = width * static_cast<double>(k);
    const double r1 = width * static_cast<double>(k + 1);
    volume[k] = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
    if (k + 1 < n) {
      const double c = r1 * r1 / width;
      op(k, k) += c;
      op(k + 1, k + 1) += c;
      op(k, k + 1) -= c;
      op(k + 1, k) -= c;
    }
  }
  const Eigen::ArrayXd inv_sqrt = volume.sqrt().inverse();
  const Eigen::MatrixXd scaled =
      inv_sqrt.matrix().asDiagonal() * op * inv_sqrt.matrix().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scaled);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kSimulation, "shell operator eigensolve failed");
  }
  auto basis = std::make_shared<ModalDiffusion::Basis>();
  basis->eigenvalues = solver.eigenvalues().array();
  // The constant profile spans the exact null space.
  basis->eigenvalues[0] = 0.0;
  const Eigen::MatrixXd& q = solver.eigenvectors();
  basis->to_shells = inv_sqrt.matrix().asDiagonal() * q;
  basis->surface_row = basis->to_shells.row(n - 1).transpose().array();
  basis->input_column = basis->surface_row * radius * radius;
  basis->uniform_modes = (q.transpose() * volume.sqrt().matrix()).array();
  return basis;
}

std::shared_ptr<const ModalDiffusion::Basis> cached_basis(double radius,
                                                          int shells) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>,
                  std::shared_ptr<const ModalDiffusion::Basis>>
      cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{radius, shells}];
  if (!slot) slot = build_basis(radius, shells);
  return slot;
}

}  // namespace

ModalDiffusion::ModalDiffusion(double radius, double diffusion, int shells,
                               double dt, double initial_soc)
    : diffusion_(diffusion), width_(radius / shells) {
  if (shells < 2 || !(radius > 0.0) || !(diffusion > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorCode::kSimulation, "invalid diffusion discretization");
  }
  basis_ = cached_basis(radius, shells);
  decay_ = (1.0 + dt * diffusion * basis_->eigenvalues).inverse();
  gain_ = dt * decay_ * basis_->input_column;
  modes_ = initial_soc * basis_->uniform_modes;
}

double ModalDiffusion::surface_soc(double inflow) const {
  return (basis_->surface_row * modes_).sum() +
         0.5 * width_ * inflow / diffusion_;
}

double ModalDiffusion::total_lithium() const {
  return (basis_->uniform_modes * modes_).sum();
}

double ModalDiffusion::mean_soc() const {
  return total_lithium() / basis_->uniform_modes.square().sum();
}

std::vector<double> ModalDiffusion::concentration() const {
  const Eigen::VectorXd xi = basis_->to_shells * modes_.matrix();
  return {xi.data(), xi.data() + xi.size()};
}

CellSimulator::CellSimulator(const ModelConfig& config,
                             const ParameterVector& mu,
                             double initial_voltage)
    : config_(&config),
      params_(unscale_parameters(mu, config.cell)),
      cathode_soc0_(oid::initial_cathode_soc(params_, initial_voltage,
                                             config.guards)),
      cathode_(params_.cathode.radius, params_.cathode.diffusion,
               config.shells, config.time_step, cathode_soc0_),
      anode_(params_.anode.radius, params_.anode.diffusion, config.shells,
             config.time_step, params_.anode_initial_soc) {
  constexpr double kSlack = 1e-9;
  const ParameterBounds& box = scaled_bounds();
  for (int j = 0; j < kNumParameters; ++j) {
    if (mu[j] < box.lower[j] - kSlack || mu[j] > box.upper[j] + kSlack) {
      std::ostringstream msg;
      msg << "parameter " << parameter_name(j) << " = " << mu[j]
          << " outside the admissible box";
      throw Error(ErrorCode::kSimulation, msg.str());
    }
  }
}

double CellSimulator::inflow(const ElectrodeConstants& electrode,
                             double current) const {
  return -boundary_flux(electrode, current) / electrode.rho_c;
}

double CellSimulator::voltage(double current) {
  const double theta = params_.temperature;
  const double cathode_surface =
      cathode_.surface_soc(inflow(params_.cathode, current));
  const double anode_surface =
      anode_.surface_soc(inflow(params_.anode, current));
  const double u_c = electrode_potential(params_.cathode, cathode_surface,
                                         current, theta, config_->guards,
                                         &events_);
  const double u_a = electrode_potential(params_.anode, anode_surface, current,
                                         theta, config_->guards, &events_);
  check_budget();
  return u_c + u_a + current * params_.inner_resistance;
}

double CellSimulator::settled_voltage() const {
  const double theta = params_.temperature;
  GuardEvents ignored;
  return electrode_potential(params_.cathode, cathode_.mean_soc(), 0.0, theta,
                             config_->guards, &ignored) +
         electrode_potential(params_.anode, anode_.mean_soc(), 0.0, theta,
                             config_->guards, &ignored);
}

void CellSimulator::append_sample(double current, VoltageTrace* out) {
  const double v = voltage(current);
  out->time.push_back(static_cast<double>(step_index_) * config_->time_step);
  out->current.push_back(current);
  out->voltage.push_back(v);
}

void CellSimulator::advance(const CurrentProfile& profile, VoltageTrace* out) {
  const double dt = config_->time_step;
  if (!profile.aligned_to(dt)) {
    throw Error(ErrorCode::kSimulation,
                "internal time step must divide every current step width");
  }
  const std::vector<double> currents = profile.sample(dt);
  const std::size_t steps = currents.size() - 1;
  out->reserve(out->size() + steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double current = currents[k];
    append_sample(current, out);
    cathode_.step(inflow(params_.cathode, current));
    anode_.step(inflow(params_.anode, current));
    ++step_index_;
  }
}

CellState CellSimulator::state() const {
  return {cathode_.concentration(), anode_.concentration(),
          static_cast<double>(step_index_) * config_->time_step};
}

void CellSimulator::check_budget() const {
  if (events_.clamps + events_.nudges > config_->clamp_budget) {
    std::ostringstream msg;
    msg << "concentration saturation: " << events_.clamps
        << " clamp events exceed the budget of " << config_->clamp_budget;
    throw Error(ErrorCode::kSaturation, msg.str());
  }
}

VoltageTrace simulate(const ModelConfig& config, const ParameterVector& mu,
                      const CurrentProfile& profile, double initial_voltage) {
  CellSimulator sim(config, mu, initial_voltage);
  VoltageTrace trace;
  sim.advance(profile, &trace);
  sim.append_sample(profile.amplitudes().back(), &trace);
  return trace;
}

VoltageTrace simulate(const ModelConfig& config, const ParameterVector& mu,
                      const InputArray& input) {
  return simulate(config, mu, input.profile(), input.initial_voltage);
}

}  // namespace oid
