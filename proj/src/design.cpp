#include "oid/design.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "oid/error.hpp"

namespace oid {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Fills the scalars that follow data acquisition: estimate, cost, error
// against the truth and the conditioning diagnostic.
void estimate_into(const ModelConfig& model, const DesignConfig& config,
                   const DataSet& data, const std::optional<ParameterVector>& truth,
                   ParameterVector* mu, DesignIteration* it) {
  const EstimationResult est = estimate(model, *mu, data, config.solver);
  it->estimation_converged = est.converged;
  it->estimation_message = est.message;
  it->cost = est.cost;
  if (std::isfinite(est.cost)) *mu = est.mu;
  it->mu = *mu;
  if (truth) it->relative_error = relative_parameter_error(*mu, *truth);
  try {
    it->beta = hessian_conditioning(model, truth ? *truth : *mu, data,
                                    config.solver.jacobian_step)
                   .beta;
  } catch (const Error&) {
    it->beta = std::numeric_limits<double>::infinity();
  }
}

// Simulators for the base parameter and its nine perturbations, advanced
// through the frozen part of a concatenated profile. Candidate segments are
// appended to copies, so the prefix is integrated only once per iteration.
class PrefixSensitivities {
 public:
  PrefixSensitivities(const ModelConfig& model, const ParameterVector& mu,
                      double v0, double step, const CurrentProfile* prefix) {
    steps_[0] = 0.0;
    sims_.emplace_back(model, mu, v0);
    for (int j = 0; j < kNumParameters; ++j) {
      const double h = perturbation(mu, j, step);
      steps_[static_cast<std::size_t>(j) + 1] = h;
      ParameterVector shifted = mu;
      shifted[j] += h;
      sims_.emplace_back(model, shifted, v0);
    }
    traces_.resize(sims_.size());
    if (prefix) {
      for (std::size_t i = 0; i < sims_.size(); ++i) {
        sims_[i].advance(*prefix, &traces_[i]);
      }
    }
  }

  // Information matrix of prefix + segment.
  InformationMatrix information(const CurrentProfile& segment) const {
    std::vector<VoltageTrace> tails(sims_.size());
    for (std::size_t i = 0; i < sims_.size(); ++i) {
      CellSimulator sim = sims_[i];
      sim.advance(segment, &tails[i]);
      sim.append_sample(segment.amplitudes().back(), &tails[i]);
    }
    const std::size_t p = traces_[0].size();
    const std::size_t rows = p + tails[0].size();
    std::vector<double> time(rows);
    SensitivityMatrix s(static_cast<Eigen::Index>(rows), kNumParameters);
    for (std::size_t k = 0; k < rows; ++k) {
      const bool head = k < p;
      const std::size_t q = head ? k : k - p;
      time[k] = head ? traces_[0].time[q] : tails[0].time[q];
      const double base = head ? traces_[0].voltage[q] : tails[0].voltage[q];
      for (int j = 0; j < kNumParameters; ++j) {
        const std::size_t i = static_cast<std::size_t>(j) + 1;
        const double v = head ? traces_[i].voltage[q] : tails[i].voltage[q];
        s(static_cast<Eigen::Index>(k), j) = (v - base) / steps_[i];
      }
    }
    return information_matrix(s, time);
  }

 private:
  std::vector<CellSimulator> sims_;
  std::vector<VoltageTrace> traces_;
  std::array<double, kNumParameters + 1> steps_{};
};

}  // namespace

const char* to_string(Framework framework) {
  return framework == Framework::kCollection ? "collection" : "concatenated";
}

Framework parse_framework(const std::string& text) {
  if (text == "collection") return Framework::kCollection;
  if (text == "concat" || text == "concatenated") return Framework::kConcatenated;
  throw Error(ErrorCode::kConfig, "unknown framework '" + text +
                                      "' (expected collection or concat)");
}

DesignConfig DesignConfig::collection() { return DesignConfig{}; }

DesignConfig DesignConfig::concatenated() {
  DesignConfig c;
  c.framework = Framework::kConcatenated;
  c.steps = 6;
  c.horizon = 120.0;
  c.rest = 600.0;
  c.max_inputs = 9;
  return c;
}

void DesignConfig::validate() const {
  if (steps < 1) throw Error(ErrorCode::kConfig, "design steps must be >= 1");
  if (!(horizon > 0.0) || rest < 0.0) {
    throw Error(ErrorCode::kConfig, "design durations must be positive");
  }
  if (max_inputs < 1) {
    throw Error(ErrorCode::kConfig, "max inputs must be >= 1");
  }
  if (!(bounds.current_min < bounds.current_max) ||
      !(bounds.voltage_min < bounds.voltage_max)) {
    throw Error(ErrorCode::kConfig, "input bounds must be ordered");
  }
  if (!(epsilon > 0.0) || gamma < 0.0 || !(sensitivity_step > 0.0)) {
    throw Error(ErrorCode::kConfig, "epsilon, gamma or step out of range");
  }
  if (!scaled_bounds().contains(initial_guess)) {
    throw Error(ErrorCode::kConfig, "initial guess outside the parameter box");
  }
}

CurrentProfile segment_profile(std::span<const double> amplitudes,
                               double horizon, double rest) {
  const CurrentProfile active = CurrentProfile::uniform_steps(amplitudes, horizon);
  if (rest <= 0.0) return active;
  return active.then(CurrentProfile::constant(0.0, rest));
}

std::vector<CurrentProfile> DesignRecord::input_profiles() const {
  std::vector<CurrentProfile> out;
  for (const auto& it : iterations) {
    if (framework == Framework::kCollection) {
      out.push_back(it.input.profile());
    } else {
      out.push_back(
          segment_profile(it.input.amplitudes, it.input.horizon, config.rest));
    }
  }
  return out;
}

CurrentProfile DesignRecord::full_profile() const {
  const auto parts = input_profiles();
  if (parts.empty()) throw Error(ErrorCode::kData, "design record is empty");
  CurrentProfile full = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) full = full.then(parts[i]);
  return full;
}

double DesignRecord::experiment_time() const {
  double total = 0.0;
  for (const auto& p : input_profiles()) total += p.duration();
  return total;
}

std::vector<InputArray> DesignRecord::inputs() const {
  std::vector<InputArray> out;
  for (const auto& it : iterations) out.push_back(it.input);
  return out;
}

VirtualDataSource::VirtualDataSource(ModelConfig config, ParameterVector truth,
                                     double noise_sigma, std::uint64_t seed)
    : config_(std::move(config)),
      truth_(truth),
      noise_sigma_(noise_sigma),
      rng_(seed) {
  if (noise_sigma_ < 0.0) {
    throw Error(ErrorCode::kConfig, "noise sigma must be non-negative");
  }
}

DataBlock VirtualDataSource::acquire(const CurrentProfile& profile,
                                     double initial_voltage,
                                     const std::string& label) {
  const VoltageTrace trace = simulate(config_, truth_, profile, initial_voltage);
  DataBlock block;
  block.label = label;
  block.profile = profile;
  block.initial_voltage = initial_voltage;
  block.time = trace.time;
  block.current = trace.current;
  block.voltage = trace.voltage;
  block.phase.assign(trace.size(), Phase::kImpulse);
  if (noise_sigma_ > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma_);
    for (double& w : block.voltage) w += noise(rng_);
  }
  return block;
}

bool stopping_criterion(const InputArray& candidate,
                        std::span<const InputArray> previous, double epsilon) {
  if (previous.empty()) return false;
  const CurrentProfile c = candidate.profile();
  double nearest = std::numeric_limits<double>::infinity();
  for (const InputArray& p : previous) {
    nearest = std::min(nearest, l2_distance(c, p.profile()));
  }
  return nearest < epsilon;
}

DesignStepResult design_step(const ModelConfig& base_model, const DesignConfig& config,
                             const ParameterVector& mu,
                             std::span<const InformationMatrix> prior,
                             std::span<const InputArray> previous,
                             const InputArray& start) {
  if (!scaled_bounds().contains(mu)) {
    throw Error(ErrorCode::kScaling, "design parameter outside the box");
  }
  ModelConfig model = base_model;
  model.clamp_budget = config.design_clamp_budget;
  const auto n = static_cast<Eigen::Index>(start.size());
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, config.bounds.current_min);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, config.bounds.current_max);
  lower[n - 1] = config.bounds.voltage_min;
  upper[n - 1] = config.bounds.voltage_max;
  const double horizon = start.horizon;

  const ScalarObjective objective = [&](const Eigen::VectorXd& x) {
    const InputArray u = InputArray::from_flat(
        std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
        horizon);
    return penalized_objective(model, u, mu, prior, previous, config.gamma,
                               config.sensitivity_step);
  };
  const std::vector<double> flat = start.flatten();
  const Eigen::Map<const Eigen::VectorXd> x0(flat.data(), n);
  const BoxMinimizerResult r =
      minimize_in_box(objective, x0, lower, upper, config.optimizer);

  DesignStepResult out;
  out.input = InputArray::from_flat(
      std::span<const double>(r.x.data(), static_cast<std::size_t>(n)), horizon);
  out.start_objective = r.initial_value;
  out.objective = r.value;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.message = r.message;
  return out;
}

DesignRecord run_collection_design(const ModelConfig& model,
                                   const DesignConfig& config,
                                   DataSource& source,
                                   const DesignObserver& observer) {
  config.validate();
  DesignRecord record;
  record.framework = Framework::kCollection;
  record.config = config;
  record.truth = source.truth();

  ModelConfig design_model = model;
  design_model.clamp_budget = config.design_clamp_budget;
  ParameterVector mu = config.initial_guess;
  std::vector<InputArray> inputs;
  DataSet data;
  data.provenance = record.truth ? Provenance::kVirtual : Provenance::kMeasured;

  for (int n = 1; n <= config.max_inputs; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    DesignIteration it;
    it.index = n;
    it.design_mu = mu;

    std::vector<InformationMatrix> prior;
    for (const InputArray& u : inputs) {
      try {
        prior.push_back(information_matrix(
            sensitivities(design_model, mu, u, config.sensitivity_step)));
      } catch (const Error&) {
        prior.push_back(InformationMatrix::Zero());
      }
    }

    InputArray u;
    if (n == 1) {
      u = alternating_input(static_cast<std::size_t>(config.steps),
                            config.first_voltage, config.horizon);
      it.design_message = "fixed first input";
    } else {
      const DesignStepResult step =
          design_step(model, config, mu, prior, inputs, inputs.back());
      u = step.input;
      it.design_converged = step.converged;
      it.design_message = step.message;
      it.design_iterations = step.iterations;
      if (stopping_criterion(u, inputs, config.epsilon)) {
        record.stopped_by_criterion = true;
        break;
      }
    }
    it.input = u;
    try {
      it.information = information_matrix(
          sensitivities(design_model, mu, u, config.sensitivity_step));
      InformationMatrix total = sum_matrices(prior) + it.information;
      it.phi = design_objective_from_matrix(total, u.flatten(), config.gamma);
    } catch (const Error&) {
      it.phi = kSingularObjective;
    }
    it.phi_hat = it.phi + closeness_penalty(u, inputs);

    try {
      data.blocks.push_back(source.acquire(u.profile(), u.initial_voltage,
                                           "input_" + std::to_string(n)));
    } catch (const Error&) {
      record.stopped_by_infeasibility = true;
      break;
    }
    inputs.push_back(u);
    estimate_into(model, config, data, record.truth, &mu, &it);
    it.wall_seconds = seconds_since(t0);
    if (observer) observer(it);
    record.iterations.push_back(std::move(it));
  }
  return record;
}

DesignRecord run_concatenated_design(const ModelConfig& model,
                                     const DesignConfig& config,
                                     DataSource& source,
                                     const DesignObserver& observer) {
  config.validate();
  DesignRecord record;
  record.framework = Framework::kConcatenated;
  record.config = config;
  record.truth = source.truth();

  ModelConfig design_model = model;
  design_model.clamp_budget = config.design_clamp_budget;
  const double v0 = config.global_voltage;
  ParameterVector mu = config.initial_guess;
  std::optional<CurrentProfile> prefix;
  std::vector<double> amplitudes =
      alternating_input(static_cast<std::size_t>(config.steps), v0,
                        config.horizon)
          .amplitudes;
  const auto n_amp = static_cast<Eigen::Index>(config.steps);
  const Eigen::VectorXd lower =
      Eigen::VectorXd::Constant(n_amp, config.bounds.current_min);
  const Eigen::VectorXd upper =
      Eigen::VectorXd::Constant(n_amp, config.bounds.current_max);

  for (int n = 1; n <= config.max_inputs; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    DesignIteration it;
    it.index = n;
    it.design_mu = mu;

    std::optional<PrefixSensitivities> cache;
    try {
      cache.emplace(design_model, mu, v0, config.sensitivity_step,
                    prefix ? &*prefix : nullptr);
    } catch (const Error& e) {
      it.design_converged = false;
      it.design_message = std::string("prefix simulation failed: ") + e.what();
    }

    const auto objective_of = [&](std::span<const double> amps,
                                  InformationMatrix* m) {
      if (!cache) return kSingularObjective;
      try {
        const InformationMatrix info = cache->information(
            segment_profile(amps, config.horizon, config.rest));
        if (m) *m = info;
        return design_objective_from_matrix(info, amps, config.gamma);
      } catch (const Error&) {
        return kSingularObjective;
      }
    };

    if (cache) {
      const ScalarObjective objective = [&](const Eigen::VectorXd& x) {
        return objective_of(std::span<const double>(
                                x.data(), static_cast<std::size_t>(x.size())),
                            nullptr);
      };
      // Warm start: the previous segment, its reverse (which returns the
      // charge it moved) or the alternating pattern, whichever scores best.
      const Eigen::Map<const Eigen::VectorXd> previous(amplitudes.data(), n_amp);
      const std::vector<double> pattern =
          alternating_input(static_cast<std::size_t>(config.steps), v0,
                            config.horizon)
              .amplitudes;
      Eigen::VectorXd x0 = previous;
      double best = objective(x0);
      for (const Eigen::VectorXd& candidate :
           {Eigen::VectorXd(-previous),
            Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(pattern.data(), n_amp))}) {
        const double value = objective(candidate);
        if (value < best) {
          best = value;
          x0 = candidate;
        }
      }
      const BoxMinimizerResult r =
          minimize_in_box(objective, x0, lower, upper, config.optimizer);
      amplitudes.assign(r.x.data(), r.x.data() + r.x.size());
      it.design_converged = r.converged;
      it.design_message = r.message;
      it.design_iterations = r.iterations;
    }
    it.phi = objective_of(amplitudes, &it.information);
    it.phi_hat = it.phi;
    it.input = InputArray{amplitudes, v0, config.horizon};
    if (it.phi >= kSingularObjective) {
      // Every candidate leaves the admissible concentration range; appending
      // one would only saturate the cell.
      record.stopped_by_infeasibility = true;
      break;
    }

    const CurrentProfile segment =
        segment_profile(amplitudes, config.horizon, config.rest);
    const CurrentProfile extended = prefix ? prefix->then(segment) : segment;

    DataSet data;
    data.provenance = record.truth ? Provenance::kVirtual : Provenance::kMeasured;
    try {
      data.blocks.push_back(source.acquire(extended, v0, "profile"));
    } catch (const Error&) {
      record.stopped_by_infeasibility = true;
      break;
    }
    prefix = extended;
    estimate_into(model, config, data, record.truth, &mu, &it);
    it.wall_seconds = seconds_since(t0);
    if (observer) observer(it);
    record.iterations.push_back(std::move(it));
  }
  return record;
}

DesignRecord run_design(const ModelConfig& model, const DesignConfig& config,
                        DataSource& source, const DesignObserver& observer) {
  return config.framework == Framework::kCollection
             ? run_collection_design(model, config, source, observer)
             : run_concatenated_design(model, config, source, observer);
}

}  // namespace oid
