#include "oid/estimation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "oid/error.hpp"

namespace oid {

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::kPreparation: return "prep";
    case Phase::kRest: return "rest";
    case Phase::kImpulse: return "impulse";
  }
  return "impulse";
}

Phase parse_phase(const std::string& text) {
  if (text == "prep") return Phase::kPreparation;
  if (text == "rest") return Phase::kRest;
  if (text == "impulse") return Phase::kImpulse;
  throw Error(ErrorCode::kData, "unknown phase label '" + text + "'");
}

const char* to_string(Provenance provenance) {
  return provenance == Provenance::kVirtual ? "virtual" : "measured";
}

std::size_t DataSet::size() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

void DataSet::validate() const {
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const DataBlock& b = blocks[bi];
    if (b.time.size() != b.voltage.size() ||
        (!b.phase.empty() && b.phase.size() != b.time.size()) ||
        (!b.current.empty() && b.current.size() != b.time.size())) {
      throw Error(ErrorCode::kData, "block " + std::to_string(bi + 1) +
                                        ": column lengths differ");
    }
    if (b.time.empty()) {
      throw Error(ErrorCode::kData,
                  "block " + std::to_string(bi + 1) + " has no samples");
    }
    for (std::size_t k = 0; k < b.size(); ++k) {
      const double w = b.voltage[k];
      if (!std::isfinite(w) || !std::isfinite(b.time[k])) {
        throw Error(ErrorCode::kData, "block " + std::to_string(bi + 1) +
                                          ", sample " + std::to_string(k) +
                                          ": non-finite value");
      }
      if (w <= 0.0) {
        std::ostringstream msg;
        msg << "block " << bi + 1 << ", sample " << k << " (t = " << b.time[k]
            << "): voltage " << w << " must be positive";
        throw Error(ErrorCode::kData, msg.str());
      }
      if (k > 0 && !(b.time[k] > b.time[k - 1])) {
        throw Error(ErrorCode::kData, "block " + std::to_string(bi + 1) +
                                          ": time not strictly increasing at "
                                          "sample " + std::to_string(k));
      }
    }
    if (b.time.front() - b.time_origin < -1e-9 ||
        b.time.back() - b.time_origin > b.profile.duration() + 1e-9) {
      throw Error(ErrorCode::kData, "block " + std::to_string(bi + 1) +
                                        ": samples outside the current profile");
    }
  }
}

double interpolate_uniform(const std::vector<double>& values, double dt,
                           double t) {
  const double pos = t / dt;
  const double node = std::round(pos);
  const auto last = static_cast<double>(values.size() - 1);
  if (std::abs(pos - node) < 1e-9) {
    return values[static_cast<std::size_t>(std::clamp(node, 0.0, last))];
  }
  const double base = std::clamp(std::floor(pos), 0.0, last - 1.0);
  const auto k = static_cast<std::size_t>(base);
  const double frac = pos - base;
  return values[k] + frac * (values[k + 1] - values[k]);
}

std::vector<double> model_voltage(const ModelConfig& config,
                                  const ParameterVector& mu,
                                  const DataBlock& block) {
  const VoltageTrace trace =
      simulate(config, mu, block.profile, block.initial_voltage);
  std::vector<double> out(block.size());
  for (std::size_t k = 0; k < block.size(); ++k) {
    out[k] = interpolate_uniform(trace.voltage, config.time_step,
                                 block.time[k] - block.time_origin);
  }
  return out;
}

Eigen::VectorXd residuals(const ModelConfig& config, const ParameterVector& mu,
                          const DataSet& data) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(data.size()));
  Eigen::Index offset = 0;
  for (const DataBlock& block : data.blocks) {
    const std::vector<double> v = model_voltage(config, mu, block);
    for (std::size_t k = 0; k < block.size(); ++k) {
      const double w = block.voltage[k];
      if (!(w > 0.0)) {
        throw Error(ErrorCode::kData, "block '" + block.label + "', sample " +
                                          std::to_string(k) +
                                          ": voltage must be positive");
      }
      e[offset++] = (v[k] - w) / w;
    }
  }
  return e;
}

double relative_parameter_error(const ParameterVector& estimate,
                                const ParameterVector& truth) {
  return (truth - estimate).norm() / truth.norm();
}

EstimationResult estimate(const ModelConfig& config,
                          const ParameterVector& start, const DataSet& data,
                          const LeastSquaresOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const ParameterBounds& box = scaled_bounds();
  EstimationResult out;
  out.mu = box.project(start);
  const ResidualFunction fn = [&](const Eigen::VectorXd& x) {
    return residuals(config, ParameterVector(x), data);
  };
  try {
    const LeastSquaresResult r = solve_bounded_least_squares(
        fn, out.mu, box.lower, box.upper, options);
    out.mu = ParameterVector(r.x);
    out.cost = r.cost;
    out.residual = r.residual;
    out.iterations = r.iterations;
    out.evaluations = r.evaluations;
    out.converged = r.converged;
    out.message = r.message;
  } catch (const Error& e) {
    out.converged = false;
    out.cost = std::numeric_limits<double>::infinity();
    out.message = std::string(to_string(e.code())) + ": " + e.what();
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Conditioning conditioning_of(const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd sym = 0.5 * (hessian + hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym,
                                                        Eigen::EigenvaluesOnly);
  Conditioning c;
  c.eigenvalues = solver.eigenvalues().reverse();
  const double lmax = c.eigenvalues[0];
  const double lmin = c.eigenvalues[c.eigenvalues.size() - 1];
  const double floor = std::numeric_limits<double>::epsilon() * std::abs(lmax);
  if (!(lmin > floor)) {
    c.singular = true;
    c.beta = std::numeric_limits<double>::infinity();
  } else {
    c.beta = lmax / lmin;
  }
  return c;
}

Eigen::MatrixXd gauss_newton_hessian(const ModelConfig& config,
                                     const ParameterVector& mu,
                                     const DataSet& data, double step) {
  const ParameterBounds& box = scaled_bounds();
  const ResidualFunction fn = [&](const Eigen::VectorXd& x) {
    return residuals(config, ParameterVector(x), data);
  };
  const Eigen::VectorXd r = fn(mu);
  const Eigen::MatrixXd g = forward_jacobian(fn, mu, r, box.lower, box.upper, step);
  return g.transpose() * g;
}

Conditioning hessian_conditioning(const ModelConfig& config,
                                  const ParameterVector& mu,
                                  const DataSet& data, double step) {
  return conditioning_of(gauss_newton_hessian(config, mu, data, step));
}

double StudyTable::mean_wall_seconds() const {
  if (runs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : runs) sum += r.result.wall_seconds;
  return sum / static_cast<double>(runs.size());
}

double StudyTable::success_fraction(const ParameterVector& truth,
                                    double tolerance) const {
  if (runs.empty()) return 0.0;
  int hits = 0;
  for (const auto& r : runs) {
    if (std::isfinite(r.result.cost) &&
        relative_parameter_error(r.result.mu, truth) <= tolerance) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(runs.size());
}

ParameterVector study_start(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const ParameterBounds& box = scaled_bounds();
  ParameterVector mu;
  for (int j = 0; j < kNumParameters; ++j) {
    std::uniform_real_distribution<double> dist(box.lower[j], box.upper[j]);
    mu[j] = dist(rng);
  }
  return mu;
}

Histogram parameter_histogram(const std::vector<StudyRun>& runs, int j,
                              int bins) {
  const ParameterBounds& box = scaled_bounds();
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const double lo = box.lower[j];
  const double width = (box.upper[j] - lo) / bins;
  for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + b * width;
  h.edges.back() = box.upper[j];
  for (const auto& r : runs) {
    if (!std::isfinite(r.result.cost)) continue;
    int b = static_cast<int>(std::floor((r.result.mu[j] - lo) / width));
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

StudyTable restart_study(const ModelConfig& config, const DataSet& data,
                         const StudyOptions& options) {
  if (options.runs < 1 || options.histogram_bins < 1) {
    throw Error(ErrorCode::kConfig, "study needs at least one run and one bin");
  }
  data.validate();
  StudyTable table;
  table.runs.reserve(static_cast<std::size_t>(options.runs));
  for (int i = 0; i < options.runs; ++i) {
    StudyRun run;
    run.index = i + 1;
    run.start = study_start(options.seed, i);
    run.result = estimate(config, run.start, data, options.solver);
    table.runs.push_back(std::move(run));
  }
  for (int j = 0; j < kNumParameters; ++j) {
    table.histograms.push_back(
        parameter_histogram(table.runs, j, options.histogram_bins));
  }
  return table;
}

ParameterVector propose_optimum(const StudyTable& table) {
  bool any_converged = false;
  for (const auto& r : table.runs) any_converged |= r.result.converged;

  struct Group {
    ParameterVector sum = ParameterVector::Zero();
    double cost = 0.0;
    int count = 0;
  };
  std::map<std::vector<long long>, Group> groups;
  for (const auto& r : table.runs) {
    if (!std::isfinite(r.result.cost)) continue;
    if (any_converged && !r.result.converged) continue;
    std::vector<long long> key(kNumParameters);
    for (int j = 0; j < kNumParameters; ++j) {
      key[static_cast<std::size_t>(j)] = std::llround(r.result.mu[j] * 1000.0);
    }
    Group& g = groups[key];
    g.sum += r.result.mu;
    g.cost += r.result.cost;
    ++g.count;
  }
  if (groups.empty()) {
    throw Error(ErrorCode::kData, "no usable study runs to propose an optimum");
  }
  const Group* best = nullptr;
  for (const auto& [key, g] : groups) {
    if (!best || g.count > best->count ||
        (g.count == best->count && g.cost / g.count < best->cost / best->count)) {
      best = &g;
    }
  }
  return best->sum / best->count;
}

}  // namespace oid
