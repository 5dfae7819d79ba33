#include "oid/current_profile.hpp"

#include <algorithm>
#include <cmath>

#include "oid/error.hpp"

namespace oid {

CurrentProfile::CurrentProfile(std::vector<double> edges,
                               std::vector<double> amplitudes)
    : edges_(std::move(edges)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.empty() || edges_.size() != amplitudes_.size() + 1) {
    throw Error(ErrorCode::kData,
                "current profile needs n amplitudes and n+1 edges");
  }
  if (edges_.front() != 0.0) {
    throw Error(ErrorCode::kData, "current profile must start at t = 0");
  }
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) {
      throw Error(ErrorCode::kData, "current profile edges must increase");
    }
  }
  for (double a : amplitudes_) {
    if (!std::isfinite(a)) {
      throw Error(ErrorCode::kData, "non-finite current amplitude");
    }
  }
}

CurrentProfile CurrentProfile::uniform_steps(std::span<const double> amplitudes,
                                             double horizon) {
  const std::size_t n = amplitudes.size();
  std::vector<double> edges(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    edges[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
  }
  return CurrentProfile(std::move(edges),
                        std::vector<double>(amplitudes.begin(), amplitudes.end()));
}

CurrentProfile CurrentProfile::constant(double amplitude, double duration) {
  return CurrentProfile({0.0, duration}, {amplitude});
}

double CurrentProfile::value_at(double t) const {
  if (amplitudes_.empty()) return 0.0;
  if (t >= edges_.back()) return amplitudes_.back();
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
  const auto index = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
      0, std::distance(edges_.begin(), it) - 1));
  return amplitudes_[std::min(index, amplitudes_.size() - 1)];
}

CurrentProfile CurrentProfile::then(const CurrentProfile& next) const {
  if (amplitudes_.empty()) return next;
  std::vector<double> edges = edges_;
  std::vector<double> amplitudes = amplitudes_;
  const double shift = duration();
  for (std::size_t i = 1; i < next.edges_.size(); ++i) {
    edges.push_back(shift + next.edges_[i]);
  }
  amplitudes.insert(amplitudes.end(), next.amplitudes_.begin(),
                    next.amplitudes_.end());
  return CurrentProfile(std::move(edges), std::move(amplitudes));
}

bool CurrentProfile::aligned_to(double dt) const {
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    const double ratio = (edges_[i] - edges_[i - 1]) / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) ||
        std::round(ratio) < 1.0) {
      return false;
    }
  }
  return true;
}

std::vector<double> CurrentProfile::sample(double dt) const {
  const auto steps = static_cast<std::size_t>(std::llround(duration() / dt));
  std::vector<double> out(steps + 1);
  std::size_t segment = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    // Half a step of slack absorbs rounding of the breakpoints.
    while (segment + 1 < amplitudes_.size() && t >= edges_[segment + 1] - 0.5 * dt) {
      ++segment;
    }
    out[k] = amplitudes_[segment];
  }
  return out;
}

double l2_distance(const CurrentProfile& a, const CurrentProfile& b) {
  if (std::abs(a.duration() - b.duration()) >
      1e-9 * std::max(1.0, a.duration())) {
    throw Error(ErrorCode::kComparison,
                "cannot compare current profiles with different horizons");
  }
  std::vector<double> cuts = a.edges();
  cuts.insert(cuts.end(), b.edges().begin(), b.edges().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double width = cuts[i + 1] - cuts[i];
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const double diff = a.value_at(mid) - b.value_at(mid);
    sum += diff * diff * width;
  }
  return std::sqrt(sum);
}

std::vector<double> InputArray::flatten() const {
  std::vector<double> flat = amplitudes;
  flat.push_back(initial_voltage);
  return flat;
}

InputArray InputArray::from_flat(std::span<const double> flat, double horizon) {
  if (flat.size() < 2) {
    throw Error(ErrorCode::kData, "input array needs at least one amplitude");
  }
  InputArray u;
  u.amplitudes.assign(flat.begin(), flat.end() - 1);
  u.initial_voltage = flat.back();
  u.horizon = horizon;
  return u;
}

bool InputBounds::contains(const InputArray& u) const {
  for (double a : u.amplitudes) {
    if (a < current_min || a > current_max) return false;
  }
  return u.initial_voltage >= voltage_min && u.initial_voltage <= voltage_max;
}

InputArray alternating_input(std::size_t steps, double v0, double horizon) {
  InputArray u;
  u.amplitudes.resize(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    u.amplitudes[i] = (i % 2 == 0) ? -1.0 : 1.0;
  }
  u.initial_voltage = v0;
  u.horizon = horizon;
  return u;
}

}  // namespace oid
