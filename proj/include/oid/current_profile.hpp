#pragma once

#include <span>
#include <vector>

namespace oid {

// Right-open step function i(t) on [0, t_f]; the last step is closed at t_f.
class CurrentProfile {
 public:
  CurrentProfile() = default;
  // `edges` has one more entry than `amplitudes`, starts at 0 and increases
  // strictly.
  CurrentProfile(std::vector<double> edges, std::vector<double> amplitudes);

  static CurrentProfile uniform_steps(std::span<const double> amplitudes,
                                      double horizon);
  static CurrentProfile constant(double amplitude, double duration);

  double duration() const { return edges_.empty() ? 0.0 : edges_.back(); }
  double value_at(double t) const;
  std::size_t step_count() const { return amplitudes_.size(); }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& amplitudes() const { return amplitudes_; }

  // Appends `next` shifted by this profile's duration.
  CurrentProfile then(const CurrentProfile& next) const;

  // True when every step width is an integer multiple of `dt`.
  bool aligned_to(double dt) const;

  // Samples i(t_k) for t_k = k dt, k = 0..round(duration/dt).
  std::vector<double> sample(double dt) const;

 private:
  std::vector<double> edges_;
  std::vector<double> amplitudes_;
};

// Exact L2(0, t_f) distance between two step functions on the same horizon.
double l2_distance(const CurrentProfile& a, const CurrentProfile& b);

// Design variable u = [u_1, ..., u_n, v_0] with uniform step width
// t_f / n.
struct InputArray {
  std::vector<double> amplitudes;
  double initial_voltage = 3.7;
  double horizon = 60.0;

  std::size_t size() const { return amplitudes.size() + 1; }
  double step_width() const {
    return horizon / static_cast<double>(amplitudes.size());
  }
  CurrentProfile profile() const {
    return CurrentProfile::uniform_steps(amplitudes, horizon);
  }
  // Flat view [u_1..u_n, v_0].
  std::vector<double> flatten() const;
  static InputArray from_flat(std::span<const double> flat, double horizon);
};

struct InputBounds {
  double current_min = -8.8;
  double current_max = 8.8;
  double voltage_min = 3.3;
  double voltage_max = 4.1;

  bool contains(const InputArray& u) const;
};

// [-1, +1, ..., -1, +1, v0] with `steps` amplitudes.
InputArray alternating_input(std::size_t steps, double v0, double horizon);

}  // namespace oid
