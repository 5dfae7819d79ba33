#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oid/design.hpp"
#include "oid/error.hpp"

namespace {

using oid::DesignConfig;
using oid::InputArray;

// Small problem so the optimizer runs in well under a second per step.
DesignConfig small_config() {
  DesignConfig c;
  c.steps = 4;
  c.horizon = 10.0;
  c.max_inputs = 2;
  c.optimizer.max_iterations = 4;
  c.solver.max_iterations = 20;
  return c;
}

TEST(StoppingCriterion, IdenticalAndEmpty) {
  const InputArray u = oid::alternating_input(24, 3.7, 60.0);
  const std::vector<InputArray> prev = {u};
  EXPECT_TRUE(oid::stopping_criterion(u, prev, 1e-12));
  EXPECT_FALSE(oid::stopping_criterion(u, std::vector<InputArray>{}, 1e9));
}

TEST(StoppingCriterion, DistanceOfUnitShift) {
  const InputArray u = oid::alternating_input(24, 3.7, 60.0);
  InputArray v = u;
  for (double& a : v.amplitudes) a += 1.0;
  const std::vector<InputArray> prev = {u};
  EXPECT_TRUE(oid::stopping_criterion(v, prev, std::sqrt(60.0) + 1e-9));
  EXPECT_FALSE(oid::stopping_criterion(v, prev, std::sqrt(60.0) - 1e-9));
}

TEST(StoppingCriterion, MismatchedHorizons) {
  const std::vector<InputArray> prev = {oid::alternating_input(24, 3.7, 60.0)};
  EXPECT_THROW(oid::stopping_criterion(oid::alternating_input(24, 3.7, 30.0), prev, 0.1),
               oid::Error);
}

TEST(DesignConfig, Presets) {
  const DesignConfig c = DesignConfig::collection();
  EXPECT_EQ(c.steps, 24);
  EXPECT_EQ(c.horizon, 60.0);
  EXPECT_EQ(c.max_inputs, 10);
  const DesignConfig k = DesignConfig::concatenated();
  EXPECT_EQ(k.steps, 6);
  EXPECT_EQ(k.horizon, 120.0);
  EXPECT_EQ(k.rest, 600.0);
  EXPECT_EQ(k.max_inputs, 9);
  EXPECT_EQ(k.global_voltage, 3.9);
  EXPECT_EQ(k.max_inputs * (k.horizon + k.rest), 6480.0);
}

TEST(DesignConfig, ValidationRejectsBadValues) {
  DesignConfig c;
  c.max_inputs = 0;
  EXPECT_THROW(c.validate(), oid::Error);
  c = DesignConfig{};
  c.bounds.current_min = 9.0;
  EXPECT_THROW(c.validate(), oid::Error);
  c = DesignConfig{};
  c.horizon = -1.0;
  EXPECT_THROW(c.validate(), oid::Error);
}

TEST(Framework, ParseNames) {
  EXPECT_EQ(oid::parse_framework("collection"), oid::Framework::kCollection);
  EXPECT_EQ(oid::parse_framework("concat"), oid::Framework::kConcatenated);
  EXPECT_THROW(oid::parse_framework("mixed"), oid::Error);
}

TEST(SegmentProfile, StepsThenRest) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};
  const oid::CurrentProfile p = oid::segment_profile(a, 120.0, 600.0);
  EXPECT_EQ(p.duration(), 720.0);
  EXPECT_EQ(p.value_at(25.0), 2.0);
  EXPECT_EQ(p.value_at(300.0), 0.0);
}

TEST(DesignStep, StaysInBoxAndDescends) {
  const oid::ModelConfig model;
  const DesignConfig config = small_config();
  const InputArray start = oid::alternating_input(4, 3.7, 10.0);
  const oid::DesignStepResult r =
      oid::design_step(model, config, oid::default_initial_guess(), {}, {}, start);
  EXPECT_LE(r.objective, r.start_objective);
  for (double a : r.input.amplitudes) {
    EXPECT_GE(a, -8.8);
    EXPECT_LE(a, 8.8);
  }
  EXPECT_GE(r.input.initial_voltage, 3.3);
  EXPECT_LE(r.input.initial_voltage, 4.1);
}

TEST(DesignStep, PenaltyMovesAwayFromPreviousInput) {
  const oid::ModelConfig model;
  const DesignConfig config = small_config();
  const InputArray start = oid::alternating_input(4, 3.7, 10.0);
  const std::vector<InputArray> previous = {start};
  const oid::DesignStepResult r = oid::design_step(
      model, config, oid::default_initial_guess(), {}, previous, start);
  double distance = 0.0;
  const auto a = r.input.flatten();
  const auto b = start.flatten();
  for (std::size_t i = 0; i < a.size(); ++i) distance = std::max(distance, std::abs(a[i] - b[i]));
  EXPECT_GT(distance, 0.0);
}

TEST(CollectionDesign, FirstInputIsFixedAndLengthBounded) {
  const oid::ModelConfig model;
  DesignConfig config = small_config();
  config.steps = 24;
  config.horizon = 60.0;
  config.max_inputs = 2;
  config.optimizer.max_iterations = 1;
  oid::VirtualDataSource source(model, oid::synthetic_truth());
  int observed = 0;
  const oid::DesignRecord record = oid::run_collection_design(
      model, config, source, [&](const oid::DesignIteration&) { ++observed; });
  ASSERT_GE(record.iterations.size(), 1u);
  EXPECT_LE(record.iterations.size(), 2u);
  EXPECT_EQ(observed, static_cast<int>(record.iterations.size()));
  const std::vector<double> first = record.iterations[0].input.flatten();
  const std::vector<double> expected = oid::alternating_input(24, 3.7, 60.0).flatten();
  EXPECT_EQ(first, expected);
  for (std::size_t n = 0; n < record.iterations.size(); ++n) {
    EXPECT_EQ(record.iterations[n].index, static_cast<int>(n + 1));
    EXPECT_TRUE(record.iterations[n].relative_error.has_value());
  }
  EXPECT_EQ(record.experiment_time(), 60.0 * record.iterations.size());
}

TEST(VirtualDataSource, ZeroNoiseIsBitExact) {
  const oid::ModelConfig model;
  const InputArray u = oid::alternating_input(24, 3.7, 60.0);
  oid::VirtualDataSource quiet(model, oid::synthetic_truth());
  oid::VirtualDataSource zero(model, oid::synthetic_truth(), 0.0, 99);
  EXPECT_EQ(quiet.acquire(u.profile(), 3.7, "a").voltage,
            zero.acquire(u.profile(), 3.7, "a").voltage);
  oid::VirtualDataSource noisy(model, oid::synthetic_truth(), 1e-3, 99);
  EXPECT_NE(quiet.acquire(u.profile(), 3.7, "a").voltage,
            noisy.acquire(u.profile(), 3.7, "a").voltage);
}

TEST(DesignRecord, ConcatenatedProfilesJoin) {
  oid::DesignRecord record;
  record.framework = oid::Framework::kConcatenated;
  record.config = DesignConfig::concatenated();
  for (int n = 1; n <= 3; ++n) {
    oid::DesignIteration it;
    it.index = n;
    it.input = oid::alternating_input(6, 3.9, 120.0);
    record.iterations.push_back(it);
  }
  EXPECT_EQ(record.experiment_time(), 3 * 720.0);
  EXPECT_EQ(record.full_profile().duration(), 3 * 720.0);
}

}  // namespace
