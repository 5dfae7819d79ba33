#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oid/error.hpp"
#include "oid/simulator.hpp"

namespace {

using oid::CurrentProfile;
using oid::ModelConfig;

std::vector<double> random_inflows(int count, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = u(rng);
  return out;
}

TEST(ParticleDiffusion, LithiumBalancePerStep) {
  oid::ParticleDiffusion p(1.0, 2e-3, 50, 0.1, 0.4);
  for (double inflow : random_inflows(500, 1e-3, 3)) {
    const double before = p.total_lithium();
    p.step(inflow);
    const double expected = before + 0.1 * p.surface_area() * inflow;
    EXPECT_NEAR(p.total_lithium(), expected, 1e-12 * before);
  }
}

TEST(ModalDiffusion, LithiumBalancePerStep) {
  oid::ModalDiffusion m(1.0, 5e-3, 50, 0.1, 0.6);
  for (double inflow : random_inflows(500, 1e-3, 4)) {
    const double before = m.total_lithium();
    m.step(inflow);
    EXPECT_NEAR(m.total_lithium(), before + 0.1 * inflow, 1e-12 * before);
  }
}

TEST(ModalDiffusion, AgreesWithTridiagonalSolve) {
  oid::ParticleDiffusion direct(1.0, 3e-3, 50, 0.1, 0.3);
  oid::ModalDiffusion modal(1.0, 3e-3, 50, 0.1, 0.3);
  for (double inflow : random_inflows(2000, 2e-3, 9)) {
    direct.step(inflow);
    modal.step(inflow);
  }
  const std::vector<double> a = direct.concentration();
  const std::vector<double> b = modal.concentration();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-11);
  EXPECT_NEAR(direct.surface_soc(1e-3), modal.surface_soc(1e-3), 1e-11);
}

TEST(ParticleDiffusion, UniformStateIsFixedPointWithoutFlux) {
  oid::ParticleDiffusion p(1.0, 1e-2, 50, 0.1, 0.25);
  for (int k = 0; k < 100; ++k) p.step(0.0);
  for (double x : p.concentration()) EXPECT_NEAR(x, 0.25, 1e-14);
}

TEST(Simulate, GridHasOneSamplePerStepPlusEnd) {
  const ModelConfig config;
  const oid::VoltageTrace trace = oid::simulate(
      config, oid::synthetic_truth(), oid::alternating_input(24, 3.7, 60.0));
  ASSERT_EQ(trace.size(), 601u);
  EXPECT_DOUBLE_EQ(trace.time.back(), 60.0);
  EXPECT_NEAR(trace.time[1], 0.1, 1e-15);
}

TEST(Simulate, ZeroCurrentHoldsInitialVoltage) {
  const ModelConfig config;
  for (double v0 : {3.4, 3.7, 4.0}) {
    const oid::VoltageTrace trace = oid::simulate(
        config, oid::synthetic_truth(), CurrentProfile::constant(0.0, 30.0), v0);
    for (double v : trace.voltage) EXPECT_NEAR(v, v0, 1e-10);
  }
}

TEST(Simulate, ResistanceSensitivityIsExactlyLinear) {
  const ModelConfig config;
  const oid::InputArray u = oid::alternating_input(24, 3.7, 60.0);
  oid::ParameterVector mu = oid::synthetic_truth();
  const oid::VoltageTrace base = oid::simulate(config, mu, u);
  const double h = 1e-3;
  mu[3] += h;
  const oid::VoltageTrace shifted = oid::simulate(config, mu, u);
  for (std::size_t k = 0; k < base.size(); ++k) {
    const double s = (shifted.voltage[k] - base.voltage[k]) / h;
    EXPECT_NEAR(s, 0.0365 * base.current[k], 1e-9);
  }
}

TEST(CellSimulator, SplitAdvanceIsBitIdentical) {
  const ModelConfig config;
  const std::vector<double> a = {2.0, -3.0, 1.5};
  const std::vector<double> b = {-1.0, 4.0};
  const CurrentProfile first = CurrentProfile::uniform_steps(a, 30.0);
  const CurrentProfile second = CurrentProfile::uniform_steps(b, 20.0);

  oid::CellSimulator split(config, oid::synthetic_truth(), 3.8);
  oid::VoltageTrace split_trace;
  split.advance(first, &split_trace);
  split.advance(second, &split_trace);

  oid::CellSimulator whole(config, oid::synthetic_truth(), 3.8);
  oid::VoltageTrace whole_trace;
  whole.advance(first.then(second), &whole_trace);

  EXPECT_EQ(split_trace.voltage, whole_trace.voltage);
  EXPECT_EQ(split.state().cathode, whole.state().cathode);
}

TEST(CellSimulator, RejectsMisalignedSteps) {
  const ModelConfig config;
  oid::CellSimulator sim(config, oid::synthetic_truth(), 3.7);
  oid::VoltageTrace trace;
  EXPECT_THROW(sim.advance(CurrentProfile::constant(1.0, 0.25), &trace), oid::Error);
}

TEST(CellSimulator, SaturationExceedsBudget) {
  ModelConfig config;
  config.clamp_budget = 10;
  // Long full-rate charge drives the anode surface out of the window.
  try {
    oid::simulate(config, oid::synthetic_truth(), CurrentProfile::constant(-8.8, 3000.0),
                  4.05);
    FAIL() << "expected saturation";
  } catch (const oid::Error& e) {
    EXPECT_EQ(e.code(), oid::ErrorCode::kSaturation);
  }
}

TEST(CellSimulator, InitialStateMatchesInitialVoltage) {
  const ModelConfig config;
  oid::CellSimulator sim(config, oid::synthetic_truth(), 3.9);
  EXPECT_NEAR(sim.voltage(0.0), 3.9, 1e-10);
}

TEST(Simulate, DeterministicAcrossRuns) {
  const ModelConfig config;
  const oid::InputArray u = oid::alternating_input(24, 3.7, 60.0);
  EXPECT_EQ(oid::simulate(config, oid::synthetic_truth(), u).voltage,
            oid::simulate(config, oid::synthetic_truth(), u).voltage);
}

}  // namespace
