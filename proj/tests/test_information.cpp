#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oid/information.hpp"

namespace {

using oid::InformationMatrix;
using oid::SensitivityMatrix;

std::vector<double> grid(double horizon, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  std::vector<double> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

InformationMatrix random_spd(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Matrix<double, 9, 9> a;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) a(i, j) = n(rng);
  return a * a.transpose() + 0.1 * InformationMatrix::Identity();
}

TEST(InformationMatrix, ConstantColumn) {
  const std::vector<double> t = grid(60.0, 0.1);
  SensitivityMatrix s = SensitivityMatrix::Zero(static_cast<Eigen::Index>(t.size()), 9);
  s.col(0).setConstant(0.5);
  const InformationMatrix m = oid::information_matrix(s, t);
  EXPECT_NEAR(m(0, 0), 60.0 * 0.25, 1e-10);
  EXPECT_EQ(m(1, 1), 0.0);
}

TEST(InformationMatrix, LinearTimesConstantCrossTerm) {
  const std::vector<double> t = grid(60.0, 0.1);
  SensitivityMatrix s = SensitivityMatrix::Zero(static_cast<Eigen::Index>(t.size()), 9);
  for (std::size_t k = 0; k < t.size(); ++k) {
    s(static_cast<Eigen::Index>(k), 0) = 1.0;
    s(static_cast<Eigen::Index>(k), 1) = t[k] / 60.0;
  }
  const InformationMatrix m = oid::information_matrix(s, t);
  EXPECT_NEAR(m(0, 1), 30.0, 1e-10);
  EXPECT_EQ(m(0, 1), m(1, 0));
}

TEST(TrapezoidWeights, SumToDuration) {
  const std::vector<double> t = {0.0, 0.5, 0.7, 2.0};
  const std::vector<double> w = oid::trapezoid_weights(t);
  EXPECT_NEAR(w[0] + w[1] + w[2] + w[3], 2.0, 1e-15);
  EXPECT_NEAR(w[1], 0.35, 1e-15);
}

TEST(DCriterion, IdentityAndScaledIdentity) {
  EXPECT_NEAR(oid::d_criterion(InformationMatrix::Identity()), 0.0, 1e-14);
  EXPECT_NEAR(oid::d_criterion(2.0 * InformationMatrix::Identity()), -9.0 * std::log(2.0),
              1e-12);
  EXPECT_TRUE(std::isinf(oid::d_criterion(InformationMatrix::Zero())));
}

TEST(DCriterion, AgreesWithDenseDeterminant) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const InformationMatrix m = random_spd(rng);
    const double dense = -std::log(m.partialPivLu().determinant());
    EXPECT_NEAR(oid::d_criterion(m), dense, 1e-10 * std::max(1.0, std::abs(dense)));
  }
}

TEST(DesignObjective, IdentityAtZeroInput) {
  const std::vector<double> u(25, 0.0);
  EXPECT_NEAR(oid::design_objective_from_matrix(InformationMatrix::Identity(), u, 1e-4),
              0.0, 1e-14);
}

TEST(DesignObjective, RegularizationArithmetic) {
  std::vector<double> u(25, 0.0);
  u[0] = 6.0;
  u[1] = 8.0;  // squared norm 100
  EXPECT_NEAR(oid::design_objective_from_matrix(InformationMatrix::Identity(), u, 1e-4),
              0.01, 1e-15);
}

TEST(DesignObjective, SingularSentinel) {
  const std::vector<double> u(25, 0.0);
  EXPECT_EQ(oid::design_objective_from_matrix(InformationMatrix::Zero(), u, 1e-4),
            oid::kSingularObjective);
}

TEST(DesignObjective, PriorNeverIncreasesUncertainty) {
  std::mt19937_64 rng(8);
  const std::vector<double> u(25, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const InformationMatrix a = random_spd(rng);
    Eigen::Matrix<double, 9, 3> g = Eigen::Matrix<double, 9, 3>::Random();
    const InformationMatrix b = g * g.transpose();  // PSD, rank 3
    EXPECT_LE(oid::design_objective_from_matrix(a + b, u, 1e-4),
              oid::design_objective_from_matrix(a, u, 1e-4) + 1e-12);
  }
}

TEST(ClosenessPenalty, ExactValues) {
  const oid::InputArray u = oid::alternating_input(24, 3.7, 60.0);
  const std::vector<oid::InputArray> same = {u};
  EXPECT_DOUBLE_EQ(oid::closeness_penalty(u, same), 1.0);

  oid::InputArray v = u;
  v.amplitudes[5] += 0.09;
  EXPECT_NEAR(oid::closeness_penalty(v, same), 0.1, 1e-14);

  oid::InputArray w = u;
  w.initial_voltage += 0.09;  // the voltage entry counts in the norm
  EXPECT_NEAR(oid::closeness_penalty(w, same), 0.1, 1e-14);

  EXPECT_EQ(oid::closeness_penalty(u, std::vector<oid::InputArray>{}), 0.0);
}

TEST(Perturbation, BackwardAtUpperBound) {
  oid::ParameterVector mu = oid::synthetic_truth();
  mu[0] = oid::scaled_bounds().upper[0];
  EXPECT_EQ(oid::perturbation(mu, 0, 1e-3), -1e-3);
  EXPECT_EQ(oid::perturbation(mu, 1, 1e-3), 1e-3);
}

TEST(Sensitivities, ResistanceColumnIsScaledCurrent) {
  const oid::ModelConfig config;
  const oid::InputArray u = oid::alternating_input(24, 3.7, 60.0);
  const oid::SensitivityBundle b = oid::sensitivities(config, oid::synthetic_truth(), u);
  ASSERT_EQ(b.columns.rows(), 601);
  for (Eigen::Index k = 0; k < b.columns.rows(); ++k) {
    EXPECT_NEAR(b.columns(k, 3), 0.0365 * b.base.current[static_cast<std::size_t>(k)],
                1e-9);
  }
}

TEST(Sensitivities, ForwardAgreesWithCentralDifferences) {
  const oid::ModelConfig config;
  const oid::InputArray u = oid::alternating_input(24, 3.7, 60.0);
  const oid::ParameterVector mu = oid::synthetic_truth();
  const double h = 1e-3;
  const oid::SensitivityBundle forward = oid::sensitivities(config, mu, u, h);
  for (int j = 0; j < oid::kNumParameters; ++j) {
    oid::ParameterVector plus = mu;
    oid::ParameterVector minus = mu;
    plus[j] += h;
    minus[j] -= h;
    const auto vp = oid::simulate(config, plus, u).voltage;
    const auto vm = oid::simulate(config, minus, u).voltage;
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < vp.size(); ++k) {
      const double central = (vp[k] - vm[k]) / (2.0 * h);
      const double f = forward.columns(static_cast<Eigen::Index>(k), j);
      diff += (f - central) * (f - central);
      norm += central * central;
    }
    EXPECT_LE(std::sqrt(diff / norm), 5e-3) << "parameter " << j + 1;
  }
}

TEST(Sensitivities, InformationIsSymmetricPsd) {
  const oid::ModelConfig config;
  const oid::InputArray u = oid::alternating_input(24, 3.7, 60.0);
  const InformationMatrix m =
      oid::information_matrix(oid::sensitivities(config, oid::synthetic_truth(), u));
  EXPECT_EQ((m - m.transpose()).norm(), 0.0);
  EXPECT_GE(oid::spectrum(m)[0], -1e-10 * m.trace());
}

TEST(DesignObjective, PenalizedAddsClosenessTerm) {
  const oid::ModelConfig config;
  const oid::InputArray u = oid::alternating_input(24, 3.7, 60.0);
  const oid::ParameterVector mu = oid::synthetic_truth();
  const std::vector<InformationMatrix> prior = {InformationMatrix::Identity()};
  const std::vector<oid::InputArray> previous = {u};
  const double phi = oid::design_objective(config, u, mu, prior);
  EXPECT_DOUBLE_EQ(oid::penalized_objective(config, u, mu, prior, previous), phi + 1.0);
  EXPECT_DOUBLE_EQ(oid::penalized_objective(config, u, mu, prior, {}), phi);
}

}  // namespace
