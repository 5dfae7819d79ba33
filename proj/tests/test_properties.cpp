// Randomized properties over seeded draws.

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oid/design.hpp"
#include "oid/estimation.hpp"
#include "oid/information.hpp"

namespace {

using oid::InformationMatrix;
using oid::InputArray;
using oid::ParameterVector;

class Seeded : public ::testing::TestWithParam<unsigned> {
 protected:
  std::mt19937_64 rng{GetParam()};

  ParameterVector random_mu() {
    const auto& box = oid::scaled_bounds();
    ParameterVector mu;
    // Stay in the middle half of the box so every draw simulates cleanly.
    for (int j = 0; j < oid::kNumParameters; ++j) {
      const double w = box.upper[j] - box.lower[j];
      mu[j] = std::uniform_real_distribution<double>(box.lower[j] + 0.25 * w,
                                                     box.upper[j] - 0.25 * w)(rng);
    }
    return mu;
  }

  InputArray random_input(std::size_t steps, double horizon) {
    InputArray u = oid::alternating_input(steps, 3.7, horizon);
    std::uniform_real_distribution<double> amp(-2.0, 2.0);
    for (double& a : u.amplitudes) a = amp(rng);
    u.initial_voltage = std::uniform_real_distribution<double>(3.5, 3.9)(rng);
    return u;
  }
};

TEST_P(Seeded, InformationIsSymmetricPsdAndAccumulates) {
  const oid::ModelConfig model;
  const ParameterVector mu = oid::synthetic_truth();
  InformationMatrix total = InformationMatrix::Zero();
  double previous_logdet = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < 3; ++n) {
    const InformationMatrix m =
        oid::information_matrix(oid::sensitivities(model, mu, random_input(12, 30.0)));
    EXPECT_EQ((m - m.transpose()).norm(), 0.0);
    EXPECT_GE(oid::spectrum(m)[0], -1e-10 * m.trace());
    total += m;
    const double logdet = -oid::d_criterion(total);
    if (std::isfinite(logdet)) {
      EXPECT_GE(logdet, previous_logdet - 1e-9 * std::abs(previous_logdet));
      previous_logdet = logdet;
    }
  }
}

TEST_P(Seeded, DoublingSensitivitiesScalesDeterminant) {
  const int rows = 50;
  oid::SensitivityMatrix s(rows, oid::kNumParameters);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < oid::kNumParameters; ++j) s(i, j) = n(rng);
  std::vector<double> t(rows);
  for (int i = 0; i < rows; ++i) t[static_cast<std::size_t>(i)] = 0.1 * i;
  const InformationMatrix m = oid::information_matrix(s, t);
  const InformationMatrix m2 = oid::information_matrix(2.0 * s, t);
  EXPECT_LT((m2 - 4.0 * m).norm(), 1e-12 * m.norm());
  EXPECT_NEAR(oid::d_criterion(m) - oid::d_criterion(m2), 9.0 * std::log(4.0), 1e-9);
}

TEST_P(Seeded, ProjectionLandsInBoxAndIsIdempotent) {
  const auto& box = oid::scaled_bounds();
  std::normal_distribution<double> n(0.0, 10.0);
  for (int k = 0; k < 100; ++k) {
    ParameterVector mu;
    for (int j = 0; j < oid::kNumParameters; ++j) mu[j] = n(rng);
    const ParameterVector p = box.project(mu);
    EXPECT_TRUE(box.contains(p));
    EXPECT_EQ(box.project(p), p);
  }
}

TEST_P(Seeded, L2DistanceIsAMetric) {
  const InputArray a = random_input(24, 60.0);
  const InputArray b = random_input(24, 60.0);
  const InputArray c = random_input(12, 60.0);
  const double ab = oid::l2_distance(a.profile(), b.profile());
  EXPECT_DOUBLE_EQ(ab, oid::l2_distance(b.profile(), a.profile()));
  EXPECT_EQ(oid::l2_distance(a.profile(), a.profile()), 0.0);
  EXPECT_LE(ab, oid::l2_distance(a.profile(), c.profile()) +
                    oid::l2_distance(c.profile(), b.profile()) + 1e-12);
}

TEST_P(Seeded, PenaltyTermsBoundedByInputCount) {
  const InputArray u = random_input(24, 60.0);
  std::vector<InputArray> previous;
  for (int k = 0; k < 4; ++k) previous.push_back(random_input(24, 60.0));
  const double p = oid::closeness_penalty(u, previous);
  EXPECT_GT(p, 0.0);
  EXPECT_LE(p, 4.0);
}

TEST_P(Seeded, CostNonNegativeAndEstimateInsideBox) {
  const oid::ModelConfig model;
  oid::VirtualDataSource source(model, oid::synthetic_truth());
  const InputArray u = random_input(12, 30.0);
  oid::DataSet data;
  data.blocks.push_back(source.acquire(u.profile(), u.initial_voltage, "u"));
  oid::LeastSquaresOptions options;
  options.max_iterations = 8;
  const auto r = oid::estimate(model, random_mu(), data, options);
  EXPECT_TRUE(oid::scaled_bounds().contains(r.mu));
  EXPECT_GE(r.cost, 0.0);
}

INSTANTIATE_TEST_SUITE_P(Draws, Seeded, ::testing::Values(1u, 2u, 3u, 4u, 5u));

}  // namespace
