#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oid/design.hpp"
#include "oid/error.hpp"
#include "oid/estimation.hpp"
#include "oid/information.hpp"

namespace {

using oid::DataSet;
using oid::ModelConfig;
using oid::ParameterVector;

DataSet virtual_data(const std::vector<oid::InputArray>& inputs) {
  const ModelConfig config;
  oid::VirtualDataSource source(config, oid::synthetic_truth());
  DataSet data;
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    data.blocks.push_back(source.acquire(inputs[n].profile(), inputs[n].initial_voltage,
                                         "input_" + std::to_string(n + 1)));
  }
  return data;
}

DataSet alternating_data() { return virtual_data({oid::alternating_input(24, 3.7, 60.0)}); }

std::vector<oid::InputArray> ten_inputs() {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> amp(-3.0, 3.0);
  std::vector<oid::InputArray> inputs;
  for (int n = 0; n < 10; ++n) {
    oid::InputArray u = oid::alternating_input(24, 3.6 + 0.03 * n, 60.0);
    for (double& a : u.amplitudes) a = amp(rng);
    inputs.push_back(u);
  }
  return inputs;
}

TEST(Residuals, ZeroAtTheTruth) {
  const ModelConfig config;
  const DataSet data = alternating_data();
  const Eigen::VectorXd r = oid::residuals(config, oid::synthetic_truth(), data);
  ASSERT_EQ(r.size(), 601);
  EXPECT_EQ(r.norm(), 0.0);
}

TEST(Residuals, UniformRelativeOffset) {
  const ModelConfig config;
  DataSet data = alternating_data();
  for (double& w : data.blocks[0].voltage) w /= 1.01;
  const Eigen::VectorXd r = oid::residuals(config, oid::synthetic_truth(), data);
  for (Eigen::Index k = 0; k < r.size(); ++k) EXPECT_NEAR(r[k], 0.01, 1e-13);
}

TEST(Residuals, NonPositiveVoltageNamesTheSample) {
  const ModelConfig config;
  DataSet data = alternating_data();
  data.blocks[0].voltage[42] = 0.0;
  try {
    oid::residuals(config, oid::synthetic_truth(), data);
    FAIL() << "expected a data error";
  } catch (const oid::Error& e) {
    EXPECT_EQ(e.code(), oid::ErrorCode::kData);
    EXPECT_NE(std::string(e.what()).find("sample 42"), std::string::npos);
  }
}

TEST(Residuals, StackedLengthForTenInputs) {
  const ModelConfig config;
  const DataSet data = virtual_data(ten_inputs());
  EXPECT_EQ(data.size(), 6010u);
  EXPECT_EQ(oid::residuals(config, oid::default_initial_guess(), data).size(), 6010);
}

TEST(Residuals, StackingIsAdditiveInCost) {
  const ModelConfig config;
  const auto inputs = ten_inputs();
  const DataSet a = virtual_data({inputs[0]});
  const DataSet b = virtual_data({inputs[1], inputs[2]});
  DataSet both = a;
  both.blocks.insert(both.blocks.end(), b.blocks.begin(), b.blocks.end());
  const ParameterVector mu = oid::default_initial_guess();
  const double ja = oid::residuals(config, mu, a).squaredNorm();
  const double jb = oid::residuals(config, mu, b).squaredNorm();
  EXPECT_NEAR(oid::residuals(config, mu, both).squaredNorm(), ja + jb, 1e-14 * (ja + jb));
}

TEST(Residuals, TimesOffTheGridInterpolate) {
  const ModelConfig config;
  DataSet data = alternating_data();
  oid::DataBlock& b = data.blocks[0];
  // Shifting the clock and the origin together leaves the residual unchanged.
  for (double& t : b.time) t += 1000.0;
  b.time_origin = 1000.0;
  EXPECT_LT(oid::residuals(config, oid::synthetic_truth(), data).norm(), 1e-12);
}

TEST(InterpolateUniform, NodesAndMidpoints) {
  const std::vector<double> v = {1.0, 3.0, 2.0};
  EXPECT_EQ(oid::interpolate_uniform(v, 0.1, 0.1), 3.0);
  EXPECT_EQ(oid::interpolate_uniform(v, 0.1, 0.1 + 1e-12), 3.0);
  EXPECT_NEAR(oid::interpolate_uniform(v, 0.1, 0.05), 2.0, 1e-12);
  EXPECT_NEAR(oid::interpolate_uniform(v, 0.1, 0.15), 2.5, 1e-12);
}

TEST(RelativeError, Definition) {
  const ParameterVector truth = oid::synthetic_truth();
  ParameterVector mu = truth;
  mu[0] += 0.1;
  EXPECT_NEAR(oid::relative_parameter_error(mu, truth), 0.1 / truth.norm(), 1e-15);
  EXPECT_EQ(oid::relative_parameter_error(truth, truth), 0.0);
}

TEST(Estimate, FixedPointAtTheTruth) {
  const ModelConfig config;
  const oid::EstimationResult r =
      oid::estimate(config, oid::synthetic_truth(), alternating_data());
  EXPECT_EQ(r.cost, 0.0);
  EXPECT_EQ(r.mu, oid::synthetic_truth());
  EXPECT_TRUE(r.converged);
}

TEST(Estimate, RecoversLinearResistanceParameter) {
  const ModelConfig config;
  ParameterVector start = oid::synthetic_truth();
  start[3] += 0.01;
  const oid::EstimationResult r = oid::estimate(config, start, alternating_data());
  EXPECT_NEAR(r.mu[3], oid::synthetic_truth()[3], 1e-6);
  EXPECT_TRUE(oid::scaled_bounds().contains(r.mu));
}

TEST(Estimate, FailuresNeverEscape) {
  ModelConfig config;
  DataSet data = alternating_data();
  data.blocks[0].voltage[0] = -1.0;
  const oid::EstimationResult r = oid::estimate(config, oid::synthetic_truth(), data);
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(std::isinf(r.cost));
}

TEST(Conditioning, DiagonalSeam) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
  h(0, 0) = 4.0;
  h(1, 1) = 1.0;
  const oid::Conditioning c = oid::conditioning_of(h);
  EXPECT_DOUBLE_EQ(c.beta, 4.0);
  EXPECT_FALSE(c.singular);
  EXPECT_EQ(c.eigenvalues[0], 4.0);
  EXPECT_EQ(c.eigenvalues[1], 1.0);
}

TEST(Conditioning, SingularFlag) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
  h(0, 0) = 1.0;
  const oid::Conditioning c = oid::conditioning_of(h);
  EXPECT_TRUE(c.singular);
  EXPECT_TRUE(std::isinf(c.beta));
}

TEST(Conditioning, InvariantUnderRowPermutation) {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd g = Eigen::MatrixXd::Random(40, 9);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(40);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 40, rng);
  const Eigen::MatrixXd gp = perm * g;
  EXPECT_NEAR(oid::conditioning_of(g.transpose() * g).beta,
              oid::conditioning_of(gp.transpose() * gp).beta, 1e-9);
}

TEST(GaussNewton, MatchesScaledSensitivities) {
  const ModelConfig config;
  const oid::InputArray u = oid::alternating_input(24, 3.7, 60.0);
  const DataSet data = virtual_data({u});
  const ParameterVector mu = oid::synthetic_truth();
  const double h = 1e-6;
  const Eigen::MatrixXd hess = oid::gauss_newton_hessian(config, mu, data, h);
  const oid::SensitivityBundle s = oid::sensitivities(config, mu, u, h);
  Eigen::MatrixXd g = s.columns;
  for (Eigen::Index k = 0; k < g.rows(); ++k) {
    g.row(k) /= data.blocks[0].voltage[static_cast<std::size_t>(k)];
  }
  const Eigen::MatrixXd expected = g.transpose() * g;
  EXPECT_LT((hess - expected).norm(), 1e-6 * expected.norm());
  EXPECT_LT((hess - hess.transpose()).norm(), 1e-12 * hess.norm());
}

TEST(Study, StartsInsideBoxAndIndependentOfOrder) {
  const auto& box = oid::scaled_bounds();
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(box.contains(oid::study_start(3, i)));
  EXPECT_EQ(oid::study_start(3, 17), oid::study_start(3, 17));
  EXPECT_NE(oid::study_start(3, 17), oid::study_start(4, 17));
}

TEST(Study, DeterministicTable) {
  const ModelConfig config;
  const DataSet data = alternating_data();
  oid::StudyOptions options;
  options.runs = 3;
  options.seed = 9;
  options.solver.max_iterations = 15;
  const oid::StudyTable a = oid::restart_study(config, data, options);
  const oid::StudyTable b = oid::restart_study(config, data, options);
  ASSERT_EQ(a.runs.size(), 3u);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].result.mu, b.runs[i].result.mu);
    EXPECT_EQ(a.runs[i].result.cost, b.runs[i].result.cost);
    EXPECT_TRUE(oid::scaled_bounds().contains(a.runs[i].result.mu));
  }
  ASSERT_EQ(a.histograms.size(), 9u);
  int total = 0;
  for (int c : a.histograms[0].counts) total += c;
  EXPECT_EQ(total, 3);
  EXPECT_EQ(a.histograms[0].edges.size(), 21u);
}

TEST(Study, ProposalPicksLargestCluster) {
  oid::StudyTable table;
  const ParameterVector truth = oid::synthetic_truth();
  ParameterVector other = truth;
  other[0] = 0.3;
  const ParameterVector points[] = {truth, other, truth, other, truth};
  for (int i = 0; i < 5; ++i) {
    oid::StudyRun run;
    run.index = i;
    run.result.mu = points[i];
    run.result.converged = true;
    run.result.cost = i;
    table.runs.push_back(run);
  }
  EXPECT_LT((oid::propose_optimum(table) - truth).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(table.success_fraction(truth, 1e-2), 0.6);
}

TEST(Study, ProposalPrefersConvergedRuns) {
  oid::StudyTable table;
  ParameterVector a = oid::synthetic_truth();
  ParameterVector b = a;
  b[2] = 0.2;
  for (int i = 0; i < 3; ++i) {
    oid::StudyRun run;
    run.result.mu = i < 2 ? b : a;
    run.result.converged = i == 2;
    table.runs.push_back(run);
  }
  EXPECT_EQ(oid::propose_optimum(table), a);
}

}  // namespace
