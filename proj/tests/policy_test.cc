// Copyright 2026 The ExploitLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "exploitlab/policy.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "exploitlab/errors.h"
#include "exploitlab/rng.h"

namespace exploitlab {
namespace {

Architecture SmallArch(ActionSpace space, int obs_dim = 3) {
  Architecture arch;
  arch.obs_dim = obs_dim;
  arch.hidden = {4, 4};
  arch.action_space = space;
  return arch;
}

Eigen::MatrixXd RandomBatch(int rows, int cols, uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.Normal();
  return m;
}

// A loss that is linear in every network output, with random coefficients,
// plus a quadratic term on the value so the tanh chain is exercised twice.
OutputLoss MixedLoss(const Architecture& arch, int batch, uint64_t seed) {
  const Eigen::MatrixXd head_w = RandomBatch(arch.head_dim(), batch, seed);
  const Eigen::MatrixXd value_w = RandomBatch(1, batch, seed + 1);
  const Eigen::VectorXd ls_w =
      RandomBatch(std::max(arch.continuous_dim(), 1), 1, seed + 2).col(0);
  return [=](const ForwardCache& cache) {
    LossAndGradients out;
    out.loss = (head_w.array() * cache.head.array()).sum() +
               (value_w.array() * cache.value.array().square()).sum();
    out.grads.head = head_w;
    out.grads.value = 2.0 * value_w.array() * cache.value.array();
    out.grads.log_std = Eigen::VectorXd::Zero(cache.log_std.size());
    if (cache.log_std.size() > 0) {
      out.loss += ls_w.head(cache.log_std.size()).dot(cache.log_std);
      out.grads.log_std = ls_w.head(cache.log_std.size());
    }
    return out;
  };
}

double LossAt(const PolicyParams& params, const Eigen::MatrixXd& obs,
              const OutputLoss& loss) {
  return loss(ForwardBatch(params, obs)).loss;
}

void CheckGradient(const ActionSpace& space) {
  const Architecture arch = SmallArch(space);
  PolicyParams params = InitPolicy(arch, 3);
  // Move the heads away from their tiny initial scale.
  CounterRng rng(11);
  for (double& v : params.values()) v += 0.3 * rng.Normal();
  ASSERT_LE(params.size(), 200u);
  const Eigen::MatrixXd obs = RandomBatch(arch.obs_dim, 5, 21);
  const OutputLoss loss = MixedLoss(arch, 5, 31);
  const GradientResult analytic = PolicyGradient(params, obs, loss);
  ASSERT_EQ(analytic.gradient.size(), params.size());
  const double h = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    PolicyParams plus = params, minus = params;
    plus.values()[i] += h;
    minus.values()[i] -= h;
    const double numeric = (LossAt(plus, obs, loss) - LossAt(minus, obs, loss)) / (2 * h);
    const double a = analytic.gradient[i];
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-5});
    EXPECT_LE(std::abs(a - numeric) / scale, 1e-4) << "parameter " << i;
  }
}

TEST(PolicyGradientTest, DiscreteMatchesFiniteDifferences) {
  CheckGradient(ActionSpace::Discrete(3));
}

TEST(PolicyGradientTest, ContinuousMatchesFiniteDifferences) {
  CheckGradient(ActionSpace::Continuous(2, -1, 1));
}

TEST(PolicyGradientTest, MixedMatchesFiniteDifferences) {
  CheckGradient(ActionSpace::Mixed(2, -1, 1, 3));
}

TEST(PolicyGradientTest, ConstantLossHasZeroGradient) {
  const Architecture arch = SmallArch(ActionSpace::Mixed(2, -1, 1, 3));
  const PolicyParams params = InitPolicy(arch, 1);
  const GradientResult r = PolicyGradient(
      params, RandomBatch(3, 4, 2), [](const ForwardCache& cache) {
        LossAndGradients out;
        out.loss = 7.0;
        out.grads.head = Eigen::MatrixXd::Zero(cache.head.rows(), cache.head.cols());
        out.grads.value = Eigen::RowVectorXd::Zero(cache.value.cols());
        out.grads.log_std = Eigen::VectorXd::Zero(cache.log_std.size());
        return out;
      });
  for (double g : r.gradient) EXPECT_EQ(g, 0.0);
}

TEST(PolicyGradientTest, ValueBiasGradientIsOne) {
  const Architecture arch = SmallArch(ActionSpace::Discrete(2));
  const PolicyParams params = InitPolicy(arch, 1);
  const GradientResult r = PolicyGradient(
      params, RandomBatch(3, 1, 2), [](const ForwardCache& cache) {
        LossAndGradients out;
        out.loss = cache.value(0);
        out.grads.head = Eigen::MatrixXd::Zero(cache.head.rows(), 1);
        out.grads.value = Eigen::RowVectorXd::Ones(1);
        out.grads.log_std = Eigen::VectorXd::Zero(0);
        return out;
      });
  EXPECT_DOUBLE_EQ(r.gradient[params.layout().value_head.bias], 1.0);
}

TEST(PolicyGradientTest, NonFiniteLossGradientThrows) {
  const Architecture arch = SmallArch(ActionSpace::Discrete(2));
  const PolicyParams params = InitPolicy(arch, 1);
  EXPECT_THROW(PolicyGradient(params, RandomBatch(3, 1, 2),
                              [](const ForwardCache& cache) {
                                LossAndGradients out;
                                out.grads.head = Eigen::MatrixXd::Constant(
                                    cache.head.rows(), 1, std::nan(""));
                                out.grads.value = Eigen::RowVectorXd::Zero(1);
                                out.grads.log_std = Eigen::VectorXd::Zero(0);
                                return out;
                              }),
               NumericalError);
}

TEST(PolicyForwardTest, ZeroParamsGiveUniformAndUnitGaussian) {
  const PolicyParams params(SmallArch(ActionSpace::Mixed(1, -1, 1, 4)));
  const std::vector<double> obs = {0.5, -1.0, 2.0};
  const PolicyOutput out = PolicyForward(params, obs);
  for (double p : out.distribution.Probabilities()) EXPECT_DOUBLE_EQ(p, 0.25);
  EXPECT_EQ(out.value, 0.0);

  const PolicyParams discrete(SmallArch(ActionSpace::Discrete(4)));
  const ActionDistribution d = PolicyForward(discrete, obs).distribution;
  EXPECT_NEAR(d.LogProb(Action::Index(2)), std::log(0.25), 1e-12);
  EXPECT_NEAR(d.Entropy(), std::log(4.0), 1e-12);

  const PolicyParams gaussian(SmallArch(ActionSpace::Continuous(1, -1, 1)));
  const ActionDistribution g = PolicyForward(gaussian, obs).distribution;
  EXPECT_NEAR(g.LogProb(Action{{0.0}, 0}), -0.5 * std::log(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(g.Entropy(), 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-12);
}

TEST(PolicyForwardTest, MixedLogProbIsSum) {
  ActionDistribution d;
  d.kind = ActionKind::kMixed;
  d.mean = {0.5, -0.5};
  d.log_std = {0.0, std::log(2.0)};
  d.logits = {1.0, 0.0};
  const Action a{{1.0, 0.5}, 1};
  const double gauss0 = -0.5 * 0.25 - 0.5 * std::log(2 * std::numbers::pi);
  const double gauss1 = -0.5 * 0.25 - std::log(2.0) - 0.5 * std::log(2 * std::numbers::pi);
  const double cat = -std::log(1.0 + std::exp(1.0));
  EXPECT_NEAR(d.LogProb(a), gauss0 + gauss1 + cat, 1e-12);
}

TEST(PolicyForwardTest, SamplesFollowTheDistribution) {
  ActionDistribution d;
  d.kind = ActionKind::kMixed;
  d.logits = {1.0, 0.0, -1.0};
  d.mean = {0.3};
  d.log_std = {std::log(0.5)};
  const std::vector<double> p = d.Probabilities();
  CounterRng rng(2024);
  const int n = 100000;
  std::vector<int> counts(3, 0);
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Action a = d.Sample(rng);
    ++counts[a.discrete];
    sum += a.continuous[0];
    sum_sq += a.continuous[0] * a.continuous[0];
  }
  for (int k = 0; k < 3; ++k) {
    const double sigma = std::sqrt(n * p[k] * (1 - p[k]));
    EXPECT_NEAR(counts[k], n * p[k], 3 * sigma) << "category " << k;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.3, 3 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sum_sq / n - mean * mean), 0.5, 0.01);
  EXPECT_EQ(d.Mode().discrete, 0);
  EXPECT_EQ(d.Mode().continuous[0], 0.3);
}

TEST(PolicyForwardTest, EntropyIsMaximalWhenUniform) {
  CounterRng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    ActionDistribution d;
    d.logits.resize(5);
    for (double& l : d.logits) l = 2.0 * rng.Normal();
    EXPECT_LE(d.Entropy(), std::log(5.0) + 1e-12);
  }
}

TEST(PolicyForwardTest, BatchMatchesSingle) {
  const Architecture arch = SmallArch(ActionSpace::Mixed(2, -1, 1, 3));
  const PolicyParams params = InitPolicy(arch, 9);
  const Eigen::MatrixXd obs = RandomBatch(3, 4, 5);
  const ForwardCache cache = ForwardBatch(params, obs);
  for (int i = 0; i < 4; ++i) {
    const std::vector<double> column(obs.col(i).data(), obs.col(i).data() + 3);
    const PolicyOutput single = PolicyForward(params, column);
    EXPECT_NEAR(single.value, cache.value(i), 1e-12);
    const ActionDistribution batched = DistributionAt(arch, cache, i);
    for (int k = 0; k < 3; ++k)
      EXPECT_NEAR(single.distribution.logits[k], batched.logits[k], 1e-12);
  }
}

TEST(PolicyForwardTest, DimensionMismatchThrows) {
  const PolicyParams params = InitPolicy(SmallArch(ActionSpace::Discrete(2)), 0);
  EXPECT_THROW(PolicyForward(params, std::vector<double>{1.0, 2.0}), UsageError);
  EXPECT_THROW(ForwardBatch(params, Eigen::MatrixXd::Zero(4, 2)), UsageError);
  const ActionDistribution d = PolicyForward(params, std::vector<double>{1, 2, 3}).distribution;
  EXPECT_THROW(d.LogProb(Action::Index(2)), UsageError);
}

TEST(PolicyInitTest, OrthogonalAndSeeded) {
  const Architecture arch = SmallArch(ActionSpace::Discrete(3), 4);
  const PolicyParams a = InitPolicy(arch, 5), b = InitPolicy(arch, 5), c = InitPolicy(arch, 6);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.Hash(), b.Hash());
  EXPECT_NE(a.Hash(), c.Hash());
  // Square trunk layer: W^T W = 2 I.
  const Eigen::MatrixXd w = a.Weight(a.layout().trunk[1]);
  EXPECT_TRUE((w.transpose() * w).isApprox(2.0 * Eigen::MatrixXd::Identity(4, 4), 1e-10));
  for (double v : a.Bias(a.layout().trunk[0])) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(a.size(), ComputeLayout(arch).total);
  EXPECT_EQ(nlohmann::json(arch).get<Architecture>(), arch);
}

TEST(PolicyForwardTest, LogStdIsClamped) {
  const Architecture arch = SmallArch(ActionSpace::Continuous(1, -1, 1));
  PolicyParams params(arch);
  params.values()[params.layout().log_std] = 10.0;
  const ActionDistribution d = PolicyForward(params, std::vector<double>{0, 0, 0}).distribution;
  EXPECT_EQ(d.log_std[0], kLogStdMax);
}

}  // namespace
}  // namespace exploitlab
