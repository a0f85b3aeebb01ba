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

#include "exploitlab/ppo.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "exploitlab/errors.h"
#include "oracles.h"

namespace exploitlab {
namespace {

using testing::GaeDoubleSum;
using testing::RandomBuffer;
using testing::RewardToGo;

RolloutBuffer FromRewards(std::vector<double> rewards, std::vector<double> values,
                          std::vector<uint8_t> dones, double bootstrap) {
  RolloutBuffer buffer(1, 0);
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    const double obs = 0.0;
    buffer.Add(std::span<const double>(&obs, 1), Action::Index(0), 0.0, rewards[t],
               values[t], dones[t] != 0);
  }
  buffer.bootstrap_value = bootstrap;
  return buffer;
}

TEST(GaeTest, HandExample) {
  const GaeResult r = ComputeGae(FromRewards({1, 1}, {0, 0}, {0, 1}, 0.0), 1.0, 1.0);
  EXPECT_EQ(r.advantages, (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(r.targets, (std::vector<double>{2.0, 1.0}));
  // Same answer without a done when the bootstrap is zero.
  EXPECT_EQ(ComputeGae(FromRewards({1, 1}, {0, 0}, {0, 0}, 0.0), 1.0, 1.0).advantages,
            (std::vector<double>{2.0, 1.0}));
}

TEST(GaeTest, ZeroLambdaIsOneStepError) {
  CounterRng rng(1);
  const RolloutBuffer buffer = RandomBuffer(rng, 20, 0.2);
  const GaeResult r = ComputeGae(buffer, 0.9, 0.0);
  for (std::size_t t = 0; t < buffer.size(); ++t) {
    const double next = t + 1 < buffer.size() ? buffer.values[t + 1] : buffer.bootstrap_value;
    const double delta =
        buffer.rewards[t] + 0.9 * next * (buffer.dones[t] ? 0 : 1) - buffer.values[t];
    EXPECT_NEAR(r.advantages[t], delta, 1e-12);
  }
}

TEST(GaeTest, UndiscountedTargetsAreRewardToGo) {
  CounterRng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const RolloutBuffer buffer = RandomBuffer(rng, 1 + rng.UniformInt(64), 0.1);
    const GaeResult r = ComputeGae(buffer, 1.0, 1.0);
    const std::vector<double> oracle = RewardToGo(buffer, 1.0);
    for (std::size_t t = 0; t < buffer.size(); ++t) EXPECT_NEAR(r.targets[t], oracle[t], 1e-6);
  }
}

TEST(GaeTest, MatchesDoubleSumOnRandomBuffers) {
  CounterRng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const RolloutBuffer buffer = RandomBuffer(rng, 1 + rng.UniformInt(64), 0.15);
    const double gamma = rng.Uniform(0.5, 1.0), lambda = rng.Uniform(0.0, 1.0);
    const GaeResult r = ComputeGae(buffer, gamma, lambda);
    const std::vector<double> oracle = GaeDoubleSum(buffer, gamma, lambda);
    for (std::size_t t = 0; t < buffer.size(); ++t) {
      ASSERT_NEAR(r.advantages[t], oracle[t], 1e-8);
      ASSERT_NEAR(r.targets[t], oracle[t] + buffer.values[t], 1e-8);
    }
  }
}

TEST(ClippedSurrogateTest, Examples) {
  EXPECT_DOUBLE_EQ(ClippedSurrogate(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(ClippedSurrogate(0.5, -1.0, 0.2), -0.8);
  for (double a : {-3.0, 0.0, 0.7}) EXPECT_DOUBLE_EQ(ClippedSurrogate(1.0, a, 0.2), a);
  EXPECT_DOUBLE_EQ(ClippedSurrogate(0.5, 1.0, 0.2), 0.5);
}

TEST(NormalizeAdvantagesTest, Moments) {
  CounterRng rng(4);
  std::vector<double> adv(257);
  for (double& a : adv) a = 3.0 + 5.0 * rng.Normal();
  NormalizeAdvantages(adv);
  double mean = 0.0, sq = 0.0;
  for (double a : adv) mean += a;
  mean /= adv.size();
  for (double a : adv) sq += (a - mean) * (a - mean);
  EXPECT_LT(std::abs(mean), 1e-6);
  EXPECT_NEAR(std::sqrt(sq / adv.size()), 1.0, 1e-6);
}

TEST(NormalizeAdvantagesTest, ConstantAdvantagesBecomeZero) {
  std::vector<double> adv(10, 2.5);
  NormalizeAdvantages(adv);
  for (double a : adv) EXPECT_EQ(a, 0.0);
}

TEST(AdamTest, MatchesReferenceRecurrence) {
  std::vector<double> params = {1.0, -2.0};
  AdamState state;
  double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -2.0};
  for (int t = 1; t <= 5; ++t) {
    const std::vector<double> grad = {0.1 * t, -0.3};
    AdamStep(params, grad, state, 0.01);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * grad[i];
      v[i] = 0.999 * v[i] + 0.001 * grad[i] * grad[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(params[i], ref[i], 1e-12);
    }
  }
  EXPECT_EQ(state.step, 5);
}

TEST(ClipGradNormTest, ScalesOnlyWhenAbove) {
  std::vector<double> g = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(ClipGradNorm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-12);
  EXPECT_NEAR(g[1], 0.8, 1e-12);
  std::vector<double> small = {0.1, 0.1};
  ClipGradNorm(small, 1.0);
  EXPECT_EQ(small[0], 0.1);
}

TEST(PpoLossTest, GradientMatchesFiniteDifferences) {
  for (uint64_t seed = 0; seed < 12; ++seed) {
    const testing::PpoGradientCase c = testing::RandomPpoCase(seed);
    ASSERT_LE(c.params.size(), 200u);
    const testing::GradientCheck check = testing::CheckPpoGradient(c);
    EXPECT_EQ(check.failures, 0u) << "seed " << seed << " worst " << check.worst;
  }
}

TEST(PpoLossTest, ZeroAdvantagesLeavePolicyLossFlat) {
  testing::PpoGradientCase c = testing::RandomPpoCase(0);
  for (double& a : c.batch.advantages) a = 0.0;
  c.config.entropy_coef = 0.0;
  c.config.value_coef = 0.0;
  const GradientResult r = PolicyGradient(
      c.params, c.batch.observations,
      [&](const ForwardCache& cache) { return PpoOutputLoss(c.params.arch(), cache, c.batch, c.config); });
  for (double g : r.gradient) EXPECT_NEAR(g, 0.0, 1e-12);
}

std::vector<RolloutBuffer> BanditSegments(const PolicyParams& params, uint64_t seed) {
  CounterRng rng(seed);
  const std::vector<double> obs = {1.0};
  const PolicyOutput out = PolicyForward(params, obs);
  std::vector<RolloutBuffer> segments(2, RolloutBuffer(1, 0));
  for (RolloutBuffer& segment : segments) {
    for (int t = 0; t < 64; ++t) {
      const Action a = out.distribution.Sample(rng);
      segment.Add(obs, a, out.distribution.LogProb(a), a.discrete == 0 ? 1.0 : 0.0,
                  out.value, t % 8 == 7);
    }
  }
  return segments;
}

Architecture BanditArch() {
  Architecture arch;
  arch.obs_dim = 1;
  arch.hidden = {8};
  arch.action_space = ActionSpace::Discrete(2);
  return arch;
}

TEST(PpoUpdateTest, DeterministicGivenSeed) {
  const PolicyParams start = InitPolicy(BanditArch(), 1);
  const std::vector<RolloutBuffer> segments = BanditSegments(start, 2);
  PolicyParams a = start, b = start, c = start;
  AdamState sa, sb, sc;
  PpoConfig config;
  const UpdateStats ra = PpoUpdate(a, sa, segments, config, 77);
  PpoUpdate(b, sb, segments, config, 77);
  PpoUpdate(c, sc, segments, config, 78);
  EXPECT_EQ(a, b);
  EXPECT_EQ(sa, sb);
  EXPECT_NE(a, c);
  EXPECT_EQ(ra.samples, 128u);
  EXPECT_EQ(ra.minibatch_steps, config.epochs * config.minibatches);
  EXPECT_GE(ra.clip_fraction, 0.0);
  EXPECT_LE(ra.clip_fraction, 1.0);
  EXPECT_FALSE(ra.aborted);
}

TEST(PpoUpdateTest, ClipFractionStaysInRange) {
  PolicyParams params = InitPolicy(BanditArch(), 3);
  AdamState adam;
  PpoConfig config;
  config.learning_rate = 0.05;
  for (int u = 0; u < 5; ++u) {
    const UpdateStats s = PpoUpdate(params, adam, BanditSegments(params, u), config, u);
    EXPECT_GE(s.clip_fraction, 0.0);
    EXPECT_LE(s.clip_fraction, 1.0);
    EXPECT_GE(s.approx_kl, -1e-12);
  }
}

TEST(PpoUpdateTest, KlEarlyStop) {
  PolicyParams params = InitPolicy(BanditArch(), 3);
  AdamState adam;
  PpoConfig config;
  config.learning_rate = 0.5;
  config.target_kl = 1e-9;
  const UpdateStats s = PpoUpdate(params, adam, BanditSegments(params, 4), config, 1);
  EXPECT_TRUE(s.early_stopped);
  EXPECT_LT(s.minibatch_steps, config.epochs * config.minibatches);
}

TEST(PpoUpdateTest, BanditImprovesMonotonically) {
  const std::vector<double> history = testing::RunBandit(0);
  for (std::size_t i = 1; i < history.size(); ++i) EXPECT_GT(history[i], history[i - 1]);
  EXPECT_GT(history.back(), 0.9);
}

TEST(PpoUpdateTest, NonFiniteRewardAbortsAndKeepsParams) {
  const PolicyParams start = InitPolicy(BanditArch(), 1);
  std::vector<RolloutBuffer> segments = BanditSegments(start, 2);
  segments[0].rewards[3] = std::numeric_limits<double>::quiet_NaN();
  PolicyParams params = start;
  AdamState adam;
  const UpdateStats s = PpoUpdate(params, adam, segments, PpoConfig{}, 1);
  EXPECT_TRUE(s.aborted);
  EXPECT_FALSE(s.diagnostics.empty());
  EXPECT_EQ(params, start);
  EXPECT_EQ(adam, AdamState{});
}

TEST(PpoUpdateTest, RejectsMismatchedBuffers) {
  PolicyParams params = InitPolicy(BanditArch(), 1);
  AdamState adam;
  std::vector<RolloutBuffer> segments = {RolloutBuffer(2, 0)};
  const std::vector<double> obs = {0.0, 0.0};
  segments[0].Add(obs, Action::Index(0), 0.0, 0.0, 0.0, true);
  EXPECT_THROW(PpoUpdate(params, adam, segments, PpoConfig{}, 0), UsageError);
  RolloutBuffer bad(1, 0);
  bad.log_probs.push_back(0.0);
  EXPECT_THROW(bad.Validate(), UsageError);
}

TEST(PpoConfigTest, ValidationAndJson) {
  PpoConfig config;
  config.target_kl = 0.05;
  EXPECT_EQ(nlohmann::json(config).get<PpoConfig>(), config);
  PpoConfig bad;
  bad.clip = 0.0;
  EXPECT_THROW(Validate(bad), ConfigError);
  bad = PpoConfig{};
  bad.gamma = 1.5;
  EXPECT_THROW(Validate(bad), ConfigError);
  bad = PpoConfig{};
  bad.gae_lambda = 0.0;
  EXPECT_THROW(Validate(bad), ConfigError);
}

}  // namespace
}  // namespace exploitlab
