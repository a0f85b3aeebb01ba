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

#include "exploitlab/rollout.h"

#include <gtest/gtest.h>

#include "exploitlab/errors.h"

namespace exploitlab {
namespace {

Architecture ArchFor(const EnvConfig& env, int seat) {
  const std::unique_ptr<Game> game = MakeGame(env);
  Architecture arch;
  arch.obs_dim = game->spec().obs_dim[seat];
  arch.hidden = {8};
  arch.action_space = game->spec().action_space[seat];
  return arch;
}

std::size_t TotalSteps(const std::vector<RolloutBuffer>& segments) {
  std::size_t n = 0;
  for (const RolloutBuffer& s : segments) n += s.size();
  return n;
}

TEST(CollectTest, SharedLearnerRecordsBothSeats) {
  lasertag::LaserTagConfig tag;
  tag.max_episode_steps = 100;
  const EnvConfig env = tag;
  const PolicyParams policy = InitPolicy(ArchFor(env, 0), 1);
  CollectRequest request;
  request.env = &env;
  request.env_steps = 700;
  request.num_envs = 3;
  request.seed = 5;
  request.learners = {&policy};
  request.seats[0].learner = 0;
  request.seats[1].learner = 0;
  const CollectResult r = Collect(request);
  EXPECT_EQ(r.env_steps, 700);
  ASSERT_EQ(r.segments.size(), 1u);
  EXPECT_EQ(r.segments[0].size(), 6u);
  EXPECT_EQ(TotalSteps(r.segments[0]), 1400u);
  // 700 steps over 3 lanes of 233 or 234: two finished 100-step episodes each.
  EXPECT_EQ(r.episode_returns.size(), 6u);
  for (const auto& ret : r.episode_returns) EXPECT_EQ(ret[0] + ret[1], 0.0);
}

TEST(CollectTest, DeterministicGivenRequest) {
  const EnvConfig env = DefaultEnvConfig("simplepush");
  const PolicyParams a = InitPolicy(ArchFor(env, 0), 1);
  const PolicyParams b = InitPolicy(ArchFor(env, 1), 2);
  CollectRequest request;
  request.env = &env;
  request.env_steps = 200;
  request.num_envs = 4;
  request.seed = 9;
  request.learners = {&a, &b};
  request.seats[0].learner = 0;
  request.seats[1].learner = 1;
  const CollectResult r1 = Collect(request), r2 = Collect(request);
  for (int k = 0; k < 2; ++k) {
    ASSERT_EQ(r1.segments[k].size(), r2.segments[k].size());
    for (std::size_t i = 0; i < r1.segments[k].size(); ++i) {
      EXPECT_EQ(r1.segments[k][i].observations, r2.segments[k][i].observations);
      EXPECT_EQ(r1.segments[k][i].log_probs, r2.segments[k][i].log_probs);
      EXPECT_EQ(r1.segments[k][i].rewards, r2.segments[k][i].rewards);
    }
  }
  request.seed = 10;
  EXPECT_NE(Collect(request).segments[0][0].observations, r1.segments[0][0].observations);
}

TEST(CollectTest, StoredLogProbsMatchPolicy) {
  const EnvConfig env = DefaultEnvConfig("simplepush");
  const PolicyParams a = InitPolicy(ArchFor(env, 0), 3);
  const PolicyParams frozen = InitPolicy(ArchFor(env, 1), 4);
  CollectRequest request;
  request.env = &env;
  request.env_steps = 100;
  request.num_envs = 2;
  request.learners = {&a};
  request.seats[0].learner = 0;
  request.seats[1].frozen = {&frozen};
  const CollectResult r = Collect(request);
  ASSERT_EQ(r.segments[0].size(), 2u);
  for (const RolloutBuffer& s : r.segments[0]) {
    ASSERT_EQ(s.size(), 50u);
    // 50 steps = two full episodes, so nothing to bootstrap.
    EXPECT_EQ(s.dones.back(), 1);
    EXPECT_EQ(s.bootstrap_value, 0.0);
    for (std::size_t t = 0; t < s.size(); ++t) {
      const std::span<const double> obs(s.observations.data() + t * s.obs_dim, s.obs_dim);
      const PolicyOutput out = PolicyForward(a, obs);
      EXPECT_NEAR(out.distribution.LogProb(s.ActionAt(t)), s.log_probs[t], 1e-12);
      EXPECT_NEAR(out.value, s.values[t], 1e-12);
    }
  }
  EXPECT_EQ(r.episode_returns.size(), 4u);
  ASSERT_TRUE(r.MeanReturns().has_value());
}

TEST(CollectTest, PartialEpisodeIsBootstrapped) {
  const EnvConfig env = DefaultEnvConfig("simplepush");
  const PolicyParams a = InitPolicy(ArchFor(env, 0), 3);
  CollectRequest request;
  request.env = &env;
  request.env_steps = 30;
  request.num_envs = 1;
  request.learners = {&a};
  request.seats[0].learner = 0;
  request.seats[1].frozen = {&a};
  const CollectResult r = Collect(request);
  const RolloutBuffer& s = r.segments[0][0];
  ASSERT_EQ(s.size(), 30u);
  EXPECT_EQ(s.dones[24], 1);
  EXPECT_EQ(s.dones.back(), 0);
  EXPECT_NE(s.bootstrap_value, 0.0);
  EXPECT_EQ(r.episode_returns.size(), 1u);
}

TEST(CollectTest, UnevenSplitCoversAllSteps) {
  const EnvConfig env = DefaultEnvConfig("simplepush");
  const PolicyParams a = InitPolicy(ArchFor(env, 0), 3);
  CollectRequest request;
  request.env = &env;
  request.env_steps = 101;
  request.num_envs = 4;
  request.learners = {&a};
  request.seats[0].learner = 0;
  request.seats[1].frozen = {&a};
  const CollectResult r = Collect(request);
  EXPECT_EQ(r.env_steps, 101);
  EXPECT_EQ(TotalSteps(r.segments[0]), 101u);
}

TEST(CollectTest, FrozenPoolIsSampledPerEpisode) {
  const EnvConfig env = DefaultEnvConfig("simplepush");
  const PolicyParams a = InitPolicy(ArchFor(env, 0), 3);
  // Two frozen defenders that always push in opposite directions.
  PolicyParams left(ArchFor(env, 1)), right(ArchFor(env, 1));
  const DenseLayout& head = left.layout().policy_head;
  left.Bias(head)(0) = -1.0;
  right.Bias(head)(0) = 1.0;
  left.values()[left.layout().log_std] = kLogStdMin;
  right.values()[right.layout().log_std] = kLogStdMin;
  CollectRequest request;
  request.env = &env;
  request.env_steps = 25 * 40;
  request.num_envs = 1;
  request.learners = {&a};
  request.seats[0].learner = 0;
  request.seats[1].frozen = {&left, &right};
  const CollectResult r = Collect(request);
  // The aggressor observes the defender's relative position; its drift sign
  // shows which frozen policy played each episode.
  const RolloutBuffer& s = r.segments[0][0];
  int went_left = 0, went_right = 0;
  for (int e = 0; e < 40; ++e) {
    const std::size_t first = e * 25, last = first + 24;
    const double dx = s.observations[last * s.obs_dim + 8] - s.observations[first * s.obs_dim + 8];
    const double ax = s.observations[last * s.obs_dim + 2] - s.observations[first * s.obs_dim + 2];
    (dx + ax < 0 ? went_left : went_right) += 1;
  }
  EXPECT_GT(went_left, 5);
  EXPECT_GT(went_right, 5);
}

TEST(CollectTest, RejectsBadRequests) {
  const EnvConfig env = DefaultEnvConfig("simplepush");
  const PolicyParams wrong = InitPolicy(ArchFor(DefaultEnvConfig("lasertag"), 0), 1);
  const PolicyParams a = InitPolicy(ArchFor(env, 0), 1);
  CollectRequest request;
  request.env = &env;
  request.env_steps = 10;
  request.learners = {&wrong};
  request.seats[0].learner = 0;
  request.seats[1].frozen = {&a};
  EXPECT_THROW(Collect(request), UsageError);
  request.learners = {&a};
  request.seats[1].frozen.clear();
  EXPECT_THROW(Collect(request), UsageError);
}

}  // namespace
}  // namespace exploitlab
