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

#include <algorithm>
#include <memory>
#include <utility>

#include "exploitlab/errors.h"
#include "exploitlab/rng.h"

namespace exploitlab {
namespace {

constexpr uint64_t kLaneTag = 0x6c616e65;
constexpr uint64_t kEpisodeTag = 0x65706973;

struct Lane {
  std::unique_ptr<Game> game;
  CounterRng rng;
  JointObservation obs;
  int64_t remaining = 0;
  uint64_t episodes = 0;
  uint64_t seed = 0;
  std::array<const PolicyParams*, kNumAgents> acting{};
  std::array<double, kNumAgents> episode_return{};
  std::array<RolloutBuffer*, kNumAgents> stream{};
};

void StartEpisode(Lane& lane, const CollectRequest& request) {
  lane.obs = lane.game->Reset(DeriveSeed(lane.seed, {kEpisodeTag, lane.episodes}));
  lane.episode_return = {0.0, 0.0};
  for (int seat = 0; seat < kNumAgents; ++seat) {
    const SeatPlan& plan = request.seats[seat];
    if (plan.learner >= 0) {
      lane.acting[seat] = request.learners[plan.learner];
    } else if (plan.frozen.size() == 1) {
      lane.acting[seat] = plan.frozen.front();
    } else {
      lane.acting[seat] = plan.frozen[lane.rng.UniformInt(plan.frozen.size())];
    }
  }
}

void CheckRequest(const CollectRequest& request) {
  if (request.env == nullptr) throw UsageError("collect: no environment");
  if (request.env_steps < 0) throw UsageError("collect: negative step count");
  if (request.num_envs < 1) throw UsageError("collect: num_envs must be >= 1");
  for (int seat = 0; seat < kNumAgents; ++seat) {
    const SeatPlan& plan = request.seats[seat];
    if (plan.learner >= static_cast<int>(request.learners.size())) {
      throw UsageError("collect: learner index out of range");
    }
    if (plan.learner < 0 && plan.frozen.empty()) {
      throw UsageError("collect: frozen seat without a policy");
    }
  }
}

}  // namespace

std::optional<std::array<double, kNumAgents>> CollectResult::MeanReturns() const {
  if (episode_returns.empty()) return std::nullopt;
  std::array<double, kNumAgents> mean{};
  for (const auto& r : episode_returns) {
    for (int seat = 0; seat < kNumAgents; ++seat) mean[seat] += r[seat];
  }
  for (double& m : mean) m /= static_cast<double>(episode_returns.size());
  return mean;
}

CollectResult Collect(const CollectRequest& request) {
  CheckRequest(request);
  CollectResult result;
  result.segments.resize(request.learners.size());
  const int num_envs = static_cast<int>(
      std::min<int64_t>(request.num_envs, std::max<int64_t>(request.env_steps, 1)));

  std::vector<Lane> lanes(static_cast<std::size_t>(num_envs));
  const GameSpec spec = MakeGame(*request.env)->spec();
  for (int e = 0; e < num_envs; ++e) {
    Lane& lane = lanes[e];
    lane.game = MakeGame(*request.env);
    lane.seed = DeriveSeed(request.seed, {kLaneTag, static_cast<uint64_t>(e)});
    lane.rng = CounterRng(lane.seed);
    lane.remaining = request.env_steps / num_envs + (e < request.env_steps % num_envs ? 1 : 0);
    for (int seat = 0; seat < kNumAgents; ++seat) {
      const int learner = request.seats[seat].learner;
      if (learner < 0) continue;
      const Architecture& arch = request.learners[learner]->arch();
      if (arch.obs_dim != spec.obs_dim[seat] || arch.action_space != spec.action_space[seat]) {
        throw UsageError("collect: policy does not fit seat " + spec.agent_roles[seat]);
      }
      result.segments[learner].emplace_back(arch.obs_dim, arch.continuous_dim());
    }
  }
  // Stream pointers are taken once every vector has its final size.
  for (int e = 0; e < num_envs; ++e) {
    std::vector<int> taken(request.learners.size(), 0);
    for (int seat = 0; seat < kNumAgents; ++seat) {
      const int learner = request.seats[seat].learner;
      if (learner < 0) continue;
      int per_env = 0;
      for (int s = 0; s < kNumAgents; ++s) per_env += request.seats[s].learner == learner;
      lanes[e].stream[seat] = &result.segments[learner][e * per_env + taken[learner]++];
    }
  }
  for (Lane& lane : lanes) {
    if (lane.remaining > 0) StartEpisode(lane, request);
  }

  struct Pending {
    Action action;
    double log_prob = 0.0;
    double value = 0.0;
  };
  std::vector<std::array<Pending, kNumAgents>> pending(lanes.size());
  std::vector<std::size_t> group;
  Eigen::MatrixXd batch;

  while (true) {
    bool any = false;
    for (const Lane& lane : lanes) any = any || lane.remaining > 0;
    if (!any) break;

    // Batch every active lane that shares a policy at the same seat.
    for (int seat = 0; seat < kNumAgents; ++seat) {
      std::vector<char> done_mark(lanes.size(), 0);
      for (std::size_t first = 0; first < lanes.size(); ++first) {
        if (lanes[first].remaining <= 0 || done_mark[first]) continue;
        const PolicyParams* policy = lanes[first].acting[seat];
        group.clear();
        for (std::size_t e = first; e < lanes.size(); ++e) {
          if (lanes[e].remaining > 0 && !done_mark[e] && lanes[e].acting[seat] == policy) {
            group.push_back(e);
            done_mark[e] = 1;
          }
        }
        const int obs_dim = policy->arch().obs_dim;
        batch.resize(obs_dim, static_cast<Eigen::Index>(group.size()));
        for (std::size_t i = 0; i < group.size(); ++i) {
          const Observation& o = lanes[group[i]].obs[seat];
          if (static_cast<int>(o.size()) != obs_dim) {
            throw UsageError("collect: observation size does not match the policy");
          }
          batch.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(o.data(), obs_dim);
        }
        const ForwardCache cache = ForwardBatch(*policy, batch);
        for (std::size_t i = 0; i < group.size(); ++i) {
          Lane& lane = lanes[group[i]];
          const ActionDistribution dist =
              DistributionAt(policy->arch(), cache, static_cast<Eigen::Index>(i));
          Pending& p = pending[group[i]][seat];
          p.action = dist.Sample(lane.rng);
          p.log_prob = dist.LogProb(p.action);
          p.value = cache.value(static_cast<Eigen::Index>(i));
        }
      }
    }

    for (std::size_t e = 0; e < lanes.size(); ++e) {
      Lane& lane = lanes[e];
      if (lane.remaining <= 0) continue;
      JointAction joint;
      for (int seat = 0; seat < kNumAgents; ++seat) joint[seat] = pending[e][seat].action;
      StepResult step = lane.game->Step(joint);
      --lane.remaining;
      ++result.env_steps;
      for (int seat = 0; seat < kNumAgents; ++seat) {
        lane.episode_return[seat] += step.rewards[seat];
        if (lane.stream[seat] != nullptr) {
          lane.stream[seat]->Add(lane.obs[seat], pending[e][seat].action,
                                 pending[e][seat].log_prob, step.rewards[seat],
                                 pending[e][seat].value, step.done);
        }
      }
      lane.obs = std::move(step.observations);
      if (step.done) {
        result.episode_returns.push_back(lane.episode_return);
        ++lane.episodes;
        if (lane.remaining > 0) StartEpisode(lane, request);
      }
    }
  }

  // Bootstrap the trailing partial episode of every stream.
  for (Lane& lane : lanes) {
    for (int seat = 0; seat < kNumAgents; ++seat) {
      RolloutBuffer* stream = lane.stream[seat];
      if (stream == nullptr || stream->size() == 0 || stream->dones.back()) continue;
      stream->bootstrap_value = PolicyForward(*lane.acting[seat], lane.obs[seat]).value;
    }
  }
  return result;
}

}  // namespace exploitlab
