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

#ifndef EXPLOITLAB_ROLLOUT_H_
#define EXPLOITLAB_ROLLOUT_H_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "exploitlab/env.h"
#include "exploitlab/policy.h"
#include "exploitlab/ppo.h"

namespace exploitlab {

// Who acts at one seat during a collection.
struct SeatPlan {
  // Index into CollectRequest::learners when this seat's transitions are
  // recorded; -1 for a frozen seat.
  int learner = -1;
  // Frozen candidates, one drawn uniformly at the start of every episode.
  std::vector<const PolicyParams*> frozen;
};

struct CollectRequest {
  const EnvConfig* env = nullptr;
  int64_t env_steps = 0;
  int num_envs = 1;
  uint64_t seed = 0;
  std::vector<const PolicyParams*> learners;
  std::array<SeatPlan, kNumAgents> seats;
};

struct CollectResult {
  // segments[k] holds one buffer per (env instance, seat) stream of learner
  // k, ordered by env instance then seat.
  std::vector<std::vector<RolloutBuffer>> segments;
  // Undiscounted returns of episodes that finished during the collection.
  std::vector<std::array<double, kNumAgents>> episode_returns;
  int64_t env_steps = 0;

  // Mean return per seat over finished episodes; empty when none finished.
  std::optional<std::array<double, kNumAgents>> MeanReturns() const;
};

// Steps `num_envs` environment instances in lock-step, batching policy
// evaluation across instances. Every rollout starts from fresh episodes and
// the final partial episode of each stream is bootstrapped with the
// learner's value estimate. Each instance draws from its own derived
// random stream, so the result depends only on the request.
CollectResult Collect(const CollectRequest& request);

}  // namespace exploitlab

#endif  // EXPLOITLAB_ROLLOUT_H_
