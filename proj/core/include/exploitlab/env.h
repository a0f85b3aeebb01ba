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

#ifndef EXPLOITLAB_ENV_H_
#define EXPLOITLAB_ENV_H_

#include <memory>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "exploitlab/game.h"
#include "exploitlab/lasertag.h"
#include "exploitlab/simple_push.h"

namespace exploitlab {

using EnvConfig = std::variant<lasertag::LaserTagConfig, push::PushConfig>;

// "lasertag" or "simplepush".
std::string EnvName(const EnvConfig& config);
bool IsSymmetric(const EnvConfig& config);
EnvConfig DefaultEnvConfig(const std::string& name);

nlohmann::json EnvConfigToJson(const EnvConfig& config);
// Throws ConfigError("env.name") for unknown environments.
EnvConfig EnvConfigFromJson(const nlohmann::json& j);
void ValidateEnvConfig(const EnvConfig& config);

std::unique_ptr<Game> MakeGame(const EnvConfig& config);

// Plays one episode and returns it; `policy(seat, observation, rng)` picks
// each seat's action.
template <typename PolicyFn>
Trajectory RecordEpisode(const EnvConfig& config, uint64_t seed,
                         PolicyFn&& policy, CounterRng& rng) {
  auto game = MakeGame(config);
  Trajectory trajectory;
  trajectory.seed = seed;
  trajectory.env_config = EnvConfigToJson(config);
  JointObservation obs = game->Reset(seed);
  while (!game->done()) {
    TrajectoryStep step;
    step.observations = obs;
    for (int seat = 0; seat < kNumAgents; ++seat) {
      step.actions[seat] = policy(seat, obs[seat], rng);
    }
    StepResult result = game->Step(step.actions);
    step.rewards = result.rewards;
    step.done = result.done;
    obs = std::move(result.observations);
    trajectory.steps.push_back(std::move(step));
  }
  return trajectory;
}

// Uniformly random valid action (continuous components uniform in bounds).
Action RandomAction(const ActionSpace& space, CounterRng& rng);

}  // namespace exploitlab

#endif  // EXPLOITLAB_ENV_H_
