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

#ifndef EXPLOITLAB_GAME_H_
#define EXPLOITLAB_GAME_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace exploitlab {

inline constexpr int kNumAgents = 2;

enum class ActionKind { kDiscrete, kContinuous, kMixed };

// discrete(k) | continuous(d, [low, high]) | mixed(continuous(d), discrete(k)).
struct ActionSpace {
  ActionKind kind = ActionKind::kDiscrete;
  int num_discrete = 0;
  int continuous_dim = 0;
  double low = -1.0;
  double high = 1.0;

  static ActionSpace Discrete(int k);
  static ActionSpace Continuous(int dim, double low, double high);
  static ActionSpace Mixed(int dim, double low, double high, int k);

  bool has_continuous() const { return kind != ActionKind::kDiscrete; }
  bool has_discrete() const { return kind != ActionKind::kContinuous; }

  friend bool operator==(const ActionSpace&, const ActionSpace&) = default;
};

void to_json(nlohmann::json& j, const ActionSpace& space);
void from_json(const nlohmann::json& j, ActionSpace& space);

// One agent's action. `discrete` carries the action index for discrete
// spaces and the token for mixed spaces; it is ignored for continuous ones.
struct Action {
  std::vector<double> continuous;
  int discrete = 0;

  static Action Index(int index) { return Action{{}, index}; }
  friend bool operator==(const Action&, const Action&) = default;
};

using JointAction = std::array<Action, kNumAgents>;
using Observation = std::vector<double>;
using JointObservation = std::array<Observation, kNumAgents>;

void to_json(nlohmann::json& j, const Action& action);
void from_json(const nlohmann::json& j, Action& action);

// Throws UsageError unless `action` is valid for `space`.
void ValidateAction(const ActionSpace& space, const Action& action);

struct GameSpec {
  std::array<std::string, kNumAgents> agent_roles;
  std::array<int, kNumAgents> obs_dim{};
  std::array<ActionSpace, kNumAgents> action_space;
  double discount = 1.0;
  int max_episode_steps = 1;

  // Seat index for a role label; throws UsageError for unknown labels.
  int SeatOf(const std::string& role) const;
};

struct StepResult {
  JointObservation observations;
  std::array<double, kNumAgents> rewards{};
  bool done = false;
  int step_index = 0;
};

// Two-player zero-sum Markov game. Implementations own a counter-based RNG
// seeded at Reset, so (config, seed, action sequence) fully determines every
// observation and reward. Instances are single-threaded but movable between
// threads; Clone() gives an independent copy including RNG state.
class Game {
 public:
  virtual ~Game() = default;

  virtual const GameSpec& spec() const = 0;
  virtual std::string name() const = 0;

  virtual JointObservation Reset(uint64_t seed) = 0;
  virtual StepResult Step(const JointAction& actions) = 0;
  virtual JointObservation Observe() const = 0;

  virtual bool done() const = 0;
  virtual int step_index() const = 0;

  // Human-readable render of the current state.
  virtual std::string Render() const = 0;
  // Machine-readable snapshot of the physical state.
  virtual nlohmann::json StateJson() const = 0;

  virtual std::unique_ptr<Game> Clone() const = 0;
};

struct TrajectoryStep {
  JointObservation observations;  // what each agent saw when acting
  JointAction actions;
  std::array<double, kNumAgents> rewards{};
  bool done = false;
};

struct Trajectory {
  uint64_t seed = 0;
  nlohmann::json env_config;  // enough to rebuild the game for replay
  std::vector<TrajectoryStep> steps;
};

// Sum over t of discount^t * reward_t for one agent. Empty trajectories give 0.
double EpisodeReturn(const Trajectory& trajectory, int agent_index,
                     double discount);

// JSON-lines: a header record {"seed", "env"} followed by one record per step
// with "t", "observations", "actions", "rewards", "done".
void WriteTrajectoryJsonl(const Trajectory& trajectory,
                          const std::filesystem::path& path);
Trajectory ReadTrajectoryJsonl(const std::filesystem::path& path);

}  // namespace exploitlab

#endif  // EXPLOITLAB_GAME_H_
