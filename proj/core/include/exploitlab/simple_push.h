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

#ifndef EXPLOITLAB_SIMPLE_PUSH_H_
#define EXPLOITLAB_SIMPLE_PUSH_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "exploitlab/game.h"
#include "exploitlab/rng.h"

namespace exploitlab::push {

inline constexpr int kAggressor = 0;
inline constexpr int kDefender = 1;
// Observation length without the token block.
inline constexpr int kBaseObsDim = 10;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double Norm(Vec2 v);
double Distance(Vec2 a, Vec2 b);

struct BodyState {
  Vec2 position;
  Vec2 velocity;
  friend bool operator==(const BodyState&, const BodyState&) = default;
};

// Defaults follow the particle-environment conventions: dt 0.1, damping 0.25,
// unit mass, 25-step episodes. Both agents use radius 0.15.
struct PushConfig {
  int comm_tokens = 50;
  double penalty_coefficient = 1.0;
  double dt = 0.1;
  double damping = 0.25;
  double mass = 1.0;
  std::optional<double> max_speed;
  int max_episode_steps = 25;
  double world_half_extent = 1.0;
  double agent_radius = 0.15;
  double contact_stiffness = 100.0;

  friend bool operator==(const PushConfig&, const PushConfig&) = default;
};

void to_json(nlohmann::json& j, const PushConfig& config);
void from_json(const nlohmann::json& j, PushConfig& config);
void Validate(const PushConfig& config);

struct PushState {
  std::array<BodyState, kNumAgents> bodies;
  std::array<Vec2, 2> landmarks;
  int target = 0;  // index into landmarks
  std::array<int, kNumAgents> last_tokens{};
  friend bool operator==(const PushState&, const PushState&) = default;
};

// Seat 0 is the aggressor, seat 1 the defender. Observations:
//   [own velocity(2), own position(2), landmark A rel(2), landmark B rel(2),
//    opponent rel(2), one-hot of opponent's previous token (K)]
// For the defender A is the target and B the decoy. For the aggressor A and B
// are the landmarks sorted lexicographically by absolute coordinates, so slot
// order carries no information about target identity.
class PushGame final : public Game {
 public:
  explicit PushGame(PushConfig config);

  const GameSpec& spec() const override { return spec_; }
  std::string name() const override { return "simplepush"; }

  JointObservation Reset(uint64_t seed) override;
  StepResult Step(const JointAction& actions) override;
  JointObservation Observe() const override;

  bool done() const override { return done_; }
  int step_index() const override { return step_; }

  std::string Render() const override;
  nlohmann::json StateJson() const override;
  std::unique_ptr<Game> Clone() const override;

  Observation ObserveAgent(int agent) const;
  double AggressorReward() const;

  const PushConfig& config() const { return config_; }
  const PushState& state() const { return state_; }
  // Test hook: overwrite the physical state of a running episode.
  void SetState(const PushState& state);

 private:
  PushConfig config_;
  GameSpec spec_;
  PushState state_;
  CounterRng rng_;
  int step_ = 0;
  bool done_ = true;
};

}  // namespace exploitlab::push

#endif  // EXPLOITLAB_SIMPLE_PUSH_H_
