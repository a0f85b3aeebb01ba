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

#include "exploitlab/simple_push.h"

#include <algorithm>
#include <cmath>

#include "exploitlab/errors.h"

namespace exploitlab::push {

double Norm(Vec2 v) { return std::hypot(v.x, v.y); }

double Distance(Vec2 a, Vec2 b) { return Norm(a - b); }

void to_json(nlohmann::json& j, const PushConfig& config) {
  j = nlohmann::json{{"name", "simplepush"},
                     {"comm_tokens", config.comm_tokens},
                     {"penalty_coefficient", config.penalty_coefficient},
                     {"dt", config.dt},
                     {"damping", config.damping},
                     {"mass", config.mass},
                     {"max_speed", nullptr},
                     {"max_episode_steps", config.max_episode_steps},
                     {"world_half_extent", config.world_half_extent},
                     {"agent_radius", config.agent_radius},
                     {"contact_stiffness", config.contact_stiffness}};
  if (config.max_speed) j["max_speed"] = *config.max_speed;
}

void from_json(const nlohmann::json& j, PushConfig& config) {
  const PushConfig defaults;
  config.comm_tokens = j.value("comm_tokens", defaults.comm_tokens);
  config.penalty_coefficient =
      j.value("penalty_coefficient", defaults.penalty_coefficient);
  config.dt = j.value("dt", defaults.dt);
  config.damping = j.value("damping", defaults.damping);
  config.mass = j.value("mass", defaults.mass);
  config.max_speed.reset();
  if (j.contains("max_speed") && !j.at("max_speed").is_null()) {
    config.max_speed = j.at("max_speed").get<double>();
  }
  config.max_episode_steps =
      j.value("max_episode_steps", defaults.max_episode_steps);
  config.world_half_extent =
      j.value("world_half_extent", defaults.world_half_extent);
  config.agent_radius = j.value("agent_radius", defaults.agent_radius);
  config.contact_stiffness =
      j.value("contact_stiffness", defaults.contact_stiffness);
}

void Validate(const PushConfig& config) {
  if (config.comm_tokens < 0) {
    throw ConfigError("env.comm_tokens", "must be >= 0");
  }
  if (!(config.penalty_coefficient > 0.0 && config.penalty_coefficient <= 1.0)) {
    throw ConfigError("env.penalty_coefficient", "must be in (0, 1]");
  }
  if (!(config.dt > 0.0)) throw ConfigError("env.dt", "must be positive");
  if (!(config.damping >= 0.0 && config.damping < 1.0)) {
    throw ConfigError("env.damping", "must be in [0, 1)");
  }
  if (!(config.mass > 0.0)) throw ConfigError("env.mass", "must be positive");
  if (config.max_speed && !(*config.max_speed > 0.0)) {
    throw ConfigError("env.max_speed", "must be positive when set");
  }
  if (config.max_episode_steps <= 0) {
    throw ConfigError("env.max_episode_steps", "must be positive");
  }
  if (!(config.world_half_extent > 0.0)) {
    throw ConfigError("env.world_half_extent", "must be positive");
  }
  if (!(config.agent_radius >= 0.0)) {
    throw ConfigError("env.agent_radius", "must be >= 0");
  }
  if (!(config.contact_stiffness >= 0.0)) {
    throw ConfigError("env.contact_stiffness", "must be >= 0");
  }
}

PushGame::PushGame(PushConfig config) : config_(config) {
  Validate(config_);
  const int obs_dim = kBaseObsDim + config_.comm_tokens;
  const ActionSpace space =
      config_.comm_tokens > 0
          ? ActionSpace::Mixed(2, -1.0, 1.0, config_.comm_tokens)
          : ActionSpace::Continuous(2, -1.0, 1.0);
  spec_.agent_roles = {"aggressor", "defender"};
  spec_.obs_dim = {obs_dim, obs_dim};
  spec_.action_space = {space, space};
  spec_.discount = 0.99;
  spec_.max_episode_steps = config_.max_episode_steps;
}

JointObservation PushGame::Reset(uint64_t seed) {
  rng_ = CounterRng(seed);
  const double e = config_.world_half_extent;
  for (Vec2& landmark : state_.landmarks) {
    landmark.x = rng_.Uniform(-e, e);
    landmark.y = rng_.Uniform(-e, e);
  }
  for (BodyState& body : state_.bodies) {
    body.position.x = rng_.Uniform(-e, e);
    body.position.y = rng_.Uniform(-e, e);
    body.velocity = {};
  }
  state_.target = static_cast<int>(rng_.UniformInt(2));
  state_.last_tokens = {0, 0};
  step_ = 0;
  done_ = false;
  return Observe();
}

void PushGame::SetState(const PushState& state) {
  state_ = state;
  if (done_) {
    step_ = 0;
    done_ = false;
  }
}

double PushGame::AggressorReward() const {
  const Vec2 target = state_.landmarks[state_.target];
  return Distance(state_.bodies[kDefender].position, target) -
         config_.penalty_coefficient *
             Distance(state_.bodies[kAggressor].position, target);
}

StepResult PushGame::Step(const JointAction& actions) {
  if (done_) throw UsageError("step called on a finished episode");
  for (int agent = 0; agent < kNumAgents; ++agent) {
    ValidateAction(spec_.action_space[agent], actions[agent]);
  }

  std::array<Vec2, kNumAgents> force;
  for (int agent = 0; agent < kNumAgents; ++agent) {
    force[agent] = {std::clamp(actions[agent].continuous[0], -1.0, 1.0),
                    std::clamp(actions[agent].continuous[1], -1.0, 1.0)};
  }

  // Soft contact along the centre line, proportional to penetration depth.
  const Vec2 delta = state_.bodies[0].position - state_.bodies[1].position;
  const double dist = Norm(delta);
  const double overlap = 2.0 * config_.agent_radius - dist;
  if (overlap > 0.0 && dist > 0.0) {
    const Vec2 push = (config_.contact_stiffness * overlap / dist) * delta;
    force[0] += push;
    force[1] += -1.0 * push;
  }

  for (int agent = 0; agent < kNumAgents; ++agent) {
    BodyState& body = state_.bodies[agent];
    body.velocity = (1.0 - config_.damping) * body.velocity +
                    (config_.dt / config_.mass) * force[agent];
    if (config_.max_speed) {
      const double speed = Norm(body.velocity);
      if (speed > *config_.max_speed) {
        body.velocity = (*config_.max_speed / speed) * body.velocity;
      }
    }
    body.position += config_.dt * body.velocity;
  }
  if (config_.comm_tokens > 0) {
    state_.last_tokens = {actions[0].discrete, actions[1].discrete};
  }

  StepResult result;
  const double aggressor_reward = AggressorReward();
  result.rewards = {aggressor_reward, -aggressor_reward};
  ++step_;
  done_ = step_ >= config_.max_episode_steps;
  result.done = done_;
  result.step_index = step_;
  result.observations = Observe();
  return result;
}

Observation PushGame::ObserveAgent(int agent) const {
  if (agent < 0 || agent >= kNumAgents) throw UsageError("agent out of range");
  const BodyState& self = state_.bodies[agent];
  const BodyState& other = state_.bodies[1 - agent];
  Vec2 first = state_.landmarks[state_.target];
  Vec2 second = state_.landmarks[1 - state_.target];
  if (agent == kAggressor) {
    const Vec2 a = state_.landmarks[0];
    const Vec2 b = state_.landmarks[1];
    const bool a_first = a.x < b.x || (a.x == b.x && a.y <= b.y);
    first = a_first ? a : b;
    second = a_first ? b : a;
  }
  const Vec2 first_rel = first - self.position;
  const Vec2 second_rel = second - self.position;
  const Vec2 other_rel = other.position - self.position;
  Observation obs = {self.velocity.x, self.velocity.y, self.position.x,
                     self.position.y, first_rel.x,     first_rel.y,
                     second_rel.x,    second_rel.y,    other_rel.x,
                     other_rel.y};
  if (config_.comm_tokens > 0) {
    obs.resize(kBaseObsDim + config_.comm_tokens, 0.0);
    obs[kBaseObsDim + state_.last_tokens[1 - agent]] = 1.0;
  }
  return obs;
}

JointObservation PushGame::Observe() const {
  return {ObserveAgent(0), ObserveAgent(1)};
}

nlohmann::json PushGame::StateJson() const {
  auto body = [](const BodyState& b) {
    return nlohmann::json{{"pos", {b.position.x, b.position.y}},
                          {"vel", {b.velocity.x, b.velocity.y}}};
  };
  const Vec2 target = state_.landmarks[state_.target];
  const Vec2 decoy = state_.landmarks[1 - state_.target];
  return {{"step", step_},
          {"aggressor", body(state_.bodies[kAggressor])},
          {"defender", body(state_.bodies[kDefender])},
          {"target", {target.x, target.y}},
          {"decoy", {decoy.x, decoy.y}},
          {"tokens", state_.last_tokens}};
}

std::string PushGame::Render() const { return StateJson().dump(); }

std::unique_ptr<Game> PushGame::Clone() const {
  return std::make_unique<PushGame>(*this);
}

}  // namespace exploitlab::push
