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

#include "exploitlab/game.h"

#include <cmath>
#include <fstream>
#include <string>

#include "exploitlab/errors.h"

namespace exploitlab {
namespace {

const char* KindName(ActionKind kind) {
  switch (kind) {
    case ActionKind::kDiscrete:
      return "discrete";
    case ActionKind::kContinuous:
      return "continuous";
    case ActionKind::kMixed:
      return "mixed";
  }
  return "unknown";
}

}  // namespace

ActionSpace ActionSpace::Discrete(int k) {
  return ActionSpace{ActionKind::kDiscrete, k, 0, 0.0, 0.0};
}

ActionSpace ActionSpace::Continuous(int dim, double low, double high) {
  return ActionSpace{ActionKind::kContinuous, 0, dim, low, high};
}

ActionSpace ActionSpace::Mixed(int dim, double low, double high, int k) {
  return ActionSpace{ActionKind::kMixed, k, dim, low, high};
}

void to_json(nlohmann::json& j, const ActionSpace& space) {
  j = nlohmann::json{{"kind", KindName(space.kind)},
                     {"num_discrete", space.num_discrete},
                     {"continuous_dim", space.continuous_dim},
                     {"low", space.low},
                     {"high", space.high}};
}

void from_json(const nlohmann::json& j, ActionSpace& space) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "discrete") {
    space.kind = ActionKind::kDiscrete;
  } else if (kind == "continuous") {
    space.kind = ActionKind::kContinuous;
  } else if (kind == "mixed") {
    space.kind = ActionKind::kMixed;
  } else {
    throw UsageError("unknown action space kind '" + kind + "'");
  }
  space.num_discrete = j.at("num_discrete").get<int>();
  space.continuous_dim = j.at("continuous_dim").get<int>();
  space.low = j.at("low").get<double>();
  space.high = j.at("high").get<double>();
}

void to_json(nlohmann::json& j, const Action& action) {
  j = nlohmann::json{{"continuous", action.continuous},
                     {"discrete", action.discrete}};
}

void from_json(const nlohmann::json& j, Action& action) {
  action.continuous = j.value("continuous", std::vector<double>{});
  action.discrete = j.value("discrete", 0);
}

void ValidateAction(const ActionSpace& space, const Action& action) {
  if (space.has_discrete() &&
      (action.discrete < 0 || action.discrete >= space.num_discrete)) {
    throw UsageError("discrete action " + std::to_string(action.discrete) +
                     " out of range [0, " + std::to_string(space.num_discrete) +
                     ")");
  }
  if (space.has_continuous()) {
    if (static_cast<int>(action.continuous.size()) != space.continuous_dim) {
      throw UsageError("continuous action has dimension " +
                       std::to_string(action.continuous.size()) +
                       ", expected " + std::to_string(space.continuous_dim));
    }
    for (double x : action.continuous) {
      if (!std::isfinite(x)) throw UsageError("non-finite continuous action");
    }
  }
}

int GameSpec::SeatOf(const std::string& role) const {
  for (int seat = 0; seat < kNumAgents; ++seat) {
    if (agent_roles[seat] == role) return seat;
  }
  throw UsageError("unknown role '" + role + "' (expected '" + agent_roles[0] +
                   "' or '" + agent_roles[1] + "')");
}

double EpisodeReturn(const Trajectory& trajectory, int agent_index,
                     double discount) {
  if (agent_index < 0 || agent_index >= kNumAgents) {
    throw UsageError("agent index out of range");
  }
  double total = 0.0;
  double weight = 1.0;
  for (const TrajectoryStep& step : trajectory.steps) {
    total += weight * step.rewards[agent_index];
    weight *= discount;
  }
  return total;
}

void WriteTrajectoryJsonl(const Trajectory& trajectory,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << nlohmann::json{{"seed", trajectory.seed},
                        {"env", trajectory.env_config}}
             .dump()
      << '\n';
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const TrajectoryStep& step = trajectory.steps[t];
    nlohmann::json record{{"t", t},
                          {"observations", step.observations},
                          {"actions", step.actions},
                          {"rewards", step.rewards},
                          {"done", step.done}};
    out << record.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory ReadTrajectoryJsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open trajectory " + path.string());
  Trajectory trajectory;
  std::string line;
  if (!std::getline(in, line)) {
    throw UsageError("empty trajectory file " + path.string());
  }
  const auto header = nlohmann::json::parse(line);
  trajectory.seed = header.at("seed").get<uint64_t>();
  trajectory.env_config = header.at("env");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto record = nlohmann::json::parse(line);
    TrajectoryStep step;
    step.observations = record.at("observations").get<JointObservation>();
    step.actions = record.at("actions").get<JointAction>();
    step.rewards = record.at("rewards").get<std::array<double, kNumAgents>>();
    step.done = record.at("done").get<bool>();
    trajectory.steps.push_back(std::move(step));
  }
  return trajectory;
}

}  // namespace exploitlab
