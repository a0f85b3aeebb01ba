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

#include "exploitlab/env.h"

#include "exploitlab/errors.h"

namespace exploitlab {

std::string EnvName(const EnvConfig& config) {
  return std::holds_alternative<lasertag::LaserTagConfig>(config) ? "lasertag"
                                                                   : "simplepush";
}

bool IsSymmetric(const EnvConfig& config) {
  return std::holds_alternative<lasertag::LaserTagConfig>(config);
}

EnvConfig DefaultEnvConfig(const std::string& name) {
  if (name == "lasertag") return lasertag::LaserTagConfig{};
  if (name == "simplepush") return push::PushConfig{};
  throw ConfigError("env.name", "unknown environment '" + name +
                                    "' (expected lasertag or simplepush)");
}

nlohmann::json EnvConfigToJson(const EnvConfig& config) {
  return std::visit([](const auto& c) { return nlohmann::json(c); }, config);
}

EnvConfig EnvConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("env", "must be an object");
  const std::string name = j.value("name", std::string("lasertag"));
  EnvConfig config = DefaultEnvConfig(name);
  const nlohmann::json known = EnvConfigToJson(config);
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) {
      throw ConfigError("env." + item.key(), "unknown field for " + name);
    }
  }
  try {
    std::visit([&](auto& c) { j.get_to(c); }, config);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("env", e.what());
  }
  return config;
}

void ValidateEnvConfig(const EnvConfig& config) {
  std::visit(
      [](const auto& c) {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>,
                                     lasertag::LaserTagConfig>) {
          lasertag::Validate(c);
        } else {
          push::Validate(c);
        }
      },
      config);
}

std::unique_ptr<Game> MakeGame(const EnvConfig& config) {
  return std::visit(
      [](const auto& c) -> std::unique_ptr<Game> {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>,
                                     lasertag::LaserTagConfig>) {
          return std::make_unique<lasertag::LaserTagGame>(c);
        } else {
          return std::make_unique<push::PushGame>(c);
        }
      },
      config);
}

Action RandomAction(const ActionSpace& space, CounterRng& rng) {
  Action action;
  if (space.has_continuous()) {
    action.continuous.resize(static_cast<std::size_t>(space.continuous_dim));
    for (double& x : action.continuous) x = rng.Uniform(space.low, space.high);
  }
  if (space.has_discrete()) {
    action.discrete = static_cast<int>(
        rng.UniformInt(static_cast<uint64_t>(space.num_discrete)));
  }
  return action;
}

}  // namespace exploitlab
