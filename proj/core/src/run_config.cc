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

#include "exploitlab/run_config.h"

#include <set>

#include "exploitlab/errors.h"
#include "exploitlab/hash.h"
#include "exploitlab/rng.h"

namespace exploitlab {
namespace {

constexpr uint64_t kVictimSeedTag = 0x76696374;
constexpr uint64_t kAttackSeedTag = 0x61747461;

const std::set<std::string> kCommonFields = {
    "mode", "env", "ppo", "timesteps", "seed", "checkpoint_every", "num_envs", "hidden"};
const std::set<std::string> kSelfplayFields = {"shared_policy"};
const std::set<std::string> kPbrlFields = {"population_size", "alternation_period",
                                           "protagonist_seat"};
const std::set<std::string> kAttackFields = {"victim_checkpoint", "attacked_seat"};

const std::set<std::string>& ModeFields(RunMode mode) {
  switch (mode) {
    case RunMode::kSelfplay: return kSelfplayFields;
    case RunMode::kPbrl: return kPbrlFields;
    case RunMode::kAttack: return kAttackFields;
  }
  return kSelfplayFields;
}

template <typename T>
T Field(const nlohmann::json& j, const std::string& name, const T& fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(name, "has the wrong type");
  }
}

std::vector<std::string> SeatLabels(const EnvConfig& env) {
  if (IsSymmetric(env)) return {"player-0", "player-1"};
  return {"aggressor", "defender"};
}

void CheckSeat(const EnvConfig& env, const std::string& field, const std::string& seat) {
  for (const std::string& label : SeatLabels(env)) {
    if (label == seat) return;
  }
  throw ConfigError(field, "unknown seat '" + seat + "' for " + EnvName(env));
}

}  // namespace

std::string RunModeName(RunMode mode) {
  switch (mode) {
    case RunMode::kSelfplay: return "selfplay";
    case RunMode::kPbrl: return "pbrl";
    case RunMode::kAttack: return "attack";
  }
  return "selfplay";
}

RunMode ParseRunMode(const std::string& name) {
  if (name == "selfplay") return RunMode::kSelfplay;
  if (name == "pbrl") return RunMode::kPbrl;
  if (name == "attack") return RunMode::kAttack;
  throw ConfigError("mode", "unknown mode '" + name + "' (expected selfplay, pbrl or attack)");
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"mode", RunModeName(c.mode)},
                     {"env", EnvConfigToJson(c.env)},
                     {"ppo", c.ppo},
                     {"timesteps", c.timesteps},
                     {"seed", c.seed},
                     {"checkpoint_every", c.checkpoint_every},
                     {"num_envs", c.num_envs},
                     {"hidden", c.hidden}};
  switch (c.mode) {
    case RunMode::kSelfplay:
      j["shared_policy"] = c.shared_policy;
      break;
    case RunMode::kPbrl:
      j["population_size"] = c.population_size;
      j["alternation_period"] = c.alternation_period;
      j["protagonist_seat"] = c.protagonist_seat;
      break;
    case RunMode::kAttack:
      j["victim_checkpoint"] = c.victim_checkpoint;
      j["attacked_seat"] = c.attacked_seat;
      break;
  }
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
  c = RunConfig{};
  c.mode = ParseRunMode(Field<std::string>(j, "mode", "selfplay"));
  const auto& mode_fields = ModeFields(c.mode);
  for (const auto& item : j.items()) {
    if (kCommonFields.count(item.key()) || mode_fields.count(item.key())) continue;
    if (kSelfplayFields.count(item.key()) || kPbrlFields.count(item.key()) ||
        kAttackFields.count(item.key())) {
      throw ConfigError(item.key(), "not applicable to mode " + RunModeName(c.mode));
    }
    throw ConfigError(item.key(), "unknown field");
  }
  if (j.contains("env")) c.env = EnvConfigFromJson(j.at("env"));
  if (j.contains("ppo")) {
    const nlohmann::json known = PpoConfig{};
    for (const auto& item : j.at("ppo").items()) {
      if (!known.contains(item.key())) throw ConfigError("ppo." + item.key(), "unknown field");
    }
    try {
      j.at("ppo").get_to(c.ppo);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("ppo", e.what());
    }
  }
  c.timesteps = Field<int64_t>(j, "timesteps", c.mode == RunMode::kAttack ? 0 : kDefaultTimesteps);
  c.seed = Field<uint64_t>(j, "seed", c.seed);
  c.checkpoint_every = Field<int64_t>(j, "checkpoint_every", c.checkpoint_every);
  c.num_envs = Field<int>(j, "num_envs", c.num_envs);
  c.hidden = Field<std::vector<int>>(j, "hidden", c.hidden);
  c.shared_policy = Field<bool>(j, "shared_policy", c.shared_policy);
  c.population_size = Field<int>(j, "population_size", c.population_size);
  c.alternation_period = Field<int64_t>(j, "alternation_period", c.alternation_period);
  c.protagonist_seat = Field<std::string>(j, "protagonist_seat", c.protagonist_seat);
  c.victim_checkpoint = Field<std::string>(j, "victim_checkpoint", c.victim_checkpoint);
  c.attacked_seat = Field<std::string>(j, "attacked_seat", c.attacked_seat);
}

std::string DefaultProtagonistSeat(const EnvConfig& env) {
  return IsSymmetric(env) ? "player-0" : "aggressor";
}

void MaterializeDefaults(RunConfig& c) {
  switch (c.mode) {
    case RunMode::kSelfplay:
      if (!IsSymmetric(c.env)) c.shared_policy = false;
      break;
    case RunMode::kPbrl:
      if (c.alternation_period == 0) c.alternation_period = c.ppo.rollout_length;
      if (c.protagonist_seat.empty()) c.protagonist_seat = DefaultProtagonistSeat(c.env);
      break;
    case RunMode::kAttack:
      if (c.attacked_seat.empty()) c.attacked_seat = DefaultProtagonistSeat(c.env);
      break;
  }
}

void Validate(const RunConfig& c) {
  ValidateEnvConfig(c.env);
  Validate(c.ppo);
  if (c.timesteps < 0 || (c.timesteps == 0 && c.mode != RunMode::kAttack)) {
    throw ConfigError("timesteps", "must be > 0");
  }
  if (c.checkpoint_every < 1) throw ConfigError("checkpoint_every", "must be >= 1");
  if (c.num_envs < 1) throw ConfigError("num_envs", "must be >= 1");
  if (c.hidden.empty()) throw ConfigError("hidden", "needs at least one layer");
  for (int width : c.hidden) {
    if (width < 1) throw ConfigError("hidden", "layer widths must be >= 1");
  }
  switch (c.mode) {
    case RunMode::kSelfplay:
      if (c.shared_policy && !IsSymmetric(c.env)) {
        throw ConfigError("shared_policy", "only symmetric games can share one policy");
      }
      break;
    case RunMode::kPbrl:
      if (c.population_size < 1) throw ConfigError("population_size", "must be >= 1");
      if (c.alternation_period < 1) throw ConfigError("alternation_period", "must be >= 1");
      CheckSeat(c.env, "protagonist_seat", c.protagonist_seat);
      break;
    case RunMode::kAttack:
      if (c.victim_checkpoint.empty()) {
        throw ConfigError("victim_checkpoint", "required for attack runs");
      }
      CheckSeat(c.env, "attacked_seat", c.attacked_seat);
      break;
  }
}

std::string ConfigHash(const RunConfig& config) {
  return Sha256Hex(nlohmann::json(config).dump());
}

std::vector<std::string> PresetNames() {
  return {"lasertag-selfplay",  "lasertag-pbrl-n20", "lasertag-pbrl-n40",
          "lasertag-pbrl-n60",  "lasertag-pbrl-n80", "push-selfplay",
          "push-pbrl-n2",       "push-pbrl-n4",      "push-pbrl-n8",
          "push-pbrl-n16"};
}

RunConfig Preset(const std::string& name, const std::string& scale) {
  RunConfig c;
  if (scale == "desk") {
    c.timesteps = 300'000;
    c.checkpoint_every = 50'000;
  } else if (scale == "paper") {
    c.timesteps = 25'000'000;
    c.checkpoint_every = 1'000'000;
  } else {
    throw ConfigError("scale", "expected desk or paper");
  }
  const std::string lt = "lasertag-";
  const std::string sp = "push-";
  std::string rest;
  if (name.rfind(lt, 0) == 0) {
    c.env = lasertag::LaserTagConfig{};
    rest = name.substr(lt.size());
  } else if (name.rfind(sp, 0) == 0) {
    c.env = push::PushConfig{};
    rest = name.substr(sp.size());
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  bool known = false;
  for (const std::string& n : PresetNames()) known = known || n == name;
  if (!known) throw ConfigError("preset", "unknown preset '" + name + "'");
  if (rest == "selfplay") {
    c.mode = RunMode::kSelfplay;
  } else {
    c.mode = RunMode::kPbrl;
    c.population_size = std::stoi(rest.substr(std::string("pbrl-n").size()));
  }
  MaterializeDefaults(c);
  return c;
}

SeedGrid MakeSeedGrid(const RunConfig& victim_template, int victim_seeds,
                      int adversary_seeds_per_victim, int64_t adversary_timesteps) {
  if (victim_template.mode == RunMode::kAttack) {
    throw ConfigError("mode", "seed grid template must be a victim run");
  }
  if (victim_seeds < 1) throw ConfigError("victim_seeds", "must be >= 1");
  if (adversary_seeds_per_victim < 1) {
    throw ConfigError("adversary_seeds", "must be >= 1");
  }
  Validate(victim_template);
  SeedGrid grid;
  const std::string victim_seat = victim_template.mode == RunMode::kPbrl
                                      ? victim_template.protagonist_seat
                                      : DefaultProtagonistSeat(victim_template.env);
  for (int v = 0; v < victim_seeds; ++v) {
    RunConfig victim = victim_template;
    victim.seed = DeriveSeed(victim_template.seed, {kVictimSeedTag, static_cast<uint64_t>(v)});
    const std::string victim_dir = "victim-" + std::to_string(v);
    grid.victims.push_back(victim);
    grid.victim_dirs.push_back(victim_dir);
    for (int a = 0; a < adversary_seeds_per_victim; ++a) {
      RunConfig attack;
      attack.mode = RunMode::kAttack;
      attack.env = victim_template.env;
      attack.ppo = victim_template.ppo;
      attack.hidden = victim_template.hidden;
      attack.num_envs = victim_template.num_envs;
      attack.checkpoint_every = victim_template.checkpoint_every;
      attack.timesteps = adversary_timesteps;
      attack.seed = DeriveSeed(victim_template.seed,
                               {kAttackSeedTag, static_cast<uint64_t>(v),
                                static_cast<uint64_t>(a)});
      attack.victim_checkpoint = victim_dir + "/final.ckpt";
      attack.attacked_seat = victim_seat;
      grid.attacks.push_back(attack);
      grid.attack_dirs.push_back("attack-" + std::to_string(v) + "-" + std::to_string(a));
    }
  }
  return grid;
}

}  // namespace exploitlab
