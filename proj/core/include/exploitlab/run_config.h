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

#ifndef EXPLOITLAB_RUN_CONFIG_H_
#define EXPLOITLAB_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exploitlab/env.h"
#include "exploitlab/ppo.h"

namespace exploitlab {

enum class RunMode { kSelfplay, kPbrl, kAttack };

inline constexpr int64_t kDefaultTimesteps = 300'000;

std::string RunModeName(RunMode mode);
RunMode ParseRunMode(const std::string& name);  // ConfigError("mode")

// Resolved description of one training run. Fields that only apply to one
// mode are serialised for that mode alone; the parser rejects them elsewhere.
struct RunConfig {
  RunMode mode = RunMode::kSelfplay;
  EnvConfig env = lasertag::LaserTagConfig{};
  PpoConfig ppo;
  // Per-policy env-step budget. For attacks this is the adversary budget and
  // 0 means twice the victim's own budget.
  int64_t timesteps = kDefaultTimesteps;
  uint64_t seed = 0;
  int64_t checkpoint_every = 50000;
  int num_envs = 8;
  std::vector<int> hidden = {64, 64};

  // selfplay: one parameter set for both seats (symmetric games only).
  bool shared_policy = true;

  // pbrl
  int population_size = 0;
  int64_t alternation_period = 0;  // 0 resolves to ppo.rollout_length
  std::string protagonist_seat;    // empty resolves to the default seat

  // attack
  std::string victim_checkpoint;
  std::string attacked_seat;  // seat the victim occupies

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void to_json(nlohmann::json& j, const RunConfig& config);
// Missing fields take defaults; unknown or mode-inapplicable fields throw
// ConfigError naming the field.
void from_json(const nlohmann::json& j, RunConfig& config);

// Seat label a pbrl protagonist (and default attack victim) occupies:
// "player-0" in Laser Tag, "aggressor" in Simple Push.
std::string DefaultProtagonistSeat(const EnvConfig& env);

// Fills mode defaults that do not need external inputs (alternation period,
// seat labels, shared_policy for asymmetric games).
void MaterializeDefaults(RunConfig& config);

// Throws ConfigError naming the first offending field. Does not touch the
// filesystem.
void Validate(const RunConfig& config);

// SHA-256 of the canonical JSON serialisation.
std::string ConfigHash(const RunConfig& config);

// Bundled experiment presets. `scale` is "desk" (T = 300,000) or "paper"
// (T = 25,000,000).
std::vector<std::string> PresetNames();
RunConfig Preset(const std::string& name, const std::string& scale = "desk");

struct SeedGrid {
  std::vector<RunConfig> victims;
  // attacks[v * adversaries_per_victim + a]; victim_checkpoint is left as
  // "<victim-dir>/final.ckpt" relative to the grid root.
  std::vector<RunConfig> attacks;
  std::vector<std::string> victim_dirs;
  std::vector<std::string> attack_dirs;
};

// Derives victim and attack configs with pairwise distinct seeds.
SeedGrid MakeSeedGrid(const RunConfig& victim_template, int victim_seeds = 5,
                      int adversary_seeds_per_victim = 3,
                      int64_t adversary_timesteps = 0);

}  // namespace exploitlab

#endif  // EXPLOITLAB_RUN_CONFIG_H_
