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

#ifndef EXPLOITLAB_TRAINER_H_
#define EXPLOITLAB_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exploitlab/policy.h"
#include "exploitlab/run_config.h"

namespace exploitlab {

struct TrainOptions {
  // Threads for independent learners (pbrl opponents, two-policy selfplay).
  // Results do not depend on this value.
  int workers = 1;
  // Checkpoint and return once total env steps reach this value. Used to
  // exercise resume.
  std::optional<int64_t> stop_after_steps;
  // Receives one progress line per PPO update when set.
  std::function<void(const std::string&)> progress;
};

struct RunSummary {
  bool completed = false;
  bool already_complete = false;  // resume found final.ckpt
  int64_t total_env_steps = 0;
  std::map<std::string, int64_t> policy_steps;
  std::map<std::string, std::string> policy_hashes;
  std::filesystem::path last_checkpoint;
};

// Run directory layout.
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kMetricsFile = "metrics.jsonl";
inline constexpr const char* kCheckpointDir = "checkpoints";
inline constexpr const char* kFinalCheckpoint = "final.ckpt";
inline constexpr const char* kReturnCurveFile = "return_curve.json";

// The victim an attack plays against, read from a finished run's checkpoint.
struct VictimPolicy {
  PolicyParams params;
  std::string name;          // policy name inside the checkpoint
  int64_t trained_steps = 0;  // that policy's own env-step counter
  std::string params_hash;
  std::string file_hash;
};

// Picks "protagonist" when present, then the policy trained at
// `attacked_seat`, then "shared". Throws UsageError when the checkpoint's
// environment differs from `env` or no policy fits the seat.
VictimPolicy LoadVictim(const std::filesystem::path& checkpoint, const EnvConfig& env,
                        const std::string& attacked_seat);

// Completes the defaults that need external inputs (attack budget from the
// victim checkpoint) on top of MaterializeDefaults, then validates.
RunConfig ResolveRunConfig(RunConfig config);

// Starts a run in `run_dir`, which must not hold a checkpoint yet. Writes
// config.json and manifest.json first. Throws ConfigError before any compute
// when the config is invalid.
RunSummary Train(const RunConfig& config, const std::filesystem::path& run_dir,
                 const TrainOptions& options = {});

// Mode-checked entry points.
RunSummary TrainSelfplay(const RunConfig& config, const std::filesystem::path& run_dir,
                         const TrainOptions& options = {});
RunSummary TrainPbrl(const RunConfig& config, const std::filesystem::path& run_dir,
                     const TrainOptions& options = {});
RunSummary TrainAttack(const RunConfig& config, const std::filesystem::path& run_dir,
                       const TrainOptions& options = {});

// Continues from the newest checkpoint, truncating metrics.jsonl back to the
// offset recorded there. A run with final.ckpt is left untouched.
RunSummary Resume(const std::filesystem::path& run_dir, const TrainOptions& options = {});

// Newest checkpoints/step-N.ckpt, if any.
std::optional<std::filesystem::path> LatestCheckpoint(const std::filesystem::path& run_dir);

std::vector<nlohmann::json> ReadMetrics(const std::filesystem::path& metrics_file);

}  // namespace exploitlab

#endif  // EXPLOITLAB_TRAINER_H_
