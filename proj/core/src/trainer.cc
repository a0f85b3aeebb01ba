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

#include "exploitlab/trainer.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "exploitlab/checkpoint.h"
#include "exploitlab/errors.h"
#include "exploitlab/hash.h"
#include "exploitlab/parallel.h"
#include "exploitlab/rng.h"
#include "exploitlab/rollout.h"

namespace exploitlab {
namespace fs = std::filesystem;

namespace {

constexpr uint64_t kInitTag = 1;
constexpr uint64_t kCollectTag = 2;
constexpr uint64_t kUpdateTag = 3;
constexpr const char* kVersion = "0.1.0";

enum class Phase { kProtagonist, kOpponents };

const char* PhaseName(Phase phase) {
  return phase == Phase::kProtagonist ? "protagonist" : "opponents";
}

struct Learner {
  std::string name;
  uint64_t id = 0;
  int seat = 0;
  PolicyParams params;
  AdamState adam;
  int64_t steps = 0;
  int64_t updates = 0;
};

void WriteJsonFile(const fs::path& path, const nlohmann::json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

nlohmann::json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.filename().string(), e.what());
  }
}

nlohmann::json JsonOrNull(const std::optional<std::array<double, kNumAgents>>& v) {
  if (!v) return nullptr;
  return nlohmann::json::array({(*v)[0], (*v)[1]});
}

class Run {
 public:
  Run(RunConfig config, fs::path dir, TrainOptions options)
      : config_(std::move(config)), dir_(std::move(dir)), options_(std::move(options)) {
    spec_ = MakeGame(config_.env)->spec();
    if (config_.mode == RunMode::kAttack) {
      victim_ = LoadVictim(config_.victim_checkpoint, config_.env, config_.attacked_seat);
      victim_seat_ = spec_.SeatOf(config_.attacked_seat);
    }
    BuildLearners();
  }

  void Start() {
    fs::create_directories(dir_ / kCheckpointDir);
    WriteJsonFile(dir_ / kConfigFile, nlohmann::json(config_));
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["mode"] = RunModeName(config_.mode);
    manifest["config_hash"] = ConfigHash(config_);
    manifest["workers"] = options_.workers;
    manifest["seeds"]["run"] = config_.seed;
    for (const Learner& l : learners_) {
      manifest["seeds"]["init"][l.name] = DeriveSeed(config_.seed, {kInitTag, l.id});
      manifest["policies"][l.name] = spec_.agent_roles[l.seat];
    }
    if (victim_) {
      manifest["victim"] = {{"checkpoint", config_.victim_checkpoint},
                            {"policy", victim_->name},
                            {"params_hash", victim_->params_hash},
                            {"file_hash", victim_->file_hash}};
    }
    WriteJsonFile(dir_ / kManifestFile, manifest);
    std::ofstream(dir_ / kMetricsFile, std::ios::binary | std::ios::trunc);
  }

  void Restore(const Container& ckpt) {
    const nlohmann::json& meta = ckpt.meta;
    if (meta.value("config_hash", std::string()) != ConfigHash(config_)) {
      throw ConfigError("config_hash", "checkpoint was written for a different config.json");
    }
    for (Learner& l : learners_) {
      l.params = GetPolicy(ckpt, l.name);
      const nlohmann::json& entry = meta.at("policies").at(l.name);
      l.steps = entry.at("steps").get<int64_t>();
      l.updates = entry.at("updates").get<int64_t>();
      l.adam.step = entry.at("adam_step").get<int64_t>();
      l.adam.m = ckpt.tensors.at("adam/" + l.name + "/m");
      l.adam.v = ckpt.tensors.at("adam/" + l.name + "/v");
    }
    total_steps_ = meta.at("total_env_steps").get<int64_t>();
    phase_ = meta.at("phase").get<std::string>() == "opponents" ? Phase::kOpponents
                                                                : Phase::kProtagonist;
    phase_steps_ = meta.at("phase_steps").get<int64_t>();
    if (victim_ && meta.at("victim").at("params_hash").get<std::string>() != victim_->params_hash) {
      throw InvariantViolation("victim parameters changed since the run started");
    }
    const uintmax_t offset = meta.at("metrics_offset").get<uintmax_t>();
    const fs::path metrics = dir_ / kMetricsFile;
    if (!fs::exists(metrics) || fs::file_size(metrics) < offset) {
      throw IntegrityError("metrics.jsonl is shorter than the checkpoint records");
    }
    fs::resize_file(metrics, offset);
  }

  RunSummary Loop() {
    metrics_.open(dir_ / kMetricsFile, std::ios::binary | std::ios::app);
    if (!metrics_) throw std::runtime_error("cannot open metrics log");
    RunSummary summary;
    while (!Done()) {
      const int64_t before = total_steps_;
      Iterate();
      const bool crossed = total_steps_ / config_.checkpoint_every !=
                           before / config_.checkpoint_every;
      const bool stop = options_.stop_after_steps && total_steps_ >= *options_.stop_after_steps;
      if ((crossed || stop) && !Done()) {
        summary.last_checkpoint = WriteCheckpoint(
            dir_ / kCheckpointDir / ("step-" + std::to_string(total_steps_) + ".ckpt"), false);
      }
      if (stop && !Done()) return Summarize(summary, false);
    }
    VerifyVictim(true);
    summary.last_checkpoint = WriteCheckpoint(dir_ / kFinalCheckpoint, true);
    if (config_.mode == RunMode::kAttack) WriteReturnCurve();
    return Summarize(summary, true);
  }

 private:
  Architecture ArchFor(int seat) const {
    Architecture arch;
    arch.obs_dim = spec_.obs_dim[seat];
    arch.hidden = config_.hidden;
    arch.action_space = spec_.action_space[seat];
    return arch;
  }

  void AddLearner(const std::string& name, int seat) {
    Learner l;
    l.name = name;
    l.id = learners_.size();
    l.seat = seat;
    l.params = InitPolicy(ArchFor(seat), DeriveSeed(config_.seed, {kInitTag, l.id}));
    learners_.push_back(std::move(l));
  }

  void BuildLearners() {
    switch (config_.mode) {
      case RunMode::kSelfplay:
        if (config_.shared_policy) {
          AddLearner("shared", 0);
        } else {
          AddLearner(spec_.agent_roles[0], 0);
          AddLearner(spec_.agent_roles[1], 1);
        }
        break;
      case RunMode::kPbrl: {
        const int seat = spec_.SeatOf(config_.protagonist_seat);
        AddLearner("protagonist", seat);
        for (int i = 0; i < config_.population_size; ++i) {
          AddLearner("opponent-" + std::to_string(i), 1 - seat);
        }
        for (std::size_t a = 1; a < learners_.size(); ++a) {
          for (std::size_t b = a + 1; b < learners_.size(); ++b) {
            if (learners_[a].params == learners_[b].params) {
              throw InvariantViolation("two opponents share initial parameters");
            }
          }
        }
        break;
      }
      case RunMode::kAttack:
        AddLearner("adversary", 1 - victim_seat_);
        break;
    }
  }

  bool Done() const {
    for (const Learner& l : learners_) {
      if (l.steps < config_.timesteps) return false;
    }
    return true;
  }

  uint64_t CollectSeed(const Learner& l) const {
    return DeriveSeed(config_.seed, {kCollectTag, l.id, static_cast<uint64_t>(l.updates)});
  }

  CollectRequest BaseRequest(int64_t steps, const Learner& seed_owner) const {
    CollectRequest request;
    request.env = &config_.env;
    request.env_steps = steps;
    request.num_envs = config_.num_envs;
    request.seed = CollectSeed(seed_owner);
    return request;
  }

  // One PPO update for `l` on its own segments; returns the metrics record.
  nlohmann::json Update(Learner& l, const std::vector<RolloutBuffer>& segments,
                        const CollectResult& collected, int64_t steps, const char* phase) {
    const uint64_t seed =
        DeriveSeed(config_.seed, {kUpdateTag, l.id, static_cast<uint64_t>(l.updates)});
    const UpdateStats stats = PpoUpdate(l.params, l.adam, segments, config_.ppo, seed);
    l.steps += steps;
    nlohmann::json record;
    record["update"] = l.updates;
    record["policy"] = l.name;
    record["seat"] = spec_.agent_roles[l.seat];
    record["phase"] = phase;
    record["env_steps"] = l.steps;
    record["mean_return"] = JsonOrNull(collected.MeanReturns());
    record["episodes"] = collected.episode_returns.size();
    record["stats"] = stats;
    ++l.updates;
    return record;
  }

  void Emit(nlohmann::json record) {
    record["protagonist_steps"] = learners_.front().steps;
    record["total_env_steps"] = total_steps_;
    metrics_ << record.dump() << '\n';
    metrics_.flush();
    if (options_.progress) {
      std::ostringstream line;
      line << record["policy"].get<std::string>() << " update " << record["update"]
           << " steps " << record["env_steps"] << " return " << record["mean_return"].dump();
      options_.progress(line.str());
    }
  }

  void Iterate() {
    switch (config_.mode) {
      case RunMode::kSelfplay: return IterateSelfplay();
      case RunMode::kPbrl: return IteratePbrl();
      case RunMode::kAttack: return IterateAttack();
    }
  }

  void IterateSelfplay() {
    const int64_t len =
        std::min<int64_t>(config_.ppo.rollout_length, config_.timesteps - learners_[0].steps);
    CollectRequest request = BaseRequest(len, learners_[0]);
    for (Learner& l : learners_) request.learners.push_back(&l.params);
    if (config_.shared_policy) {
      request.seats[0].learner = 0;
      request.seats[1].learner = 0;
    } else {
      request.seats[0].learner = 0;
      request.seats[1].learner = 1;
    }
    const CollectResult collected = Collect(request);
    std::vector<nlohmann::json> records(learners_.size());
    ParallelFor(learners_.size(), options_.workers, [&](std::size_t k) {
      records[k] = Update(learners_[k], collected.segments[k], collected, len, "selfplay");
    });
    total_steps_ += len;
    for (auto& r : records) Emit(std::move(r));
  }

  void IteratePbrl() {
    Learner& protagonist = learners_.front();
    const int other_seat = 1 - protagonist.seat;
    if (phase_ == Phase::kProtagonist) {
      // Phase length is fixed at the phase start.
      const int64_t segment = std::min(config_.alternation_period,
                                       config_.timesteps - (protagonist.steps - phase_steps_));
      const int64_t len = std::min<int64_t>(config_.ppo.rollout_length, segment - phase_steps_);
      CollectRequest request = BaseRequest(len, protagonist);
      request.learners.push_back(&protagonist.params);
      request.seats[protagonist.seat].learner = 0;
      for (std::size_t i = 1; i < learners_.size(); ++i) {
        request.seats[other_seat].frozen.push_back(&learners_[i].params);
      }
      const CollectResult collected = Collect(request);
      nlohmann::json record =
          Update(protagonist, collected.segments[0], collected, len, "protagonist");
      total_steps_ += len;
      phase_steps_ += len;
      if (phase_steps_ >= segment) {
        phase_ = Phase::kOpponents;
        phase_steps_ = 0;
      }
      Emit(std::move(record));
      return;
    }
    const int64_t segment = std::min(config_.alternation_period,
                                     config_.timesteps - (learners_[1].steps - phase_steps_));
    const int64_t len = std::min<int64_t>(config_.ppo.rollout_length, segment - phase_steps_);
    const std::size_t n = learners_.size() - 1;
    std::vector<nlohmann::json> records(n);
    ParallelFor(n, options_.workers, [&](std::size_t i) {
      Learner& opponent = learners_[i + 1];
      CollectRequest request = BaseRequest(len, opponent);
      request.learners.push_back(&opponent.params);
      request.seats[opponent.seat].learner = 0;
      request.seats[protagonist.seat].frozen.push_back(&protagonist.params);
      const CollectResult collected = Collect(request);
      records[i] = Update(opponent, collected.segments[0], collected, len, "opponents");
    });
    total_steps_ += static_cast<int64_t>(n) * len;
    phase_steps_ += len;
    if (phase_steps_ >= segment) {
      phase_ = Phase::kProtagonist;
      phase_steps_ = 0;
    }
    for (auto& r : records) Emit(std::move(r));
  }

  void IterateAttack() {
    Learner& adversary = learners_.front();
    const int64_t len =
        std::min<int64_t>(config_.ppo.rollout_length, config_.timesteps - adversary.steps);
    CollectRequest request = BaseRequest(len, adversary);
    request.learners.push_back(&adversary.params);
    request.seats[adversary.seat].learner = 0;
    request.seats[victim_seat_].frozen.push_back(&victim_->params);
    const CollectResult collected = Collect(request);
    nlohmann::json record = Update(adversary, collected.segments[0], collected, len, "attack");
    total_steps_ += len;
    Emit(std::move(record));
  }

  void VerifyVictim(bool check_file) const {
    if (!victim_) return;
    if (victim_->params.Hash() != victim_->params_hash) {
      throw InvariantViolation("victim parameters changed during the attack");
    }
    if (check_file && ContainerHash(config_.victim_checkpoint) != victim_->file_hash) {
      throw InvariantViolation("victim checkpoint file changed during the attack");
    }
  }

  fs::path WriteCheckpoint(const fs::path& path, bool completed) {
    VerifyVictim(false);
    metrics_.flush();
    Container c;
    c.meta["kind"] = "run";
    c.meta["mode"] = RunModeName(config_.mode);
    c.meta["config_hash"] = ConfigHash(config_);
    c.meta["env"] = EnvConfigToJson(config_.env);
    c.meta["total_env_steps"] = total_steps_;
    c.meta["metrics_offset"] = fs::file_size(dir_ / kMetricsFile);
    c.meta["phase"] = PhaseName(phase_);
    c.meta["phase_steps"] = phase_steps_;
    c.meta["completed"] = completed;
    if (victim_) {
      c.meta["victim"] = {{"policy", victim_->name},
                          {"params_hash", victim_->params_hash},
                          {"file_hash", victim_->file_hash}};
    }
    for (const Learner& l : learners_) {
      PutPolicy(c, l.name, l.params,
                {{"steps", l.steps},
                 {"updates", l.updates},
                 {"seat", spec_.agent_roles[l.seat]},
                 {"adam_step", l.adam.step}});
      c.tensors["adam/" + l.name + "/m"] = l.adam.m;
      c.tensors["adam/" + l.name + "/v"] = l.adam.v;
    }
    WriteContainer(path, c);
    return path;
  }

  void WriteReturnCurve() {
    const Learner& adversary = learners_.front();
    nlohmann::json points = nlohmann::json::array();
    for (const nlohmann::json& r : ReadMetrics(dir_ / kMetricsFile)) {
      if (r.at("mean_return").is_null()) continue;
      points.push_back({r.at("env_steps"), r.at("mean_return")[adversary.seat]});
    }
    nlohmann::json curve;
    curve["points"] = points;
    curve["meta"] = {{"env", EnvName(config_.env)},
                     {"victim_checkpoint", config_.victim_checkpoint},
                     {"victim_hash", victim_->params_hash},
                     {"adversary_seed", config_.seed},
                     {"adversary_seat", spec_.agent_roles[adversary.seat]},
                     {"attacked_seat", config_.attacked_seat}};
    WriteJsonFile(dir_ / kReturnCurveFile, curve);
  }

  RunSummary Summarize(RunSummary summary, bool completed) const {
    summary.completed = completed;
    summary.total_env_steps = total_steps_;
    for (const Learner& l : learners_) {
      summary.policy_steps[l.name] = l.steps;
      summary.policy_hashes[l.name] = l.params.Hash();
    }
    return summary;
  }

  RunConfig config_;
  fs::path dir_;
  TrainOptions options_;
  GameSpec spec_;
  std::optional<VictimPolicy> victim_;
  int victim_seat_ = 0;
  std::vector<Learner> learners_;
  int64_t total_steps_ = 0;
  Phase phase_ = Phase::kProtagonist;
  int64_t phase_steps_ = 0;
  std::ofstream metrics_;
};

}  // namespace

VictimPolicy LoadVictim(const fs::path& checkpoint, const EnvConfig& env,
                        const std::string& attacked_seat) {
  if (!fs::exists(checkpoint)) {
    throw ConfigError("victim_checkpoint", "no such file: " + checkpoint.string());
  }
  const Container c = ReadContainer(checkpoint);
  if (!c.meta.contains("env") || c.meta.at("env") != EnvConfigToJson(env)) {
    throw UsageError("victim checkpoint was trained on a different environment config");
  }
  const nlohmann::json& policies = c.meta.at("policies");
  std::string name;
  for (const std::string candidate : {std::string("protagonist"), attacked_seat,
                                      std::string("shared")}) {
    if (policies.contains(candidate)) {
      name = candidate;
      break;
    }
  }
  if (name.empty()) {
    throw UsageError("victim checkpoint has no policy for seat " + attacked_seat);
  }
  const GameSpec spec = MakeGame(env)->spec();
  const int seat = spec.SeatOf(attacked_seat);
  VictimPolicy victim;
  victim.params = GetPolicy(c, name);
  if (victim.params.arch().obs_dim != spec.obs_dim[seat] ||
      victim.params.arch().action_space != spec.action_space[seat]) {
    throw UsageError("victim policy '" + name + "' does not fit seat " + attacked_seat);
  }
  if (policies.at(name).contains("seat") &&
      policies.at(name).at("seat").get<std::string>() != attacked_seat &&
      !IsSymmetric(env)) {
    throw UsageError("victim policy '" + name + "' was trained at another seat");
  }
  victim.name = name;
  victim.trained_steps = policies.at(name).value("steps", int64_t{0});
  victim.params_hash = victim.params.Hash();
  victim.file_hash = ContainerHash(checkpoint);
  return victim;
}

RunConfig ResolveRunConfig(RunConfig config) {
  MaterializeDefaults(config);
  if (config.mode == RunMode::kAttack && config.timesteps == 0) {
    if (config.victim_checkpoint.empty()) {
      throw ConfigError("victim_checkpoint", "required for attack runs");
    }
    const VictimPolicy victim =
        LoadVictim(config.victim_checkpoint, config.env, config.attacked_seat);
    config.timesteps = 2 * victim.trained_steps;
  }
  Validate(config);
  if (config.mode == RunMode::kAttack && config.timesteps < 1) {
    throw ConfigError("timesteps", "victim checkpoint records no training steps");
  }
  return config;
}

RunSummary Train(const RunConfig& raw, const fs::path& run_dir, const TrainOptions& options) {
  const RunConfig config = ResolveRunConfig(raw);
  if (fs::exists(run_dir / kFinalCheckpoint) || LatestCheckpoint(run_dir)) {
    throw UsageError("run directory " + run_dir.string() + " already holds a run; use resume");
  }
  Run run(config, run_dir, options);
  run.Start();
  return run.Loop();
}

RunSummary TrainSelfplay(const RunConfig& config, const fs::path& run_dir,
                         const TrainOptions& options) {
  if (config.mode != RunMode::kSelfplay) throw ConfigError("mode", "expected selfplay");
  return Train(config, run_dir, options);
}

RunSummary TrainPbrl(const RunConfig& config, const fs::path& run_dir,
                     const TrainOptions& options) {
  if (config.mode != RunMode::kPbrl) throw ConfigError("mode", "expected pbrl");
  return Train(config, run_dir, options);
}

RunSummary TrainAttack(const RunConfig& config, const fs::path& run_dir,
                       const TrainOptions& options) {
  if (config.mode != RunMode::kAttack) throw ConfigError("mode", "expected attack");
  return Train(config, run_dir, options);
}

std::optional<fs::path> LatestCheckpoint(const fs::path& run_dir) {
  const fs::path dir = run_dir / kCheckpointDir;
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<fs::path> best;
  long long best_step = -1;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("step-", 0) != 0 || entry.path().extension() != ".ckpt") continue;
    try {
      const long long step = std::stoll(name.substr(5));
      if (step > best_step) {
        best_step = step;
        best = entry.path();
      }
    } catch (const std::exception&) {
    }
  }
  return best;
}

RunSummary Resume(const fs::path& run_dir, const TrainOptions& options) {
  RunConfig config;
  try {
    config = ReadJsonFile(run_dir / kConfigFile).get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(kConfigFile, e.what());
  }
  Validate(config);
  if (fs::exists(run_dir / kFinalCheckpoint)) {
    const Container final = ReadContainer(run_dir / kFinalCheckpoint);
    if (final.meta.value("config_hash", std::string()) != ConfigHash(config)) {
      throw ConfigError("config_hash", "final checkpoint was written for a different config.json");
    }
    RunSummary summary;
    summary.completed = true;
    summary.already_complete = true;
    summary.total_env_steps = final.meta.at("total_env_steps").get<int64_t>();
    summary.last_checkpoint = run_dir / kFinalCheckpoint;
    for (const auto& item : final.meta.at("policies").items()) {
      summary.policy_steps[item.key()] = item.value().at("steps").get<int64_t>();
      summary.policy_hashes[item.key()] = item.value().at("hash").get<std::string>();
    }
    return summary;
  }
  const auto latest = LatestCheckpoint(run_dir);
  if (!latest) throw UsageError("no checkpoint to resume in " + run_dir.string());
  const Container ckpt = ReadContainer(*latest);
  Run run(config, run_dir, options);
  run.Restore(ckpt);
  return run.Loop();
}

std::vector<nlohmann::json> ReadMetrics(const fs::path& metrics_file) {
  std::ifstream in(metrics_file, std::ios::binary);
  if (!in) throw UsageError("cannot read " + metrics_file.string());
  std::vector<nlohmann::json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError("malformed metrics line in " + metrics_file.string());
    }
  }
  return records;
}

}  // namespace exploitlab
