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

#include "cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

#include "exploitlab/checkpoint.h"
#include "exploitlab/env.h"
#include "exploitlab/errors.h"
#include "exploitlab/eval.h"
#include "exploitlab/parallel.h"
#include "exploitlab/policy.h"
#include "exploitlab/rng.h"
#include "exploitlab/trainer.h"

namespace exploitlab::cli {
namespace fs = std::filesystem;

namespace {

enum class Kind { kInt, kUint, kDouble, kBool, kString, kIntList };

// A flag that writes one field of the run config document.
struct FieldFlag {
  const char* flag;
  const char* pointer;
  Kind kind;
  const char* help;
};

const std::vector<FieldFlag> kCommonFlags = {
    {"--seed", "/seed", Kind::kUint, "Run seed (default 0)"},
    {"--timesteps", "/timesteps", Kind::kInt,
     "Per-policy env-step budget (300000); attack: adversary budget, default twice the victim's"},
    {"--checkpoint-every", "/checkpoint_every", Kind::kInt, "Env steps between checkpoints (default 50000)"},
    {"--num-envs", "/num_envs", Kind::kInt, "Environment instances per rollout (default 8)"},
    {"--hidden", "/hidden", Kind::kIntList, "Hidden layer widths, comma separated (default 64,64)"},
    {"--env", "/env/name", Kind::kString, "lasertag or simplepush (default lasertag)"},
    {"--map", "/env/map", Kind::kString, "Laser Tag built-in map: arena11 or arena9"},
    {"--map-file", "/env/map_file", Kind::kString, "Laser Tag map file ('#', '.', 'S')"},
    {"--max-episode-steps", "/env/max_episode_steps", Kind::kInt, "Episode length (300 / 25)"},
    {"--tag-respawn", "/env/tag_respawn", Kind::kBool, "Laser Tag: respawn tagged agents (true)"},
    {"--view-front", "/env/view_front", Kind::kInt, "Laser Tag view rows ahead (17)"},
    {"--view-side", "/env/view_side", Kind::kInt, "Laser Tag view columns per side (10)"},
    {"--view-back", "/env/view_back", Kind::kInt, "Laser Tag view rows behind (2)"},
    {"--comm-tokens", "/env/comm_tokens", Kind::kInt, "Simple Push cheap-talk tokens K (50)"},
    {"--penalty-coefficient", "/env/penalty_coefficient", Kind::kDouble, "Simple Push aggressor distance penalty (1.0)"},
    {"--max-speed", "/env/max_speed", Kind::kDouble, "Simple Push speed cap (none)"},
    {"--clip", "/ppo/clip", Kind::kDouble, "PPO clip range (0.2)"},
    {"--epochs", "/ppo/epochs", Kind::kInt, "PPO epochs per update (4)"},
    {"--minibatches", "/ppo/minibatches", Kind::kInt, "Minibatches per epoch (4)"},
    {"--lr", "/ppo/learning_rate", Kind::kDouble, "Learning rate (3e-4)"},
    {"--value-coef", "/ppo/value_coef", Kind::kDouble, "Value loss coefficient (0.5)"},
    {"--entropy-coef", "/ppo/entropy_coef", Kind::kDouble, "Entropy bonus coefficient (0.01)"},
    {"--gamma", "/ppo/gamma", Kind::kDouble, "Discount (0.99)"},
    {"--gae-lambda", "/ppo/gae_lambda", Kind::kDouble, "GAE lambda (0.95)"},
    {"--rollout-length", "/ppo/rollout_length", Kind::kInt, "Env steps per update (4096)"},
    {"--max-grad-norm", "/ppo/max_grad_norm", Kind::kDouble, "Gradient norm clip (0.5)"},
    {"--target-kl", "/ppo/target_kl", Kind::kDouble, "Approx-KL early stop (off)"},
};

const std::vector<FieldFlag> kSelfplayFlags = {
    {"--shared-policy", "/shared_policy", Kind::kBool,
     "One policy for both seats (default true for Laser Tag)"},
};
const std::vector<FieldFlag> kPbrlFlags = {
    {"--population", "/population_size", Kind::kInt, "Number of opponents n (required)"},
    {"--alternation-period", "/alternation_period", Kind::kInt, "Env steps per phase (rollout length)"},
    {"--protagonist-seat", "/protagonist_seat", Kind::kString, "player-0 / aggressor by default"},
};
const std::vector<FieldFlag> kAttackFlags = {
    {"--victim", "/victim_checkpoint", Kind::kString, "Victim checkpoint (required)"},
    {"--attacked-seat", "/attacked_seat", Kind::kString, "Seat the victim plays (player-0 / aggressor)"},
};

std::string FieldName(const std::string& pointer) {
  std::string name = pointer.substr(1);
  std::replace(name.begin(), name.end(), '/', '.');
  return name;
}

nlohmann::json ConvertFlag(const FieldFlag& f, const std::string& text) {
  const std::string field = FieldName(f.pointer);
  try {
    std::size_t used = 0;
    switch (f.kind) {
      case Kind::kInt: {
        const long long v = std::stoll(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Kind::kUint: {
        if (!text.empty() && text[0] == '-') break;
        const unsigned long long v = std::stoull(text, &used, 0);
        if (used != text.size()) break;
        return v;
      }
      case Kind::kDouble: {
        const double v = std::stod(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Kind::kBool:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        break;
      case Kind::kString:
        return text;
      case Kind::kIntList: {
        nlohmann::json list = nlohmann::json::array();
        std::size_t start = 0;
        while (start <= text.size()) {
          const std::size_t comma = std::min(text.find(',', start), text.size());
          const std::string item = text.substr(start, comma - start);
          const long long v = std::stoll(item, &used);
          if (used != item.size()) throw std::invalid_argument(item);
          list.push_back(v);
          start = comma + 1;
        }
        return list;
      }
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError(field, "cannot parse '" + text + "'");
}

// String storage for field flags of one subcommand.
struct FlagSet {
  std::vector<FieldFlag> specs;
  std::map<std::string, std::string> values;
  std::vector<CLI::Option*> options;

  void Add(CLI::App* app, const std::vector<FieldFlag>& flags) {
    for (const FieldFlag& f : flags) {
      specs.push_back(f);
      options.push_back(app->add_option(f.flag, values[f.flag], f.help));
    }
  }

  nlohmann::json Overrides() const {
    nlohmann::json doc = nlohmann::json::object();
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (options[i]->count() == 0) continue;
      doc[nlohmann::json::json_pointer(specs[i].pointer)] =
          ConvertFlag(specs[i], values.at(specs[i].flag));
    }
    return doc;
  }
};

nlohmann::json ReadJson(const fs::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(field, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(field, path.string() + ": " + e.what());
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Layers `patch` onto `base`; an env of a different name replaces the whole
// env block instead of merging into it.
void Layer(nlohmann::json& base, const nlohmann::json& patch) {
  if (patch.contains("env") && patch["env"].contains("name") && base.contains("env") &&
      base["env"].value("name", std::string("lasertag")) != patch["env"]["name"]) {
    // Seat labels belong to the old env; let them default again.
    base.erase("env");
    base.erase("protagonist_seat");
    base.erase("attacked_seat");
  }
  base.merge_patch(patch);
}

RunConfig ParseDocument(const nlohmann::json& doc) {
  RunConfig config;
  try {
    config = doc.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", e.what());
  }
  return ResolveRunConfig(config);
}

struct RunFlags {
  std::string config_file;
  std::string preset;
  std::string scale = "desk";
  std::string out;
  int workers = 1;
  int64_t stop_after = -1;
  bool quiet = false;

  void Add(CLI::App* app, bool with_source) {
    if (with_source) {
      app->add_option("--config", config_file, "JSON run config; flags override its fields");
      app->add_option("--preset", preset, "Start from a bundled preset (see `preset --list`)");
      app->add_option("--scale", scale, "Preset scale: desk or paper")->capture_default_str();
    }
    app->add_option("--out", out, "Run directory (default runs/<name>)");
    app->add_option("--workers", workers, "Threads for independent learners; EXPLOITLAB_WORKERS wins")
        ->capture_default_str();
    app->add_option("--stop-after-steps", stop_after,
                    "Checkpoint and exit once this many env steps are consumed");
    app->add_flag("--quiet", quiet, "No per-update progress lines");
  }

  TrainOptions Options(std::ostream& err) const {
    TrainOptions options;
    options.workers = ResolveWorkerCount(workers);
    if (stop_after >= 0) options.stop_after_steps = stop_after;
    if (!quiet) options.progress = [&err](const std::string& line) { err << line << '\n'; };
    return options;
  }
};

nlohmann::json SummaryToJson(const RunSummary& s) {
  return {{"completed", s.completed},
          {"already_complete", s.already_complete},
          {"total_env_steps", s.total_env_steps},
          {"policy_steps", s.policy_steps},
          {"policy_hashes", s.policy_hashes},
          {"last_checkpoint", s.last_checkpoint.string()}};
}

std::string DefaultOut(const RunFlags& flags, const std::string& fallback) {
  if (!flags.out.empty()) return flags.out;
  if (!flags.config_file.empty()) return "runs/" + fs::path(flags.config_file).stem().string();
  if (!flags.preset.empty()) return "runs/" + flags.preset + "-" + flags.scale;
  return "runs/" + fallback;
}

// ------------------------------------------------------------ evaluate

struct LoadedPolicy {
  PolicyParams params;
  EnvConfig env;
  std::string seat;
};

LoadedPolicy LoadPolicy(const fs::path& path, std::string name) {
  const Container c = ReadContainer(path);
  if (!c.meta.contains("policies") || c.meta["policies"].empty()) {
    throw UsageError(path.string() + " holds no policies");
  }
  const auto& policies = c.meta["policies"];
  if (name.empty()) {
    for (const char* candidate : {"protagonist", "shared", "adversary"}) {
      if (policies.contains(candidate)) {
        name = candidate;
        break;
      }
    }
    if (name.empty()) name = policies.begin().key();
  }
  LoadedPolicy out{GetPolicy(c, name), EnvConfigFromJson(c.meta.at("env")), ""};
  out.seat = policies.at(name).value("seat", std::string());
  return out;
}

int Evaluate(const std::string& checkpoint, const std::string& policy_name,
             std::string seat_label, const std::string& opponent,
             const std::string& opponent_policy, int episodes, uint64_t seed, bool greedy,
             const std::string& record, std::ostream& out) {
  if (episodes < 1) throw ConfigError("episodes", "must be >= 1");
  const LoadedPolicy main = LoadPolicy(checkpoint, policy_name);
  const GameSpec spec = MakeGame(main.env)->spec();
  if (seat_label.empty()) seat_label = main.seat.empty() ? spec.agent_roles[0] : main.seat;
  const int seat = spec.SeatOf(seat_label);
  std::optional<LoadedPolicy> other;
  if (opponent != "random") {
    other = LoadPolicy(opponent, opponent_policy);
    if (EnvConfigToJson(other->env) != EnvConfigToJson(main.env)) {
      throw UsageError("opponent checkpoint uses a different environment");
    }
  }
  auto act = [&](const PolicyParams& params, const Observation& obs, CounterRng& rng) {
    const ActionDistribution dist = PolicyForward(params, obs).distribution;
    return greedy ? dist.Mode() : dist.Sample(rng);
  };
  std::vector<double> returns[kNumAgents];
  for (int e = 0; e < episodes; ++e) {
    CounterRng rng(DeriveSeed(seed, {static_cast<uint64_t>(e)}));
    const Trajectory traj = RecordEpisode(
        main.env, DeriveSeed(seed, {0x65, static_cast<uint64_t>(e)}),
        [&](int s, const Observation& obs, CounterRng& r) -> Action {
          if (s == seat) return act(main.params, obs, r);
          if (other) return act(other->params, obs, r);
          return RandomAction(spec.action_space[s], r);
        },
        rng);
    for (int s = 0; s < kNumAgents; ++s) returns[s].push_back(EpisodeReturn(traj, s, 1.0));
    if (e == 0 && !record.empty()) WriteTrajectoryJsonl(traj, record);
  }
  nlohmann::json result;
  result["episodes"] = episodes;
  result["policy_seat"] = seat_label;
  for (int s = 0; s < kNumAgents; ++s) {
    const MeanCi ci = BootstrapMeanCi(returns[s]);
    result["returns"][spec.agent_roles[s]] = {
        {"mean", ci.mean}, {"ci_low", ci.lower}, {"ci_high", ci.upper}};
  }
  out << result.dump(2) << '\n';
  return kExitSuccess;
}

// ------------------------------------------------------------ replay

int Replay(const std::string& path, bool quiet, std::ostream& out, std::ostream& err) {
  const Trajectory traj = ReadTrajectoryJsonl(path);
  const EnvConfig env = EnvConfigFromJson(traj.env_config);
  auto game = MakeGame(env);
  game->Reset(traj.seed);
  std::array<double, kNumAgents> total{};
  if (!quiet) out << "t=0\n" << game->Render() << '\n';
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const StepResult r = game->Step(traj.steps[t].actions);
    for (int s = 0; s < kNumAgents; ++s) {
      total[s] += r.rewards[s];
      if (r.rewards[s] != traj.steps[t].rewards[s]) {
        err << "replay diverges from the recording at step " << t << '\n';
        return kExitRuntimeError;
      }
    }
    if (!quiet) {
      out << "t=" << t + 1 << " rewards " << r.rewards[0] << ' ' << r.rewards[1] << '\n'
          << game->Render() << '\n';
    }
  }
  out << "steps " << traj.steps.size() << " returns " << total[0] << ' ' << total[1] << '\n';
  return kExitSuccess;
}

// ------------------------------------------------------------ report

std::vector<fs::path> ExpandRunDirs(const fs::path& dir) {
  if (fs::exists(dir / kConfigFile)) return {dir};
  std::vector<fs::path> runs;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!fs::exists(entry.path() / kConfigFile)) continue;
      const nlohmann::json c = ReadJson(entry.path() / kConfigFile, "run");
      if (c.value("mode", std::string()) == "attack") runs.push_back(entry.path());
    }
  }
  std::sort(runs.begin(), runs.end());
  if (runs.empty()) throw UsageError("no attack runs under " + dir.string());
  return runs;
}

int Report(const std::vector<std::string>& specs, const std::string& threshold_kind,
           const std::optional<double>& baseline, int window, const std::string& out_dir,
           bool no_plot, std::ostream& out) {
  std::vector<AttackRun> runs;
  for (const std::string& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("run", "expected CONDITION=DIR, got '" + spec + "'");
    }
    const std::string condition = spec.substr(0, eq);
    for (const fs::path& dir : ExpandRunDirs(spec.substr(eq + 1))) {
      const RunConfig config = ReadJson(dir / kConfigFile, "run").get<RunConfig>();
      if (config.mode != RunMode::kAttack) throw UsageError(dir.string() + " is not an attack run");
      AttackRun run;
      run.condition = condition;
      run.env = EnvName(config.env);
      run.id = dir.filename().string();
      run.curve = LoadAttackCurve(dir);
      run.threshold.window = window;
      std::string kind = threshold_kind;
      if (kind.empty()) kind = IsSymmetric(config.env) ? "zero" : "baseline";
      if (kind == "baseline") {
        run.threshold.kind = ThresholdKind::kBaselineReturn;
        if (baseline) {
          run.threshold.baseline = *baseline;
        } else {
          const GameSpec gs = MakeGame(config.env)->spec();
          const std::string adversary_seat = gs.agent_roles[1 - gs.SeatOf(config.attacked_seat)];
          run.threshold.baseline = BaselineThreshold(
              fs::path(config.victim_checkpoint).parent_path(), adversary_seat);
        }
      } else if (kind != "zero") {
        throw ConfigError("threshold", "expected zero or baseline");
      }
      runs.push_back(std::move(run));
    }
  }
  EmitReport(runs, out_dir, !no_plot);
  out << SummaryJson(BuildReport(runs)).dump(2) << '\n';
  return kExitSuccess;
}

// ------------------------------------------------------------ seed grid

int SeedGridCommand(const RunConfig& victim_template, int victims, int adversaries,
                    int64_t adversary_timesteps, const fs::path& root, bool execute,
                    const TrainOptions& options, std::ostream& out) {
  SeedGrid grid = MakeSeedGrid(victim_template, victims, adversaries, adversary_timesteps);
  const fs::path abs_root = fs::absolute(root);
  nlohmann::json plan;
  for (std::size_t v = 0; v < grid.victims.size(); ++v) {
    const fs::path file = abs_root / "configs" / (grid.victim_dirs[v] + ".json");
    WriteText(file, nlohmann::json(grid.victims[v]).dump(2) + "\n");
    plan["victims"].push_back({{"config", file.string()},
                               {"run_dir", (abs_root / grid.victim_dirs[v]).string()},
                               {"seed", grid.victims[v].seed}});
  }
  for (std::size_t a = 0; a < grid.attacks.size(); ++a) {
    grid.attacks[a].victim_checkpoint = (abs_root / grid.attacks[a].victim_checkpoint).string();
    const fs::path file = abs_root / "configs" / (grid.attack_dirs[a] + ".json");
    WriteText(file, nlohmann::json(grid.attacks[a]).dump(2) + "\n");
    plan["attacks"].push_back({{"config", file.string()},
                               {"run_dir", (abs_root / grid.attack_dirs[a]).string()},
                               {"seed", grid.attacks[a].seed}});
  }
  WriteText(abs_root / "grid.json", plan.dump(2) + "\n");
  if (execute) {
    auto run_one = [&](const RunConfig& config, const fs::path& dir) {
      if (fs::exists(dir / kFinalCheckpoint)) return;
      if (LatestCheckpoint(dir)) {
        Resume(dir, options);
      } else {
        Train(config, dir, options);
      }
    };
    for (std::size_t v = 0; v < grid.victims.size(); ++v) {
      run_one(grid.victims[v], abs_root / grid.victim_dirs[v]);
    }
    for (std::size_t a = 0; a < grid.attacks.size(); ++a) {
      run_one(grid.attacks[a], abs_root / grid.attack_dirs[a]);
    }
  }
  out << plan.dump(2) << '\n';
  return kExitSuccess;
}

}  // namespace

RunConfig ResolveConfig(RunMode mode, const std::optional<std::string>& preset,
                        const std::string& scale, const std::optional<fs::path>& config_file,
                        const nlohmann::json& overrides) {
  nlohmann::json doc = nlohmann::json::object();
  if (preset) {
    const RunConfig base = Preset(*preset, scale);
    if (base.mode != mode) {
      throw ConfigError("preset", "preset " + *preset + " is a " + RunModeName(base.mode) + " run");
    }
    doc = base;
  }
  if (config_file) {
    const nlohmann::json file = ReadJson(*config_file, "config");
    if (!file.is_object()) throw ConfigError("config", "must be a JSON object");
    if (file.contains("mode") && file["mode"] != RunModeName(mode)) {
      throw ConfigError("mode", "config file declares mode " + file["mode"].dump() +
                                    " but the command runs " + RunModeName(mode));
    }
    Layer(doc, file);
  }
  Layer(doc, overrides);
  doc["mode"] = RunModeName(mode);
  return ParseDocument(doc);
}

RunConfig ResolveConfigFile(const fs::path& config_file) {
  return ParseDocument(ReadJson(config_file, "config"));
}

int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial-policy and population-based robustness experiments"};
  app.require_subcommand(1);

  struct TrainCommand {
    RunMode mode;
    CLI::App* app;
    FlagSet fields;
    RunFlags run;
  };
  std::vector<std::unique_ptr<TrainCommand>> trains;
  auto add_train = [&](const char* name, RunMode mode, const char* help,
                       const std::vector<FieldFlag>& extra) {
    auto cmd = std::make_unique<TrainCommand>();
    cmd->mode = mode;
    cmd->app = app.add_subcommand(name, help);
    cmd->fields.Add(cmd->app, kCommonFlags);
    cmd->fields.Add(cmd->app, extra);
    cmd->run.Add(cmd->app, true);
    trains.push_back(std::move(cmd));
  };
  add_train("train-selfplay", RunMode::kSelfplay, "Self-play baseline training", kSelfplayFlags);
  add_train("train-pbrl", RunMode::kPbrl, "Protagonist training against an opponent population",
            kPbrlFlags);
  add_train("attack", RunMode::kAttack, "Train an adversary against a frozen victim",
            kAttackFlags);

  CLI::App* run_cmd = app.add_subcommand("run", "Run a config file; the mode comes from the file");
  std::string run_file;
  RunFlags run_flags;
  run_cmd->add_option("config", run_file, "JSON run config")->required();
  run_flags.Add(run_cmd, false);

  CLI::App* resume_cmd = app.add_subcommand("resume", "Continue a run from its newest checkpoint");
  std::string resume_dir;
  RunFlags resume_flags;
  resume_cmd->add_option("run_dir", resume_dir, "Run directory")->required();
  resume_flags.Add(resume_cmd, false);

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Play a checkpointed policy against an opponent");
  std::string eval_ckpt, eval_policy, eval_seat, eval_opponent = "random", eval_opp_policy,
                                                   eval_record;
  int eval_episodes = 100;
  uint64_t eval_seed = 0;
  bool eval_greedy = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint holding the policy")->required();
  eval_cmd->add_option("--policy", eval_policy, "Policy name inside the checkpoint");
  eval_cmd->add_option("--seat", eval_seat, "Seat the policy plays (its training seat)");
  eval_cmd->add_option("--opponent", eval_opponent, "Opponent checkpoint or 'random'")
      ->capture_default_str();
  eval_cmd->add_option("--opponent-policy", eval_opp_policy, "Policy name in the opponent checkpoint");
  eval_cmd->add_option("--episodes", eval_episodes, "Episodes to play")->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed")->capture_default_str();
  eval_cmd->add_flag("--greedy", eval_greedy, "Play distribution modes instead of sampling");
  eval_cmd->add_option("--record", eval_record, "Write the first episode as a JSONL trajectory");

  CLI::App* report_cmd = app.add_subcommand("report", "Aggregate attack runs into CSV/JSON/SVG");
  std::vector<std::string> report_runs;
  std::string report_threshold, report_out = "report";
  double report_baseline = 0.0;
  int report_window = 5;
  bool report_no_plot = false;
  report_cmd->add_option("--run", report_runs, "CONDITION=DIR (an attack run or a directory of them)")
      ->required();
  auto* baseline_opt =
      report_cmd->add_option("--baseline", report_baseline, "Fixed baseline threshold value");
  report_cmd->add_option("--threshold", report_threshold,
                         "zero or baseline (default: zero for symmetric games)");
  report_cmd->add_option("--window", report_window, "Smoothing window in rollouts")
      ->capture_default_str();
  report_cmd->add_option("--out", report_out, "Output directory")->capture_default_str();
  report_cmd->add_flag("--no-plot", report_no_plot, "Skip the SVG plot");

  CLI::App* replay_cmd = app.add_subcommand("replay", "Render a saved trajectory");
  std::string replay_file;
  bool replay_quiet = false;
  replay_cmd->add_option("trajectory", replay_file, "JSONL trajectory")->required();
  replay_cmd->add_flag("--summary", replay_quiet, "Only print totals");

  CLI::App* grid_cmd = app.add_subcommand("seed-grid", "Derive victim and attack configs");
  RunFlags grid_flags;
  grid_flags.Add(grid_cmd, true);
  int grid_victims = 5, grid_adversaries = 3;
  int64_t grid_adv_steps = 0;
  bool grid_execute = false;
  grid_cmd->add_option("--victims", grid_victims, "Victim seeds")->capture_default_str();
  grid_cmd->add_option("--adversaries", grid_adversaries, "Adversary seeds per victim")
      ->capture_default_str();
  grid_cmd->add_option("--adversary-timesteps", grid_adv_steps,
                       "Adversary budget (0 = twice the victim's)")
      ->capture_default_str();
  grid_cmd->add_flag("--execute", grid_execute, "Train every victim and attack in order");

  CLI::App* preset_cmd = app.add_subcommand("preset", "Print a bundled preset config");
  std::string preset_name, preset_scale = "desk";
  bool preset_list = false;
  preset_cmd->add_option("name", preset_name, "Preset name");
  preset_cmd->add_option("--scale", preset_scale, "desk or paper")->capture_default_str();
  preset_cmd->add_flag("--list", preset_list, "List preset names");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands()[0]->help());
      return kExitSuccess;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    for (auto& cmd : trains) {
      if (!cmd->app->parsed()) continue;
      const RunConfig config = ResolveConfig(
          cmd->mode, cmd->run.preset.empty() ? std::nullopt : std::optional(cmd->run.preset),
          cmd->run.scale,
          cmd->run.config_file.empty() ? std::nullopt
                                       : std::optional<fs::path>(cmd->run.config_file),
          cmd->fields.Overrides());
      const fs::path dir = DefaultOut(cmd->run, RunModeName(cmd->mode));
      const RunSummary summary = Train(config, dir, cmd->run.Options(err));
      out << SummaryToJson(summary).dump(2) << '\n';
      return kExitSuccess;
    }
    if (run_cmd->parsed()) {
      const RunConfig config = ResolveConfigFile(run_file);
      run_flags.config_file = run_file;
      const RunSummary summary =
          Train(config, DefaultOut(run_flags, RunModeName(config.mode)), run_flags.Options(err));
      out << SummaryToJson(summary).dump(2) << '\n';
      return kExitSuccess;
    }
    if (resume_cmd->parsed()) {
      const RunSummary summary = Resume(resume_dir, resume_flags.Options(err));
      if (summary.already_complete) err << "run already complete; nothing to do\n";
      out << SummaryToJson(summary).dump(2) << '\n';
      return kExitSuccess;
    }
    if (eval_cmd->parsed()) {
      return Evaluate(eval_ckpt, eval_policy, eval_seat, eval_opponent, eval_opp_policy,
                      eval_episodes, eval_seed, eval_greedy, eval_record, out);
    }
    if (report_cmd->parsed()) {
      return Report(report_runs, report_threshold,
                    baseline_opt->count() ? std::optional(report_baseline) : std::nullopt,
                    report_window, report_out, report_no_plot, out);
    }
    if (replay_cmd->parsed()) return Replay(replay_file, replay_quiet, out, err);
    if (grid_cmd->parsed()) {
      RunConfig base;
      if (!grid_flags.preset.empty()) {
        base = Preset(grid_flags.preset, grid_flags.scale);
      } else if (!grid_flags.config_file.empty()) {
        base = ResolveConfigFile(grid_flags.config_file);
      } else {
        throw ConfigError("config", "seed-grid needs --config or --preset");
      }
      return SeedGridCommand(base, grid_victims, grid_adversaries, grid_adv_steps,
                             grid_flags.out.empty() ? "grid" : grid_flags.out, grid_execute,
                             grid_flags.Options(err), out);
    }
    if (preset_cmd->parsed()) {
      if (preset_list || preset_name.empty()) {
        for (const std::string& name : PresetNames()) out << name << '\n';
        return kExitSuccess;
      }
      out << nlohmann::json(Preset(preset_name, preset_scale)).dump(2) << '\n';
      return kExitSuccess;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kExitInvariantViolation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitConfigError;
}

}  // namespace exploitlab::cli
