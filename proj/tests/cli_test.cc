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

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "exploitlab/checkpoint.h"
#include "exploitlab/errors.h"
#include "exploitlab/trainer.h"
#include "test_util.h"

namespace exploitlab::cli {
namespace {

namespace fs = std::filesystem;
using exploitlab::testing::TempDir;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome Invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = Main(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

nlohmann::json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

// Tiny Simple Push settings so CLI runs finish in well under a second.
std::vector<std::string> Tiny(std::vector<std::string> args, const fs::path& out) {
  for (const std::string s : {"--timesteps", "500", "--rollout-length", "250", "--hidden", "8",
                              "--num-envs", "1", "--epochs", "1", "--quiet", "--out"}) {
    args.push_back(s);
  }
  args.push_back(out.string());
  return args;
}

TEST(CliTest, AttackWithoutVictimNamesTheField) {
  try {
    ResolveConfig(RunMode::kAttack, std::nullopt, "desk", std::nullopt, nlohmann::json::object());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "victim_checkpoint");
  }
  const Outcome o = Invoke({"attack", "--env", "simplepush"});
  EXPECT_EQ(o.code, kExitConfigError);
  EXPECT_NE(o.err.find("victim_checkpoint"), std::string::npos);
}

TEST(CliTest, FlagsOverrideFileWhichOverridesDefaults) {
  TempDir dir;
  std::ofstream(dir / "c.json") << R"({"mode": "selfplay", "env": {"name": "simplepush", "comm_tokens": 25}, "seed": 4})";
  const RunConfig from_file = ResolveConfig(RunMode::kSelfplay, std::nullopt, "desk",
                                            dir / "c.json", nlohmann::json::object());
  EXPECT_EQ(std::get<push::PushConfig>(from_file.env).comm_tokens, 25);
  EXPECT_EQ(from_file.seed, 4u);

  const Outcome o = Invoke(Tiny({"train-selfplay", "--config", (dir / "c.json").string(),
                              "--comm-tokens", "50"},
                             dir / "run"));
  ASSERT_EQ(o.code, 0) << o.err;
  const nlohmann::json saved = ReadJson(dir / "run" / kConfigFile);
  EXPECT_EQ(saved.at("env").at("comm_tokens"), 50);
  EXPECT_EQ(saved.at("seed"), 4);
  EXPECT_EQ(nlohmann::json::parse(o.out).at("completed"), true);
}

TEST(CliTest, DefaultsAndPresets) {
  const RunConfig push = ResolveConfig(RunMode::kSelfplay, std::nullopt, "desk", std::nullopt,
                                       {{"env", {{"name", "simplepush"}}}});
  EXPECT_EQ(std::get<push::PushConfig>(push.env).comm_tokens, 50);
  EXPECT_FALSE(push.shared_policy);
  const RunConfig tag = ResolveConfig(RunMode::kSelfplay, std::nullopt, "desk", std::nullopt,
                                      nlohmann::json::object());
  EXPECT_TRUE(tag.shared_policy);
  EXPECT_EQ(tag.timesteps, 300000);

  const RunConfig preset = ResolveConfig(RunMode::kPbrl, "push-pbrl-n4", "paper", std::nullopt,
                                         {{"seed", 9}});
  EXPECT_EQ(preset.population_size, 4);
  EXPECT_EQ(preset.timesteps, 25'000'000);
  EXPECT_EQ(preset.seed, 9u);
  // Switching env drops the preset's env block entirely.
  const RunConfig switched = ResolveConfig(RunMode::kPbrl, "push-pbrl-n4", "desk", std::nullopt,
                                           {{"env", {{"name", "lasertag"}}}});
  EXPECT_EQ(EnvName(switched.env), "lasertag");

  const Outcome list = Invoke({"preset", "--list"});
  EXPECT_EQ(list.code, 0);
  EXPECT_NE(list.out.find("push-pbrl-n2"), std::string::npos);
  const Outcome shown = Invoke({"preset", "lasertag-pbrl-n20"});
  EXPECT_EQ(nlohmann::json::parse(shown.out).at("population_size"), 20);
}

TEST(CliTest, ModeMismatchInFile) {
  TempDir dir;
  std::ofstream(dir / "c.json") << R"({"mode": "pbrl", "population_size": 2})";
  const Outcome o = Invoke({"train-selfplay", "--config", (dir / "c.json").string()});
  EXPECT_EQ(o.code, kExitConfigError);
  EXPECT_NE(o.err.find("mode"), std::string::npos);
}

TEST(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(Invoke({"train-selfplay", "--no-such-flag"}).code, kExitConfigError);
  EXPECT_EQ(Invoke({}).code, kExitConfigError);
  EXPECT_EQ(Invoke({"train-pbrl", "--population", "0"}).code, kExitConfigError);
  EXPECT_EQ(Invoke({"train-selfplay", "--timesteps", "ten"}).code, kExitConfigError);
  const Outcome bad_env = Invoke({"train-selfplay", "--env", "chess"});
  EXPECT_EQ(bad_env.code, kExitConfigError);
  EXPECT_NE(bad_env.err.find("env"), std::string::npos);
  EXPECT_EQ(Invoke({"resume", "/nonexistent/run"}).code, kExitConfigError);
  EXPECT_EQ(Invoke({"train-selfplay", "--help"}).code, 0);
}

TEST(CliTest, RunSubcommandTakesModeFromFile) {
  TempDir dir;
  std::ofstream(dir / "c.json") << R"({"mode": "pbrl", "population_size": 2, "timesteps": 500,
    "hidden": [8], "num_envs": 1, "env": {"name": "simplepush"},
    "ppo": {"rollout_length": 250, "epochs": 1}})";
  const Outcome o = Invoke({"run", (dir / "c.json").string(), "--quiet", "--out", (dir / "r").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(nlohmann::json::parse(o.out).at("total_env_steps"), 1500);
}

TEST(CliTest, EvaluateRecordReplay) {
  TempDir dir;
  ASSERT_EQ(Invoke(Tiny({"train-selfplay", "--env", "simplepush"}, dir / "v")).code, 0);
  const std::string ckpt = (dir / "v" / kFinalCheckpoint).string();
  const Outcome eval = Invoke({"evaluate", "--checkpoint", ckpt, "--policy", "aggressor",
                            "--episodes", "5", "--record", (dir / "t.jsonl").string()});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const nlohmann::json result = nlohmann::json::parse(eval.out);
  EXPECT_EQ(result.at("episodes"), 5);
  EXPECT_EQ(result.at("policy_seat"), "aggressor");
  const double a = result["returns"]["aggressor"]["mean"];
  const double d = result["returns"]["defender"]["mean"];
  EXPECT_NEAR(a + d, 0.0, 1e-9);

  const Outcome replay = Invoke({"replay", (dir / "t.jsonl").string(), "--summary"});
  EXPECT_EQ(replay.code, 0) << replay.err;
  EXPECT_NE(replay.out.find("steps 25"), std::string::npos);

  // A doctored reward no longer replays.
  std::ifstream in(dir / "t.jsonl");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  nlohmann::json step = nlohmann::json::parse(lines.at(3));
  bool edited = false;
  if (step.contains("rewards")) {
    step["rewards"][0] = step["rewards"][0].get<double>() + 1.0;
    step["rewards"][1] = step["rewards"][1].get<double>() - 1.0;
    edited = true;
  }
  ASSERT_TRUE(edited) << lines.at(3);
  lines[3] = step.dump();
  std::ofstream rewritten(dir / "bad.jsonl");
  for (const std::string& line : lines) rewritten << line << '\n';
  rewritten.close();
  EXPECT_EQ(Invoke({"replay", (dir / "bad.jsonl").string(), "--summary"}).code, kExitRuntimeError);
}

TEST(CliTest, AttackAndReport) {
  TempDir dir;
  ASSERT_EQ(Invoke(Tiny({"train-selfplay", "--env", "simplepush"}, dir / "victim")).code, 0);
  const std::string victim = (dir / "victim" / kFinalCheckpoint).string();
  for (int seed : {1, 2}) {
    const Outcome o = Invoke(Tiny({"attack", "--env", "simplepush", "--victim", victim, "--seed",
                                std::to_string(seed)},
                               dir / "attacks" / ("a" + std::to_string(seed))));
    ASSERT_EQ(o.code, 0) << o.err;
  }
  const Outcome report = Invoke({"report", "--run", "selfplay=" + (dir / "attacks").string(),
                              "--out", (dir / "report").string()});
  ASSERT_EQ(report.code, 0) << report.err;
  const nlohmann::json summary = ReadJson(dir / "report" / "summary.json");
  EXPECT_EQ(summary.at("conditions").at("selfplay").at("n_runs"), 2);
  EXPECT_TRUE(fs::exists(dir / "report" / "curves.csv"));
  EXPECT_TRUE(fs::exists(dir / "report" / "curves.svg"));
}

TEST(CliTest, ChangedVictimIsAnInvariantViolation) {
  TempDir dir;
  ASSERT_EQ(Invoke(Tiny({"train-selfplay", "--env", "simplepush"}, dir / "v1")).code, 0);
  ASSERT_EQ(Invoke(Tiny({"train-selfplay", "--env", "simplepush", "--seed", "5"}, dir / "v2")).code, 0);
  const fs::path victim = dir / "victim.ckpt";
  fs::copy_file(dir / "v1" / kFinalCheckpoint, victim);
  ASSERT_EQ(Invoke(Tiny({"attack", "--env", "simplepush", "--victim", victim.string(),
                      "--checkpoint-every", "250", "--stop-after-steps",
                      "250"},
                     dir / "a"))
                .code,
            0);
  fs::copy_file(dir / "v2" / kFinalCheckpoint, victim, fs::copy_options::overwrite_existing);
  EXPECT_EQ(Invoke({"resume", (dir / "a").string(), "--quiet"}).code, kExitInvariantViolation);
}

TEST(CliTest, SeedGridWritesConfigs) {
  TempDir dir;
  const Outcome o = Invoke({"seed-grid", "--preset", "push-selfplay", "--out", (dir / "g").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  int victims = 0, attacks = 0;
  for (const auto& entry : fs::directory_iterator(dir / "g" / "configs")) {
    const nlohmann::json c = ReadJson(entry.path());
    (c.at("mode") == "attack" ? attacks : victims) += 1;
  }
  EXPECT_EQ(victims, 5);
  EXPECT_EQ(attacks, 15);
  EXPECT_TRUE(fs::exists(dir / "g" / "grid.json"));
}

}  // namespace
}  // namespace exploitlab::cli
