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

#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "exploitlab/errors.h"

namespace exploitlab {
namespace {

std::string FieldOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

RunConfig Parse(const nlohmann::json& j) { return j.get<RunConfig>(); }

TEST(RunConfigTest, JsonRoundTrip) {
  for (const std::string& name : PresetNames()) {
    const RunConfig config = Preset(name);
    EXPECT_EQ(nlohmann::json(config).get<RunConfig>(), config) << name;
  }
  RunConfig attack;
  attack.mode = RunMode::kAttack;
  attack.env = DefaultEnvConfig("simplepush");
  attack.victim_checkpoint = "v/final.ckpt";
  attack.attacked_seat = "aggressor";
  attack.timesteps = 0;
  EXPECT_EQ(nlohmann::json(attack).get<RunConfig>(), attack);
}

TEST(RunConfigTest, ModeSpecificFieldsAreRejectedElsewhere) {
  EXPECT_EQ(FieldOf([] { Parse({{"mode", "selfplay"}, {"population_size", 4}}); }),
            "population_size");
  EXPECT_EQ(FieldOf([] { Parse({{"mode", "pbrl"}, {"victim_checkpoint", "x"}}); }),
            "victim_checkpoint");
  EXPECT_EQ(FieldOf([] { Parse({{"mode", "attack"}, {"shared_policy", true}}); }),
            "shared_policy");
  EXPECT_EQ(FieldOf([] { Parse({{"mode", "selfplay"}, {"bogus", 1}}); }), "bogus");
  EXPECT_EQ(FieldOf([] { Parse({{"mode", "selfplay"}, {"ppo", {{"clipp", 0.1}}}}); }),
            "ppo.clipp");
  EXPECT_EQ(FieldOf([] { Parse({{"mode", "duel"}}); }), "mode");
  EXPECT_EQ(FieldOf([] { Parse({{"env", {{"name", "lasertag"}, {"mapp", "x"}}}}); }),
            "env.mapp");
}

TEST(RunConfigTest, ValidateNamesTheField) {
  RunConfig config;
  config.timesteps = 0;
  EXPECT_EQ(FieldOf([&] { Validate(config); }), "timesteps");
  config = RunConfig{};
  config.num_envs = 0;
  EXPECT_EQ(FieldOf([&] { Validate(config); }), "num_envs");
  config = RunConfig{};
  config.hidden = {};
  EXPECT_EQ(FieldOf([&] { Validate(config); }), "hidden");
  config = RunConfig{};
  config.ppo.clip = -1;
  EXPECT_EQ(FieldOf([&] { Validate(config); }), "ppo.clip");

  RunConfig pbrl;
  pbrl.mode = RunMode::kPbrl;
  EXPECT_EQ(FieldOf([&] { Validate(pbrl); }), "population_size");
  pbrl.population_size = 2;
  MaterializeDefaults(pbrl);
  pbrl.protagonist_seat = "nobody";
  EXPECT_EQ(FieldOf([&] { Validate(pbrl); }), "protagonist_seat");

  RunConfig attack;
  attack.mode = RunMode::kAttack;
  attack.timesteps = 0;
  EXPECT_EQ(FieldOf([&] { Validate(attack); }), "victim_checkpoint");

  RunConfig shared;
  shared.env = DefaultEnvConfig("simplepush");
  shared.shared_policy = true;
  EXPECT_EQ(FieldOf([&] { Validate(shared); }), "shared_policy");

  RunConfig env;
  env.env = DefaultEnvConfig("simplepush");
  env.shared_policy = false;
  std::get<push::PushConfig>(env.env).comm_tokens = -2;
  EXPECT_EQ(FieldOf([&] { Validate(env); }), "env.comm_tokens");
}

TEST(RunConfigTest, DefaultsMaterialize) {
  RunConfig pbrl;
  pbrl.mode = RunMode::kPbrl;
  pbrl.env = DefaultEnvConfig("simplepush");
  pbrl.population_size = 2;
  MaterializeDefaults(pbrl);
  EXPECT_EQ(pbrl.alternation_period, pbrl.ppo.rollout_length);
  EXPECT_EQ(pbrl.protagonist_seat, "aggressor");
  EXPECT_EQ(DefaultProtagonistSeat(DefaultEnvConfig("lasertag")), "player-0");
  EXPECT_NO_THROW(Validate(pbrl));
}

TEST(RunConfigTest, HashTracksContent) {
  RunConfig a = Preset("push-selfplay"), b = a;
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.seed = 1;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
}

TEST(RunConfigTest, Presets) {
  const std::vector<std::string> names = PresetNames();
  EXPECT_GE(names.size(), 10u);
  for (const std::string& name : names) {
    EXPECT_NO_THROW(Validate(Preset(name))) << name;
    EXPECT_EQ(Preset(name, "paper").timesteps, 25'000'000);
    EXPECT_EQ(Preset(name, "desk").timesteps, 300'000);
  }
  EXPECT_EQ(Preset("lasertag-pbrl-n40").population_size, 40);
  EXPECT_EQ(std::get<push::PushConfig>(Preset("push-pbrl-n16").env).comm_tokens, 50);
  EXPECT_THROW(Preset("nope"), UsageError);
  EXPECT_THROW(Preset("push-selfplay", "huge"), UsageError);
}

TEST(RunConfigTest, BundledExperimentFilesParse) {
  const std::filesystem::path docs =
      std::filesystem::path(EXPLOITLAB_SOURCE_DIR) / "docs" / "experiments";
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(docs)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    RunConfig config = nlohmann::json::parse(in).get<RunConfig>();
    MaterializeDefaults(config);
    EXPECT_NO_THROW(Validate(config)) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 10);
}

TEST(SeedGridTest, FifteenAttacksWithDistinctSeeds) {
  const SeedGrid grid = MakeSeedGrid(Preset("lasertag-selfplay"), 5, 3, 600'000);
  ASSERT_EQ(grid.victims.size(), 5u);
  ASSERT_EQ(grid.attacks.size(), 15u);
  std::set<uint64_t> seeds;
  for (const RunConfig& v : grid.victims) seeds.insert(v.seed);
  for (const RunConfig& a : grid.attacks) {
    seeds.insert(a.seed);
    EXPECT_EQ(a.mode, RunMode::kAttack);
    EXPECT_EQ(a.timesteps, 600'000);
  }
  EXPECT_EQ(seeds.size(), 20u);
  EXPECT_EQ(grid.attacks[4].victim_checkpoint, grid.victim_dirs[1] + "/final.ckpt");
  std::set<std::string> dirs(grid.attack_dirs.begin(), grid.attack_dirs.end());
  EXPECT_EQ(dirs.size(), 15u);
}

TEST(SeedGridTest, SmallGrid) {
  const SeedGrid grid = MakeSeedGrid(Preset("push-pbrl-n2"), 2, 2);
  EXPECT_EQ(grid.attacks.size(), 4u);
  EXPECT_EQ(grid.attacks[0].timesteps, 0);
  EXPECT_EQ(grid.attacks[3].attacked_seat, "aggressor");
}

}  // namespace
}  // namespace exploitlab
