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

#include <benchmark/benchmark.h>

#include "exploitlab/env.h"
#include "exploitlab/rollout.h"

namespace exploitlab {
namespace {

void StepRandom(benchmark::State& state, const std::string& name) {
  const std::unique_ptr<Game> game = MakeGame(DefaultEnvConfig(name));
  CounterRng rng(1);
  uint64_t episode = 0;
  game->Reset(episode);
  for (auto _ : state) {
    if (game->done()) game->Reset(++episode);
    const JointAction actions = {RandomAction(game->spec().action_space[0], rng),
                                 RandomAction(game->spec().action_space[1], rng)};
    benchmark::DoNotOptimize(game->Step(actions));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_LaserTagStep(benchmark::State& state) { StepRandom(state, "lasertag"); }
void BM_SimplePushStep(benchmark::State& state) { StepRandom(state, "simplepush"); }
BENCHMARK(BM_LaserTagStep);
BENCHMARK(BM_SimplePushStep);

// Environment steps collected per second with a shared 64x64 policy.
void BM_Collect(benchmark::State& state, const std::string& name) {
  const EnvConfig env = DefaultEnvConfig(name);
  const GameSpec spec = MakeGame(env)->spec();
  Architecture arch;
  arch.obs_dim = spec.obs_dim[0];
  arch.action_space = spec.action_space[0];
  const PolicyParams a = InitPolicy(arch, 1);
  Architecture arch1 = arch;
  arch1.obs_dim = spec.obs_dim[1];
  arch1.action_space = spec.action_space[1];
  const PolicyParams b = InitPolicy(arch1, 2);
  CollectRequest request;
  request.env = &env;
  request.env_steps = 2048;
  request.num_envs = static_cast<int>(state.range(0));
  request.learners = {&a, &b};
  request.seats[0].learner = 0;
  request.seats[1].learner = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Collect(request));
    ++request.seed;
  }
  state.SetItemsProcessed(state.iterations() * request.env_steps);
}

void BM_CollectLaserTag(benchmark::State& state) { BM_Collect(state, "lasertag"); }
void BM_CollectSimplePush(benchmark::State& state) { BM_Collect(state, "simplepush"); }
BENCHMARK(BM_CollectLaserTag)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CollectSimplePush)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace exploitlab
