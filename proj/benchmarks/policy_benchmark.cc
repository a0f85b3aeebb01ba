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

#include "exploitlab/policy.h"
#include "exploitlab/ppo.h"

namespace exploitlab {
namespace {

Architecture LaserTagArch() {
  Architecture arch;
  arch.obs_dim = 1260;
  arch.action_space = ActionSpace::Discrete(10);
  return arch;
}

void BM_ForwardSingle(benchmark::State& state) {
  const PolicyParams params = InitPolicy(LaserTagArch(), 1);
  const std::vector<double> obs(1260, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(PolicyForward(params, obs));
}
BENCHMARK(BM_ForwardSingle);

void BM_ForwardBatch(benchmark::State& state) {
  const PolicyParams params = InitPolicy(LaserTagArch(), 1);
  const Eigen::MatrixXd obs = Eigen::MatrixXd::Constant(1260, state.range(0), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(ForwardBatch(params, obs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(8)->Arg(1024);

// One PPO minibatch gradient on a 1024-sample Laser Tag batch.
void BM_PpoGradient(benchmark::State& state) {
  const PolicyParams params = InitPolicy(LaserTagArch(), 1);
  const int n = 1024;
  CounterRng rng(3);
  Minibatch batch;
  batch.observations = Eigen::MatrixXd::Zero(1260, n);
  for (int j = 0; j < n; ++j) {
    batch.observations(static_cast<Eigen::Index>(rng.UniformInt(1260)), j) = 1.0;
    batch.actions.push_back(Action::Index(static_cast<int>(rng.UniformInt(10))));
    batch.old_log_probs.push_back(std::log(0.1));
    batch.advantages.push_back(rng.Normal());
    batch.targets.push_back(rng.Normal());
  }
  const PpoConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(PolicyGradient(params, batch.observations, [&](const ForwardCache& c) {
      return PpoOutputLoss(params.arch(), c, batch, config);
    }));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_PpoGradient)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace exploitlab
