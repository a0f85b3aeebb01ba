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

#ifndef EXPLOITLAB_PPO_H_
#define EXPLOITLAB_PPO_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "exploitlab/game.h"
#include "exploitlab/policy.h"

namespace exploitlab {

struct PpoConfig {
  double clip = 0.2;
  int epochs = 4;
  int minibatches = 4;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int64_t rollout_length = 4096;
  double max_grad_norm = 0.5;
  // Stop the remaining epochs once a minibatch's approx-KL exceeds this.
  std::optional<double> target_kl;

  friend bool operator==(const PpoConfig&, const PpoConfig&) = default;
};

void to_json(nlohmann::json& j, const PpoConfig& config);
void from_json(const nlohmann::json& j, PpoConfig& config);
void Validate(const PpoConfig& config);

// Fixed-horizon trajectory storage for one learning agent. `dones[t]` marks
// the last transition of an episode; `bootstrap_value` is V(s) after the final
// transition and only matters when that transition is not terminal.
struct RolloutBuffer {
  int obs_dim = 0;
  int continuous_dim = 0;
  std::vector<double> observations;
  std::vector<double> continuous_actions;
  std::vector<int> discrete_actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<uint8_t> dones;
  double bootstrap_value = 0.0;

  RolloutBuffer() = default;
  RolloutBuffer(int obs_dim, int continuous_dim)
      : obs_dim(obs_dim), continuous_dim(continuous_dim) {}

  void Add(std::span<const double> obs, const Action& action, double log_prob,
           double reward, double value, bool done);
  std::size_t size() const { return rewards.size(); }
  Action ActionAt(std::size_t t) const;
  // Throws UsageError when arrays disagree in length or log-probs are not
  // finite.
  void Validate() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> targets;  // advantages + values
};

GaeResult ComputeGae(const RolloutBuffer& buffer, double gamma, double lambda);

// min(ratio * A, clip(ratio, 1 - clip, 1 + clip) * A)
double ClippedSurrogate(double ratio, double advantage, double clip);

// In-place: subtract the mean; divide by the standard deviation unless it is
// below 1e-8.
void NormalizeAdvantages(std::span<double> advantages);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t step = 0;
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

void AdamStep(std::vector<double>& params, std::span<const double> grad,
              AdamState& state, double learning_rate);

// Scales `grad` to L2 norm at most `max_norm`; returns the original norm.
double ClipGradNorm(std::span<double> grad, double max_norm);

struct Minibatch {
  Eigen::MatrixXd observations;  // obs_dim x batch
  std::vector<Action> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> targets;
};

struct LossBreakdown {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// -surrogate + value_coef * MSE(value, target) - entropy_coef * entropy, all
// averaged over the minibatch, with gradients taken at the network outputs.
LossAndGradients PpoOutputLoss(const Architecture& arch, const ForwardCache& cache,
                               const Minibatch& batch, const PpoConfig& config,
                               LossBreakdown* breakdown = nullptr);

// Loss value only (used by finite-difference checks).
double PpoLoss(const PolicyParams& params, const Minibatch& batch,
               const PpoConfig& config);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int minibatch_steps = 0;
  std::size_t samples = 0;
  bool early_stopped = false;
  bool aborted = false;
  std::string diagnostics;
};

void to_json(nlohmann::json& j, const UpdateStats& stats);

// Epochs x minibatches of clipped-surrogate gradient steps over the
// concatenation of `segments` (GAE is computed per segment). Minibatch
// shuffling is driven by `seed`. On a non-finite loss or gradient the update
// is abandoned, `params` and `adam` are left untouched, and the returned
// stats carry diagnostics.
UpdateStats PpoUpdate(PolicyParams& params, AdamState& adam,
                      std::span<const RolloutBuffer> segments,
                      const PpoConfig& config, uint64_t seed);

}  // namespace exploitlab

#endif  // EXPLOITLAB_PPO_H_
