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

#include "exploitlab/ppo.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "exploitlab/errors.h"
#include "exploitlab/rng.h"

namespace exploitlab {

void to_json(nlohmann::json& j, const PpoConfig& config) {
  j = nlohmann::json{{"clip", config.clip},
                     {"epochs", config.epochs},
                     {"minibatches", config.minibatches},
                     {"learning_rate", config.learning_rate},
                     {"value_coef", config.value_coef},
                     {"entropy_coef", config.entropy_coef},
                     {"gamma", config.gamma},
                     {"gae_lambda", config.gae_lambda},
                     {"rollout_length", config.rollout_length},
                     {"max_grad_norm", config.max_grad_norm},
                     {"target_kl", nullptr}};
  if (config.target_kl) j["target_kl"] = *config.target_kl;
}

void from_json(const nlohmann::json& j, PpoConfig& config) {
  const PpoConfig d;
  config.clip = j.value("clip", d.clip);
  config.epochs = j.value("epochs", d.epochs);
  config.minibatches = j.value("minibatches", d.minibatches);
  config.learning_rate = j.value("learning_rate", d.learning_rate);
  config.value_coef = j.value("value_coef", d.value_coef);
  config.entropy_coef = j.value("entropy_coef", d.entropy_coef);
  config.gamma = j.value("gamma", d.gamma);
  config.gae_lambda = j.value("gae_lambda", d.gae_lambda);
  config.rollout_length = j.value("rollout_length", d.rollout_length);
  config.max_grad_norm = j.value("max_grad_norm", d.max_grad_norm);
  config.target_kl.reset();
  if (j.contains("target_kl") && !j.at("target_kl").is_null()) {
    config.target_kl = j.at("target_kl").get<double>();
  }
}

void Validate(const PpoConfig& c) {
  if (!(c.clip > 0.0)) throw ConfigError("ppo.clip", "must be > 0");
  if (c.epochs < 1) throw ConfigError("ppo.epochs", "must be >= 1");
  if (c.minibatches < 1) throw ConfigError("ppo.minibatches", "must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("ppo.learning_rate", "must be > 0");
  if (!(c.value_coef >= 0.0)) throw ConfigError("ppo.value_coef", "must be >= 0");
  if (!(c.entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef", "must be >= 0");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("ppo.gamma", "must be in (0, 1]");
  if (!(c.gae_lambda > 0.0 && c.gae_lambda <= 1.0)) {
    throw ConfigError("ppo.gae_lambda", "must be in (0, 1]");
  }
  if (c.rollout_length < 1) throw ConfigError("ppo.rollout_length", "must be >= 1");
  if (!(c.max_grad_norm > 0.0)) throw ConfigError("ppo.max_grad_norm", "must be > 0");
  if (c.target_kl && !(*c.target_kl > 0.0)) {
    throw ConfigError("ppo.target_kl", "must be > 0 when set");
  }
}

// ------------------------------------------------------------ buffer

void RolloutBuffer::Add(std::span<const double> obs, const Action& action,
                        double log_prob, double reward, double value, bool done) {
  if (static_cast<int>(obs.size()) != obs_dim) {
    throw UsageError("rollout observation has wrong length");
  }
  if (static_cast<int>(action.continuous.size()) != continuous_dim) {
    throw UsageError("rollout action has wrong continuous dimension");
  }
  observations.insert(observations.end(), obs.begin(), obs.end());
  continuous_actions.insert(continuous_actions.end(), action.continuous.begin(),
                            action.continuous.end());
  discrete_actions.push_back(action.discrete);
  log_probs.push_back(log_prob);
  rewards.push_back(reward);
  values.push_back(value);
  dones.push_back(done ? 1 : 0);
}

Action RolloutBuffer::ActionAt(std::size_t t) const {
  Action action;
  const auto begin = continuous_actions.begin() +
                     static_cast<std::ptrdiff_t>(t * static_cast<std::size_t>(continuous_dim));
  action.continuous.assign(begin, begin + continuous_dim);
  action.discrete = discrete_actions[t];
  return action;
}

void RolloutBuffer::Validate() const {
  const std::size_t n = rewards.size();
  if (log_probs.size() != n || values.size() != n || dones.size() != n ||
      discrete_actions.size() != n ||
      observations.size() != n * static_cast<std::size_t>(obs_dim) ||
      continuous_actions.size() != n * static_cast<std::size_t>(continuous_dim)) {
    throw UsageError("rollout buffer arrays have inconsistent lengths");
  }
  for (double lp : log_probs) {
    if (!std::isfinite(lp)) throw UsageError("rollout buffer holds a non-finite log-prob");
  }
}

// ------------------------------------------------------------ estimators

GaeResult ComputeGae(const RolloutBuffer& buffer, double gamma, double lambda) {
  const std::size_t n = buffer.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.targets.assign(n, 0.0);
  double next_advantage = 0.0;
  double next_value = buffer.bootstrap_value;
  for (std::size_t t = n; t-- > 0;) {
    const double live = buffer.dones[t] ? 0.0 : 1.0;
    const double delta =
        buffer.rewards[t] + gamma * next_value * live - buffer.values[t];
    next_advantage = delta + gamma * lambda * live * next_advantage;
    out.advantages[t] = next_advantage;
    out.targets[t] = next_advantage + buffer.values[t];
    next_value = buffer.values[t];
  }
  return out;
}

double ClippedSurrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

void NormalizeAdvantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double& a : advantages) {
    a -= mean;
    var += a * a;
  }
  const double std_dev = std::sqrt(var / n);
  if (std_dev < 1e-8) return;
  for (double& a : advantages) a /= std_dev;
}

void AdamStep(std::vector<double>& params, std::span<const double> grad,
              AdamState& state, double learning_rate) {
  if (grad.size() != params.size()) throw UsageError("gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  const double step_size = learning_rate / correction1;
  const double sqrt_c2 = std::sqrt(correction2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    params[i] -= step_size * state.m[i] / (std::sqrt(state.v[i]) / sqrt_c2 + kAdamEpsilon);
  }
}

double ClipGradNorm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / (norm + 1e-12);
    for (double& g : grad) g *= scale;
  }
  return norm;
}

// ------------------------------------------------------------ loss

LossAndGradients PpoOutputLoss(const Architecture& arch, const ForwardCache& cache,
                               const Minibatch& batch, const PpoConfig& config,
                               LossBreakdown* breakdown) {
  const Eigen::Index n = cache.head.cols();
  if (static_cast<std::size_t>(n) != batch.actions.size() ||
      batch.old_log_probs.size() != batch.actions.size() ||
      batch.advantages.size() != batch.actions.size() ||
      batch.targets.size() != batch.actions.size()) {
    throw UsageError("minibatch arrays disagree with the batch size");
  }
  const int d = arch.continuous_dim();
  const int k = arch.num_logits();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

  LossAndGradients out;
  out.grads.head = Eigen::MatrixXd::Zero(cache.head.rows(), n);
  out.grads.value = Eigen::RowVectorXd::Zero(n);
  out.grads.log_std = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd inv_std(d);
  for (int c = 0; c < d; ++c) inv_std(c) = std::exp(-cache.log_std(c));
  double gaussian_entropy = 0.0;
  for (int c = 0; c < d; ++c) gaussian_entropy += cache.log_std(c) + 0.5 + half_log_2pi;

  double surrogate_sum = 0.0;
  double value_sum = 0.0;
  double entropy_sum = 0.0;
  double clipped = 0.0;
  double kl_sum = 0.0;
  std::vector<double> log_softmax(static_cast<std::size_t>(k));

  for (Eigen::Index i = 0; i < n; ++i) {
    const Action& action = batch.actions[static_cast<std::size_t>(i)];
    const auto head = cache.head.col(i);
    double log_prob = 0.0;
    for (int c = 0; c < d; ++c) {
      const double z = (action.continuous[c] - head(c)) * inv_std(c);
      log_prob += -0.5 * z * z - cache.log_std(c) - half_log_2pi;
    }
    double cat_entropy = 0.0;
    if (k > 0) {
      if (action.discrete < 0 || action.discrete >= k) {
        throw UsageError("minibatch discrete action out of range");
      }
      double max = head(d);
      for (int j = 1; j < k; ++j) max = std::max(max, head(d + j));
      double sum = 0.0;
      for (int j = 0; j < k; ++j) sum += std::exp(head(d + j) - max);
      const double log_norm = max + std::log(sum);
      for (int j = 0; j < k; ++j) {
        log_softmax[j] = head(d + j) - log_norm;
        cat_entropy -= std::exp(log_softmax[j]) * log_softmax[j];
      }
      log_prob += log_softmax[action.discrete];
    }

    const double log_ratio = log_prob - batch.old_log_probs[static_cast<std::size_t>(i)];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[static_cast<std::size_t>(i)];
    const double unclipped = ratio * adv;
    const double clipped_obj =
        std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip) * adv;
    const bool use_unclipped = unclipped <= clipped_obj;
    surrogate_sum += use_unclipped ? unclipped : clipped_obj;
    if (std::abs(ratio - 1.0) > config.clip) clipped += 1.0;
    kl_sum += (ratio - 1.0) - log_ratio;

    // d loss / d log_prob for this sample.
    const double g_logp = use_unclipped ? -adv * ratio * inv_n : 0.0;
    for (int c = 0; c < d; ++c) {
      const double z = (action.continuous[c] - head(c)) * inv_std(c);
      out.grads.head(c, i) += g_logp * z * inv_std(c);
      out.grads.log_std(c) += g_logp * (z * z - 1.0);
    }
    for (int j = 0; j < k; ++j) {
      const double p = std::exp(log_softmax[j]);
      const double indicator = j == action.discrete ? 1.0 : 0.0;
      // Policy term plus entropy bonus: dH/dlogit_j = -p_j (log p_j + H).
      out.grads.head(d + j, i) +=
          g_logp * (indicator - p) +
          config.entropy_coef * inv_n * p * (log_softmax[j] + cat_entropy);
    }

    const double err = cache.value(i) - batch.targets[static_cast<std::size_t>(i)];
    value_sum += err * err;
    out.grads.value(i) = config.value_coef * 2.0 * err * inv_n;
    entropy_sum += cat_entropy + gaussian_entropy;
  }
  for (int c = 0; c < d; ++c) out.grads.log_std(c) -= config.entropy_coef;

  LossBreakdown b;
  b.policy_loss = -surrogate_sum * inv_n;
  b.value_loss = value_sum * inv_n;
  b.entropy = entropy_sum * inv_n;
  b.clip_fraction = clipped * inv_n;
  b.approx_kl = kl_sum * inv_n;
  b.total = b.policy_loss + config.value_coef * b.value_loss -
            config.entropy_coef * b.entropy;
  out.loss = b.total;
  if (breakdown) *breakdown = b;
  return out;
}

double PpoLoss(const PolicyParams& params, const Minibatch& batch,
               const PpoConfig& config) {
  const ForwardCache cache = ForwardBatch(params, batch.observations);
  return PpoOutputLoss(params.arch(), cache, batch, config).loss;
}

void to_json(nlohmann::json& j, const UpdateStats& s) {
  j = nlohmann::json{{"policy_loss", s.policy_loss},
                     {"value_loss", s.value_loss},
                     {"entropy", s.entropy},
                     {"clip_fraction", s.clip_fraction},
                     {"approx_kl", s.approx_kl},
                     {"minibatch_steps", s.minibatch_steps},
                     {"samples", s.samples},
                     {"early_stopped", s.early_stopped},
                     {"aborted", s.aborted}};
  if (!s.diagnostics.empty()) j["diagnostics"] = s.diagnostics;
}

// ------------------------------------------------------------ update

UpdateStats PpoUpdate(PolicyParams& params, AdamState& adam,
                      std::span<const RolloutBuffer> segments,
                      const PpoConfig& config, uint64_t seed) {
  const Architecture& arch = params.arch();
  const int obs_dim = arch.obs_dim;
  const int cont_dim = arch.continuous_dim();

  std::size_t total = 0;
  for (const RolloutBuffer& segment : segments) {
    segment.Validate();
    if (segment.obs_dim != obs_dim || segment.continuous_dim != cont_dim) {
      throw UsageError("rollout buffer does not match the policy architecture");
    }
    total += segment.size();
  }
  UpdateStats stats;
  stats.samples = total;
  if (total == 0) return stats;

  // Flatten segments; GAE never crosses a segment boundary.
  std::vector<const double*> obs_ptr;
  std::vector<Action> actions;
  std::vector<double> old_log_probs, advantages, targets;
  obs_ptr.reserve(total);
  actions.reserve(total);
  for (const RolloutBuffer& segment : segments) {
    const GaeResult gae = ComputeGae(segment, config.gamma, config.gae_lambda);
    for (std::size_t t = 0; t < segment.size(); ++t) {
      obs_ptr.push_back(segment.observations.data() + t * static_cast<std::size_t>(obs_dim));
      actions.push_back(segment.ActionAt(t));
    }
    old_log_probs.insert(old_log_probs.end(), segment.log_probs.begin(),
                         segment.log_probs.end());
    advantages.insert(advantages.end(), gae.advantages.begin(), gae.advantages.end());
    targets.insert(targets.end(), gae.targets.begin(), gae.targets.end());
  }
  NormalizeAdvantages(advantages);

  const std::vector<double> saved_params = params.values();
  const AdamState saved_adam = adam;
  auto abort = [&](const std::string& why) {
    params.values() = saved_params;
    adam = saved_adam;
    stats.aborted = true;
    stats.diagnostics = why;
    return stats;
  };

  CounterRng rng(seed);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t chunks = std::min<std::size_t>(
      total, static_cast<std::size_t>(config.minibatches));
  const std::size_t chunk_size = (total + chunks - 1) / chunks;

  LossBreakdown sum;
  for (int epoch = 0; epoch < config.epochs && !stats.early_stopped; ++epoch) {
    for (std::size_t i = total; i > 1; --i) {
      std::swap(order[i - 1], order[rng.UniformInt(i)]);
    }
    for (std::size_t start = 0; start < total; start += chunk_size) {
      const std::size_t end = std::min(total, start + chunk_size);
      const Eigen::Index b = static_cast<Eigen::Index>(end - start);
      Minibatch batch;
      batch.observations.resize(obs_dim, b);
      batch.actions.reserve(static_cast<std::size_t>(b));
      for (std::size_t j = start; j < end; ++j) {
        const std::size_t idx = order[j];
        batch.observations.col(static_cast<Eigen::Index>(j - start)) =
            Eigen::Map<const Eigen::VectorXd>(obs_ptr[idx], obs_dim);
        batch.actions.push_back(actions[idx]);
        batch.old_log_probs.push_back(old_log_probs[idx]);
        batch.advantages.push_back(advantages[idx]);
        batch.targets.push_back(targets[idx]);
      }
      LossBreakdown part;
      GradientResult result;
      try {
        result = PolicyGradient(params, batch.observations, [&](const ForwardCache& cache) {
          return PpoOutputLoss(arch, cache, batch, config, &part);
        });
      } catch (const NumericalError& e) {
        std::ostringstream why;
        why << "epoch " << epoch << " minibatch " << start / chunk_size << ": " << e.what();
        return abort(why.str());
      }
      ClipGradNorm(result.gradient, config.max_grad_norm);
      AdamStep(params.values(), result.gradient, adam, config.learning_rate);
      for (double v : params.values()) {
        if (!std::isfinite(v)) return abort("non-finite parameter after optimizer step");
      }
      sum.policy_loss += part.policy_loss;
      sum.value_loss += part.value_loss;
      sum.entropy += part.entropy;
      sum.clip_fraction += part.clip_fraction;
      sum.approx_kl += part.approx_kl;
      ++stats.minibatch_steps;
      if (config.target_kl && part.approx_kl > *config.target_kl) {
        stats.early_stopped = true;
        break;
      }
    }
  }
  const double steps = static_cast<double>(std::max(1, stats.minibatch_steps));
  stats.policy_loss = sum.policy_loss / steps;
  stats.value_loss = sum.value_loss / steps;
  stats.entropy = sum.entropy / steps;
  stats.clip_fraction = sum.clip_fraction / steps;
  stats.approx_kl = sum.approx_kl / steps;
  return stats;
}

}  // namespace exploitlab
