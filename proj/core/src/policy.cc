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

#include "exploitlab/policy.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/QR>

#include "exploitlab/errors.h"
#include "exploitlab/hash.h"

namespace exploitlab {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

std::vector<double> LogSoftmax(std::span<const double> logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - max);
  const double log_norm = max + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_norm;
  return out;
}

DenseLayout Dense(std::size_t& offset, int in, int out) {
  DenseLayout layer;
  layer.in = in;
  layer.out = out;
  layer.weight = offset;
  offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
  layer.bias = offset;
  offset += static_cast<std::size_t>(out);
  return layer;
}

void Orthogonal(Eigen::Map<Eigen::MatrixXd> weight, double gain,
                CounterRng& rng) {
  const Eigen::Index rows = weight.rows();
  const Eigen::Index cols = weight.cols();
  const Eigen::Index big = std::max(rows, cols);
  const Eigen::Index small = std::min(rows, cols);
  Eigen::MatrixXd draw(big, small);
  for (Eigen::Index c = 0; c < small; ++c) {
    for (Eigen::Index r = 0; r < big; ++r) draw(r, c) = rng.Normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(draw);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small);
  for (Eigen::Index i = 0; i < small; ++i) {
    if (r(i, i) < 0) q.col(i) *= -1.0;
  }
  if (rows >= cols) {
    weight = gain * q;
  } else {
    weight = gain * q.transpose();
  }
}

}  // namespace

void to_json(nlohmann::json& j, const Architecture& arch) {
  j = nlohmann::json{{"obs_dim", arch.obs_dim},
                     {"hidden", arch.hidden},
                     {"action_space", arch.action_space}};
}

void from_json(const nlohmann::json& j, Architecture& arch) {
  arch.obs_dim = j.at("obs_dim").get<int>();
  arch.hidden = j.at("hidden").get<std::vector<int>>();
  arch.action_space = j.at("action_space").get<ActionSpace>();
}

ParamLayout ComputeLayout(const Architecture& arch) {
  if (arch.obs_dim <= 0) throw UsageError("architecture obs_dim must be positive");
  if (arch.head_dim() <= 0) throw UsageError("architecture has no action head");
  ParamLayout layout;
  std::size_t offset = 0;
  int width = arch.obs_dim;
  for (int units : arch.hidden) {
    if (units <= 0) throw UsageError("hidden layer sizes must be positive");
    layout.trunk.push_back(Dense(offset, width, units));
    width = units;
  }
  layout.policy_head = Dense(offset, width, arch.head_dim());
  layout.value_head = Dense(offset, width, 1);
  layout.log_std = offset;
  layout.log_std_count = arch.continuous_dim();
  offset += static_cast<std::size_t>(layout.log_std_count);
  layout.total = offset;
  return layout;
}

PolicyParams::PolicyParams(Architecture arch)
    : arch_(std::move(arch)),
      layout_(ComputeLayout(arch_)),
      values_(layout_.total, 0.0) {}

Eigen::Map<Eigen::MatrixXd> PolicyParams::Weight(const DenseLayout& layer) {
  return {values_.data() + layer.weight, layer.out, layer.in};
}

Eigen::Map<const Eigen::MatrixXd> PolicyParams::Weight(
    const DenseLayout& layer) const {
  return {values_.data() + layer.weight, layer.out, layer.in};
}

Eigen::Map<Eigen::VectorXd> PolicyParams::Bias(const DenseLayout& layer) {
  return {values_.data() + layer.bias, layer.out};
}

Eigen::Map<const Eigen::VectorXd> PolicyParams::Bias(
    const DenseLayout& layer) const {
  return {values_.data() + layer.bias, layer.out};
}

std::string PolicyParams::Hash() const { return Sha256Hex(std::span(values_)); }

PolicyParams InitPolicy(const Architecture& arch, uint64_t seed) {
  PolicyParams params(arch);
  CounterRng rng(seed);
  for (const DenseLayout& layer : params.layout().trunk) {
    Orthogonal(params.Weight(layer), std::sqrt(2.0), rng);
  }
  Orthogonal(params.Weight(params.layout().policy_head), 0.01, rng);
  Orthogonal(params.Weight(params.layout().value_head), 1.0, rng);
  return params;
}

// ------------------------------------------------------------ distribution

std::vector<double> ActionDistribution::Probabilities() const {
  std::vector<double> probs = LogSoftmax(logits);
  for (double& p : probs) p = std::exp(p);
  return probs;
}

Action ActionDistribution::Sample(CounterRng& rng) const {
  Action action;
  if (!mean.empty()) {
    action.continuous.resize(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      action.continuous[i] = mean[i] + std::exp(log_std[i]) * rng.Normal();
    }
  }
  if (!logits.empty()) {
    const std::vector<double> probs = Probabilities();
    const double u = rng.Uniform();
    double cumulative = 0.0;
    action.discrete = static_cast<int>(probs.size()) - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cumulative += probs[i];
      if (u < cumulative) {
        action.discrete = static_cast<int>(i);
        break;
      }
    }
  }
  return action;
}

Action ActionDistribution::Mode() const {
  Action action;
  action.continuous = mean;
  if (!logits.empty()) {
    action.discrete = static_cast<int>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  return action;
}

double ActionDistribution::LogProb(const Action& action) const {
  double total = 0.0;
  if (!mean.empty()) {
    if (action.continuous.size() != mean.size()) {
      throw UsageError("continuous action dimension mismatch");
    }
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double z = (action.continuous[i] - mean[i]) * std::exp(-log_std[i]);
      total += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
    }
  }
  if (!logits.empty()) {
    if (action.discrete < 0 || action.discrete >= static_cast<int>(logits.size())) {
      throw UsageError("discrete action/token " + std::to_string(action.discrete) +
                       " out of range [0, " + std::to_string(logits.size()) + ")");
    }
    total += LogSoftmax(logits)[static_cast<std::size_t>(action.discrete)];
  }
  return total;
}

double ActionDistribution::Entropy() const {
  double total = 0.0;
  for (double ls : log_std) total += ls + 0.5 + kHalfLog2Pi;
  if (!logits.empty()) {
    const std::vector<double> log_probs = LogSoftmax(logits);
    for (double lp : log_probs) total -= std::exp(lp) * lp;
  }
  return total;
}

// ------------------------------------------------------------ forward

PolicyOutput PolicyForward(const PolicyParams& params,
                           std::span<const double> obs) {
  const Architecture& arch = params.arch();
  if (static_cast<int>(obs.size()) != arch.obs_dim) {
    throw UsageError("observation has length " + std::to_string(obs.size()) +
                     ", policy expects " + std::to_string(arch.obs_dim));
  }
  const ParamLayout& layout = params.layout();
  Eigen::VectorXd x =
      Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  for (const DenseLayout& layer : layout.trunk) {
    x = (params.Weight(layer) * x + params.Bias(layer)).array().tanh().matrix();
  }
  const Eigen::VectorXd head =
      params.Weight(layout.policy_head) * x + params.Bias(layout.policy_head);
  const double value =
      params.Weight(layout.value_head).row(0).dot(x) + params.Bias(layout.value_head)(0);

  PolicyOutput out;
  out.value = value;
  ActionDistribution& dist = out.distribution;
  dist.kind = arch.action_space.kind;
  const int d = arch.continuous_dim();
  dist.mean.assign(head.data(), head.data() + d);
  dist.logits.assign(head.data() + d, head.data() + head.size());
  dist.log_std.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    dist.log_std[i] =
        std::clamp(params.values()[layout.log_std + i], kLogStdMin, kLogStdMax);
  }
  return out;
}

ForwardCache ForwardBatch(const PolicyParams& params, const Eigen::MatrixXd& obs) {
  const Architecture& arch = params.arch();
  if (obs.rows() != arch.obs_dim) {
    throw UsageError("observation batch has " + std::to_string(obs.rows()) +
                     " rows, policy expects " + std::to_string(arch.obs_dim));
  }
  const ParamLayout& layout = params.layout();
  ForwardCache cache;
  cache.input = obs;
  const Eigen::MatrixXd* x = &cache.input;
  cache.hidden.reserve(layout.trunk.size());
  for (const DenseLayout& layer : layout.trunk) {
    Eigen::MatrixXd z = params.Weight(layer) * *x;
    z.colwise() += params.Bias(layer);
    cache.hidden.push_back(z.array().tanh().matrix());
    x = &cache.hidden.back();
  }
  cache.head = params.Weight(layout.policy_head) * *x;
  cache.head.colwise() += params.Bias(layout.policy_head);
  cache.value = params.Weight(layout.value_head) * *x;
  cache.value.array() += params.Bias(layout.value_head)(0);
  cache.raw_log_std = Eigen::Map<const Eigen::VectorXd>(
      params.values().data() + layout.log_std, layout.log_std_count);
  cache.log_std = cache.raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return cache;
}

ActionDistribution DistributionAt(const Architecture& arch,
                                  const ForwardCache& cache, Eigen::Index i) {
  ActionDistribution dist;
  dist.kind = arch.action_space.kind;
  const int d = arch.continuous_dim();
  const auto col = cache.head.col(i);
  dist.mean.resize(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) dist.mean[k] = col(k);
  dist.logits.resize(static_cast<std::size_t>(arch.num_logits()));
  for (int k = 0; k < arch.num_logits(); ++k) dist.logits[k] = col(d + k);
  dist.log_std.assign(cache.log_std.data(), cache.log_std.data() + d);
  return dist;
}

// ------------------------------------------------------------ backward

std::vector<double> Backward(const PolicyParams& params,
                             const ForwardCache& cache,
                             const OutputGradients& grads) {
  const ParamLayout& layout = params.layout();
  std::vector<double> gradient(layout.total, 0.0);
  auto weight_grad = [&](const DenseLayout& layer) {
    return Eigen::Map<Eigen::MatrixXd>(gradient.data() + layer.weight, layer.out,
                                       layer.in);
  };
  auto bias_grad = [&](const DenseLayout& layer) {
    return Eigen::Map<Eigen::VectorXd>(gradient.data() + layer.bias, layer.out);
  };

  const Eigen::MatrixXd& last =
      cache.hidden.empty() ? cache.input : cache.hidden.back();
  weight_grad(layout.policy_head).noalias() = grads.head * last.transpose();
  bias_grad(layout.policy_head) = grads.head.rowwise().sum();
  weight_grad(layout.value_head).noalias() = grads.value * last.transpose();
  bias_grad(layout.value_head)(0) = grads.value.sum();

  if (!layout.trunk.empty()) {
    Eigen::MatrixXd d_hidden =
        params.Weight(layout.policy_head).transpose() * grads.head;
    d_hidden.noalias() += params.Weight(layout.value_head).transpose() * grads.value;
    for (std::size_t l = layout.trunk.size(); l-- > 0;) {
      const Eigen::MatrixXd& h = cache.hidden[l];
      const Eigen::MatrixXd d_pre =
          (d_hidden.array() * (1.0 - h.array().square())).matrix();
      const Eigen::MatrixXd& input = l == 0 ? cache.input : cache.hidden[l - 1];
      weight_grad(layout.trunk[l]).noalias() = d_pre * input.transpose();
      bias_grad(layout.trunk[l]) = d_pre.rowwise().sum();
      if (l > 0) d_hidden.noalias() = params.Weight(layout.trunk[l]).transpose() * d_pre;
    }
  }

  for (int i = 0; i < layout.log_std_count; ++i) {
    const double raw = cache.raw_log_std(i);
    const bool inside = raw >= kLogStdMin && raw <= kLogStdMax;
    gradient[layout.log_std + i] = inside ? grads.log_std(i) : 0.0;
  }
  return gradient;
}

GradientResult PolicyGradient(const PolicyParams& params,
                              const Eigen::MatrixXd& obs,
                              const OutputLoss& loss) {
  const ForwardCache cache = ForwardBatch(params, obs);
  if (!cache.head.allFinite() || !cache.value.allFinite()) {
    throw NumericalError("non-finite network output in forward pass");
  }
  LossAndGradients lg = loss(cache);
  if (lg.grads.head.size() == 0) {
    lg.grads.head = Eigen::MatrixXd::Zero(cache.head.rows(), cache.head.cols());
  }
  if (lg.grads.value.size() == 0) {
    lg.grads.value = Eigen::RowVectorXd::Zero(cache.value.cols());
  }
  if (lg.grads.log_std.size() == 0) {
    lg.grads.log_std = Eigen::VectorXd::Zero(cache.log_std.size());
  }
  if (!std::isfinite(lg.loss)) {
    std::ostringstream msg;
    msg << "non-finite loss " << lg.loss;
    throw NumericalError(msg.str());
  }
  if (!lg.grads.head.allFinite() || !lg.grads.value.allFinite() ||
      !lg.grads.log_std.allFinite()) {
    throw NumericalError("non-finite gradient with respect to network outputs");
  }
  GradientResult result;
  result.loss = lg.loss;
  result.gradient = Backward(params, cache, lg.grads);
  for (std::size_t i = 0; i < result.gradient.size(); ++i) {
    if (!std::isfinite(result.gradient[i])) {
      throw NumericalError("non-finite gradient at parameter " + std::to_string(i));
    }
  }
  return result;
}

}  // namespace exploitlab
