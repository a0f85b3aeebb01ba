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

#ifndef EXPLOITLAB_POLICY_H_
#define EXPLOITLAB_POLICY_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "exploitlab/game.h"
#include "exploitlab/rng.h"

namespace exploitlab {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

// Shared tanh trunk with a policy head (gaussian means then categorical
// logits) and a scalar value head. Continuous spaces add a state-independent
// log-std vector.
struct Architecture {
  int obs_dim = 0;
  std::vector<int> hidden = {64, 64};
  ActionSpace action_space;

  int continuous_dim() const {
    return action_space.has_continuous() ? action_space.continuous_dim : 0;
  }
  int num_logits() const {
    return action_space.has_discrete() ? action_space.num_discrete : 0;
  }
  int head_dim() const { return continuous_dim() + num_logits(); }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

void to_json(nlohmann::json& j, const Architecture& arch);
void from_json(const nlohmann::json& j, Architecture& arch);

// Offsets into the flat parameter vector. Weights are column-major
// (out x in) so that a layer computes W * x + b.
struct DenseLayout {
  std::size_t weight = 0;
  std::size_t bias = 0;
  int in = 0;
  int out = 0;
};

struct ParamLayout {
  std::vector<DenseLayout> trunk;
  DenseLayout policy_head;
  DenseLayout value_head;
  std::size_t log_std = 0;
  int log_std_count = 0;
  std::size_t total = 0;
};

ParamLayout ComputeLayout(const Architecture& arch);

class PolicyParams {
 public:
  PolicyParams() = default;
  // All-zero parameters.
  explicit PolicyParams(Architecture arch);

  const Architecture& arch() const { return arch_; }
  const ParamLayout& layout() const { return layout_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  Eigen::Map<Eigen::MatrixXd> Weight(const DenseLayout& layer);
  Eigen::Map<const Eigen::MatrixXd> Weight(const DenseLayout& layer) const;
  Eigen::Map<Eigen::VectorXd> Bias(const DenseLayout& layer);
  Eigen::Map<const Eigen::VectorXd> Bias(const DenseLayout& layer) const;

  // SHA-256 over the raw parameter bytes.
  std::string Hash() const;

  friend bool operator==(const PolicyParams& a, const PolicyParams& b) {
    return a.arch_ == b.arch_ && a.values_ == b.values_;
  }

 private:
  Architecture arch_;
  ParamLayout layout_;
  std::vector<double> values_;
};

// Orthogonal initialisation: trunk gain sqrt(2), policy head 0.01, value
// head 1. Biases and log-std start at zero.
PolicyParams InitPolicy(const Architecture& arch, uint64_t seed);

struct ActionDistribution {
  ActionKind kind = ActionKind::kDiscrete;
  std::vector<double> logits;
  std::vector<double> mean;
  std::vector<double> log_std;  // already clamped to [kLogStdMin, kLogStdMax]

  std::vector<double> Probabilities() const;
  // Continuous components are returned unclamped; the environment clamps.
  Action Sample(CounterRng& rng) const;
  Action Mode() const;
  double LogProb(const Action& action) const;
  double Entropy() const;
};

struct PolicyOutput {
  ActionDistribution distribution;
  double value = 0.0;
};

PolicyOutput PolicyForward(const PolicyParams& params,
                           std::span<const double> obs);

// Batched forward pass; observations are columns of `obs`.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> hidden;  // post-activation, one per trunk layer
  Eigen::MatrixXd head;                 // head_dim x batch
  Eigen::RowVectorXd value;             // 1 x batch
  Eigen::VectorXd log_std;              // clamped
  Eigen::VectorXd raw_log_std;
};

ForwardCache ForwardBatch(const PolicyParams& params, const Eigen::MatrixXd& obs);

// Gradients of a scalar loss with respect to the network outputs.
struct OutputGradients {
  Eigen::MatrixXd head;
  Eigen::RowVectorXd value;
  Eigen::VectorXd log_std;  // with respect to the clamped log-std
};

// Reverse-mode pass through the fixed topology. Returns d loss / d params.
std::vector<double> Backward(const PolicyParams& params,
                             const ForwardCache& cache,
                             const OutputGradients& grads);

struct LossAndGradients {
  double loss = 0.0;
  OutputGradients grads;
};
using OutputLoss = std::function<LossAndGradients(const ForwardCache&)>;

struct GradientResult {
  double loss = 0.0;
  std::vector<double> gradient;
};

// Forward, evaluate `loss` on the outputs, backpropagate. Throws
// NumericalError naming the first non-finite quantity.
GradientResult PolicyGradient(const PolicyParams& params,
                              const Eigen::MatrixXd& obs,
                              const OutputLoss& loss);

// Column `i` of the batch as a distribution.
ActionDistribution DistributionAt(const Architecture& arch,
                                  const ForwardCache& cache, Eigen::Index i);

}  // namespace exploitlab

#endif  // EXPLOITLAB_POLICY_H_
