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

#ifndef EXPLOITLAB_EVAL_H_
#define EXPLOITLAB_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace exploitlab {

struct CurvePoint {
  int64_t step = 0;
  double value = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// Adversary mean return per rollout against adversary env steps.
struct ReturnCurve {
  std::vector<CurvePoint> points;  // steps strictly increasing
  nlohmann::json meta = nlohmann::json::object();

  // Throws UsageError unless steps are strictly increasing and values finite.
  void Validate() const;
};

ReturnCurve LoadReturnCurve(const std::filesystem::path& path);
void SaveReturnCurve(const ReturnCurve& curve, const std::filesystem::path& path);
// Reads return_curve.json from an attack run directory, or rebuilds it from
// metrics.jsonl when absent.
ReturnCurve LoadAttackCurve(const std::filesystem::path& run_dir);

enum class ThresholdKind { kZeroCrossing, kBaselineReturn };

struct ThresholdSpec {
  ThresholdKind kind = ThresholdKind::kZeroCrossing;
  double baseline = 0.0;  // used by kBaselineReturn
  int window = 5;         // trailing moving-average length in rollouts

  double value() const { return kind == ThresholdKind::kZeroCrossing ? 0.0 : baseline; }
  void Validate() const;
};

void to_json(nlohmann::json& j, const ThresholdSpec& spec);
void from_json(const nlohmann::json& j, ThresholdSpec& spec);

// Trailing moving average; the first window-1 points average what exists.
std::vector<double> SmoothTrailing(std::span<const double> values, int window);

// Step of the first smoothed point strictly above the threshold, or nullopt
// when the curve never crosses.
std::optional<int64_t> TimeToExploit(const ReturnCurve& curve, const ThresholdSpec& spec);

// Mean of mean_return[seat] over the last 10% (at least one) of update
// records that carry a return. Throws UsageError when none do.
double BaselineThreshold(const std::vector<nlohmann::json>& records, int seat);
double BaselineThreshold(const std::filesystem::path& run_dir, const std::string& seat_label);

struct MeanCi {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool degenerate = false;  // fewer than two samples
};

inline constexpr int kBootstrapResamples = 10000;
inline constexpr uint64_t kBootstrapSeed = 0x5eed;

// Bootstrap percentile interval around the sample mean. Samples are sorted
// first so the result does not depend on their order.
MeanCi BootstrapMeanCi(std::span<const double> samples, double level = 0.95,
                       uint64_t seed = kBootstrapSeed,
                       int resamples = kBootstrapResamples);

struct AttackRun {
  std::string condition;  // victim training condition, e.g. "selfplay"
  std::string env;
  ReturnCurve curve;
  ThresholdSpec threshold;
  std::string id;  // stable label, used for ordering
};

struct CurveRow {
  std::string condition;
  int64_t step = 0;
  MeanCi ret;
  int runs = 0;
};

struct ConditionSummary {
  int n_runs = 0;
  int n_exploited = 0;
  MeanCi tte;                      // over exploited runs only
  double tte_censored_mean = 0.0;  // not-exploited runs counted at their last step
  double threshold = 0.0;          // mean over runs
  std::vector<std::optional<int64_t>> per_run;  // ordered by run id
  std::vector<std::string> run_ids;
};

struct ExploitReport {
  std::vector<CurveRow> rows;
  std::map<std::string, ConditionSummary> conditions;
  nlohmann::json method;  // smoothing / CI choices
};

// Throws UsageError for an empty run list or mixed environments. The result
// does not depend on the order of `runs`.
ExploitReport BuildReport(std::vector<AttackRun> runs);

nlohmann::json SummaryJson(const ExploitReport& report);
std::string CurvesCsv(const ExploitReport& report);
std::string CurvesSvg(const ExploitReport& report);

// Writes curves.csv, summary.json and (optionally) curves.svg into `out_dir`.
void EmitReport(const std::vector<AttackRun>& runs, const std::filesystem::path& out_dir,
                bool plot = true);

}  // namespace exploitlab

#endif  // EXPLOITLAB_EVAL_H_
