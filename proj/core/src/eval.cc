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

#include "exploitlab/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

#include "exploitlab/errors.h"
#include "exploitlab/rng.h"
#include "exploitlab/run_config.h"
#include "exploitlab/trainer.h"

namespace exploitlab {
namespace fs = std::filesystem;

void ReturnCurve::Validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].value)) throw UsageError("return curve holds a non-finite value");
    if (i > 0 && points[i].step <= points[i - 1].step) {
      throw UsageError("return curve steps must be strictly increasing");
    }
  }
}

ReturnCurve LoadReturnCurve(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  ReturnCurve curve;
  for (const auto& p : j.at("points")) {
    curve.points.push_back({p.at(0).get<int64_t>(), p.at(1).get<double>()});
  }
  curve.meta = j.value("meta", nlohmann::json::object());
  curve.Validate();
  return curve;
}

void SaveReturnCurve(const ReturnCurve& curve, const fs::path& path) {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  for (const CurvePoint& p : curve.points) j["points"].push_back({p.step, p.value});
  j["meta"] = curve.meta;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ReturnCurve LoadAttackCurve(const fs::path& run_dir) {
  if (fs::exists(run_dir / kReturnCurveFile)) return LoadReturnCurve(run_dir / kReturnCurveFile);
  std::ifstream in(run_dir / kConfigFile, std::ios::binary);
  if (!in) throw UsageError("no return curve or config in " + run_dir.string());
  const RunConfig config = nlohmann::json::parse(in).get<RunConfig>();
  if (config.mode != RunMode::kAttack) {
    throw UsageError(run_dir.string() + " is not an attack run");
  }
  const GameSpec spec = MakeGame(config.env)->spec();
  const int seat = 1 - spec.SeatOf(config.attacked_seat);
  ReturnCurve curve;
  for (const nlohmann::json& r : ReadMetrics(run_dir / kMetricsFile)) {
    if (r.at("mean_return").is_null()) continue;
    curve.points.push_back({r.at("env_steps").get<int64_t>(),
                            r.at("mean_return")[seat].get<double>()});
  }
  curve.meta = {{"env", EnvName(config.env)}, {"adversary_seed", config.seed}};
  curve.Validate();
  return curve;
}

void ThresholdSpec::Validate() const {
  if (window < 1) throw ConfigError("threshold.window", "must be >= 1");
  if (!std::isfinite(baseline)) throw ConfigError("threshold.baseline", "must be finite");
}

void to_json(nlohmann::json& j, const ThresholdSpec& spec) {
  j = nlohmann::json{
      {"kind", spec.kind == ThresholdKind::kZeroCrossing ? "zero-crossing" : "baseline-return"},
      {"baseline", spec.baseline},
      {"window", spec.window}};
}

void from_json(const nlohmann::json& j, ThresholdSpec& spec) {
  const std::string kind = j.value("kind", std::string("zero-crossing"));
  if (kind == "zero-crossing") {
    spec.kind = ThresholdKind::kZeroCrossing;
  } else if (kind == "baseline-return") {
    spec.kind = ThresholdKind::kBaselineReturn;
  } else {
    throw ConfigError("threshold.kind", "expected zero-crossing or baseline-return");
  }
  spec.baseline = j.value("baseline", 0.0);
  spec.window = j.value("window", 5);
}

std::vector<double> SmoothTrailing(std::span<const double> values, int window) {
  if (window < 1) throw UsageError("smoothing window must be >= 1");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t begin = i + 1 >= static_cast<std::size_t>(window) ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t k = begin; k <= i; ++k) sum += values[k];
    out[i] = sum / static_cast<double>(i + 1 - begin);
  }
  return out;
}

std::optional<int64_t> TimeToExploit(const ReturnCurve& curve, const ThresholdSpec& spec) {
  spec.Validate();
  std::vector<double> values;
  values.reserve(curve.points.size());
  for (const CurvePoint& p : curve.points) values.push_back(p.value);
  const std::vector<double> smooth = SmoothTrailing(values, spec.window);
  const double threshold = spec.value();
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    if (smooth[i] > threshold) return curve.points[i].step;
  }
  return std::nullopt;
}

double BaselineThreshold(const std::vector<nlohmann::json>& records, int seat) {
  std::vector<double> returns;
  for (const nlohmann::json& r : records) {
    if (!r.contains("mean_return") || r.at("mean_return").is_null()) continue;
    returns.push_back(r.at("mean_return")[seat].get<double>());
  }
  if (returns.empty()) throw UsageError("metrics hold no opponent return records");
  const std::size_t tail = std::max<std::size_t>(1, (returns.size() + 9) / 10);
  double sum = 0.0;
  for (std::size_t i = returns.size() - tail; i < returns.size(); ++i) sum += returns[i];
  return sum / static_cast<double>(tail);
}

double BaselineThreshold(const fs::path& run_dir, const std::string& seat_label) {
  std::ifstream in(run_dir / kConfigFile, std::ios::binary);
  if (!in) throw UsageError("no config.json in " + run_dir.string());
  const RunConfig config = nlohmann::json::parse(in).get<RunConfig>();
  const int seat = MakeGame(config.env)->spec().SeatOf(seat_label);
  return BaselineThreshold(ReadMetrics(run_dir / kMetricsFile), seat);
}

namespace {

// Linear interpolation between order statistics.
double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

MeanCi BootstrapMeanCi(std::span<const double> samples, double level, uint64_t seed,
                       int resamples) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("confidence level must be in (0, 1)");
  MeanCi ci;
  if (samples.empty()) {
    ci.degenerate = true;
    return ci;
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double s : sorted) sum += s;
  ci.mean = sum / static_cast<double>(sorted.size());
  if (sorted.size() < 2) {
    ci.lower = ci.upper = ci.mean;
    ci.degenerate = true;
    return ci;
  }
  CounterRng rng(seed);
  const std::size_t n = sorted.size();
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (double& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += sorted[rng.UniformInt(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = 0.5 * (1.0 - level);
  ci.lower = std::min(Quantile(means, tail), ci.mean);
  ci.upper = std::max(Quantile(means, 1.0 - tail), ci.mean);
  return ci;
}

namespace {

// Value of `curve` at `step`, or nullopt outside its range.
std::optional<double> Interpolate(const ReturnCurve& curve, int64_t step) {
  const auto& pts = curve.points;
  if (pts.empty() || step < pts.front().step || step > pts.back().step) return std::nullopt;
  const auto it = std::lower_bound(pts.begin(), pts.end(), step,
                                   [](const CurvePoint& p, int64_t s) { return p.step < s; });
  if (it->step == step) return it->value;
  const CurvePoint& hi = *it;
  const CurvePoint& lo = *(it - 1);
  const double t = static_cast<double>(step - lo.step) / static_cast<double>(hi.step - lo.step);
  return lo.value + t * (hi.value - lo.value);
}

std::string Num(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

}  // namespace

ExploitReport BuildReport(std::vector<AttackRun> runs) {
  if (runs.empty()) throw UsageError("report needs at least one run");
  for (const AttackRun& r : runs) {
    if (r.env != runs.front().env) throw UsageError("report runs mix environments");
    r.curve.Validate();
    r.threshold.Validate();
  }
  std::sort(runs.begin(), runs.end(), [](const AttackRun& a, const AttackRun& b) {
    return std::tie(a.condition, a.id) < std::tie(b.condition, b.id);
  });

  ExploitReport report;
  report.method = {{"smoothing", "trailing moving average"},
                   {"ci", "bootstrap percentile"},
                   {"ci_level", 0.95},
                   {"resamples", kBootstrapResamples},
                   {"alignment", "linear interpolation within each run's step range"},
                   {"not_exploited", "excluded from tte mean, counted separately"}};

  std::map<std::string, std::vector<const AttackRun*>> groups;
  for (const AttackRun& r : runs) groups[r.condition].push_back(&r);

  for (const auto& [condition, members] : groups) {
    std::set<int64_t> grid;
    for (const AttackRun* r : members) {
      for (const CurvePoint& p : r->curve.points) grid.insert(p.step);
    }
    for (int64_t step : grid) {
      std::vector<double> values;
      for (const AttackRun* r : members) {
        if (auto v = Interpolate(r->curve, step)) values.push_back(*v);
      }
      CurveRow row;
      row.condition = condition;
      row.step = step;
      row.ret = BootstrapMeanCi(values);
      row.runs = static_cast<int>(values.size());
      report.rows.push_back(row);
    }

    ConditionSummary summary;
    summary.n_runs = static_cast<int>(members.size());
    std::vector<double> exploited;
    double censored = 0.0;
    double threshold = 0.0;
    for (const AttackRun* r : members) {
      const auto tte = TimeToExploit(r->curve, r->threshold);
      summary.per_run.push_back(tte);
      summary.run_ids.push_back(r->id);
      threshold += r->threshold.value();
      if (tte) {
        exploited.push_back(static_cast<double>(*tte));
        censored += static_cast<double>(*tte);
      } else {
        censored += r->curve.points.empty()
                        ? 0.0
                        : static_cast<double>(r->curve.points.back().step);
      }
    }
    summary.n_exploited = static_cast<int>(exploited.size());
    summary.tte = BootstrapMeanCi(exploited);
    summary.tte_censored_mean = censored / static_cast<double>(members.size());
    summary.threshold = threshold / static_cast<double>(members.size());
    report.conditions[condition] = summary;
  }
  return report;
}

nlohmann::json SummaryJson(const ExploitReport& report) {
  nlohmann::json j;
  j["method"] = report.method;
  j["conditions"] = nlohmann::json::object();
  for (const auto& [condition, s] : report.conditions) {
    nlohmann::json c;
    c["n_runs"] = s.n_runs;
    c["n_exploited"] = s.n_exploited;
    if (s.n_exploited > 0) {
      c["tte_mean"] = s.tte.mean;
      c["tte_ci_low"] = s.tte.lower;
      c["tte_ci_high"] = s.tte.upper;
    } else {
      c["tte_mean"] = nullptr;
      c["tte_ci_low"] = nullptr;
      c["tte_ci_high"] = nullptr;
    }
    c["tte_censored_mean"] = s.tte_censored_mean;
    c["threshold"] = s.threshold;
    c["runs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < s.per_run.size(); ++i) {
      c["runs"].push_back({{"id", s.run_ids[i]},
                           {"time_to_exploit", s.per_run[i] ? nlohmann::json(*s.per_run[i])
                                                            : nlohmann::json(nullptr)}});
    }
    j["conditions"][condition] = c;
  }
  return j;
}

std::string CurvesCsv(const ExploitReport& report) {
  std::ostringstream out;
  out << "condition,step,mean_return,ci_low,ci_high\n";
  for (const CurveRow& row : report.rows) {
    out << row.condition << ',' << row.step << ',' << Num(row.ret.mean) << ','
        << Num(row.ret.lower) << ',' << Num(row.ret.upper) << '\n';
  }
  return out.str();
}

std::string CurvesSvg(const ExploitReport& report) {
  constexpr double kWidth = 720, kHeight = 420, kLeft = 70, kRight = 160, kTop = 20,
                   kBottom = 50;
  static const char* kColors[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"};
  double x_max = 1, y_min = 0, y_max = 0;
  for (const CurveRow& r : report.rows) {
    x_max = std::max(x_max, static_cast<double>(r.step));
    y_min = std::min(y_min, r.ret.lower);
    y_max = std::max(y_max, r.ret.upper);
  }
  for (const auto& [c, s] : report.conditions) {
    y_min = std::min(y_min, s.threshold);
    y_max = std::max(y_max, s.threshold);
  }
  if (y_max - y_min < 1e-9) {
    y_max += 1;
    y_min -= 1;
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto X = [&](double step) { return kLeft + pw * step / x_max; };
  auto Y = [&](double v) { return kTop + ph * (1.0 - (v - y_min) / (y_max - y_min)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
      << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + ph << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double step = x_max * t / 4, v = y_min + (y_max - y_min) * t / 4;
    svg << "<text x=\"" << X(step) << "\" y=\"" << kTop + ph + 18
        << "\" text-anchor=\"middle\">" << Num(std::round(step)) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\">"
        << Num(std::round(v * 1000) / 1000) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">adversary env steps</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\" text-anchor=\"middle\">adversary return</text>\n";

  int index = 0;
  for (const auto& [condition, summary] : report.conditions) {
    const char* color = kColors[index % 8];
    std::ostringstream upper, lower, line;
    for (const CurveRow& r : report.rows) {
      if (r.condition != condition) continue;
      upper << X(static_cast<double>(r.step)) << ',' << Y(r.ret.upper) << ' ';
      line << X(static_cast<double>(r.step)) << ',' << Y(r.ret.mean) << ' ';
    }
    std::vector<const CurveRow*> rev;
    for (const CurveRow& r : report.rows) {
      if (r.condition == condition) rev.push_back(&r);
    }
    std::reverse(rev.begin(), rev.end());
    for (const CurveRow* r : rev) lower << X(static_cast<double>(r->step)) << ',' << Y(r->ret.lower) << ' ';
    svg << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\"" << color
        << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    svg << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << Y(summary.threshold) << "\" x2=\""
        << kLeft + pw << "\" y2=\"" << Y(summary.threshold) << "\" stroke=\"" << color
        << "\" stroke-dasharray=\"5,4\"/>\n";
    svg << "<text x=\"" << kLeft + pw + 10 << "\" y=\"" << kTop + 16 + 18 * index
        << "\" fill=\"" << color << "\">" << condition << "</text>\n";
    ++index;
  }
  svg << "</svg>\n";
  return svg.str();
}

void EmitReport(const std::vector<AttackRun>& runs, const fs::path& out_dir, bool plot) {
  const ExploitReport report = BuildReport(runs);
  fs::create_directories(out_dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / name).string());
    out << text;
  };
  write("curves.csv", CurvesCsv(report));
  write("summary.json", SummaryJson(report).dump(2) + "\n");
  if (plot) write("curves.svg", CurvesSvg(report));
}

}  // namespace exploitlab
