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

#ifndef EXPLOITLAB_LASERTAG_H_
#define EXPLOITLAB_LASERTAG_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "exploitlab/game.h"
#include "exploitlab/rng.h"

namespace exploitlab::lasertag {

// Clockwise order, so rotate-right is +1 mod 4.
enum class Orientation : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

enum ActionIndex : int {
  kNoop = 0,
  kForward = 1,
  kBackward = 2,
  kStepLeft = 3,
  kStepRight = 4,
  kRotateLeft = 5,
  kRotateRight = 6,
  kForwardRotateLeft = 7,
  kForwardRotateRight = 8,
  kFire = 9,
};
inline constexpr int kNumActions = 10;

// Observation channels per window cell.
inline constexpr int kObstacleChannel = 0;
inline constexpr int kOpponentChannel = 1;
inline constexpr int kEmptyChannel = 2;
inline constexpr int kNumChannels = 3;

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct SpawnPoint {
  Cell cell;
  Orientation orientation = Orientation::kNorth;
};

// Closed arena: border cells are obstacles, spawn points are floor cells and
// there are at least two of them. Text format: '#' obstacle, '.' floor,
// 'S' spawn point. Spawn orientations face the map centre.
class GridMap {
 public:
  static GridMap Parse(std::string_view text);
  static GridMap Load(const std::filesystem::path& path);
  // "arena11" (default, 11x11 with a cross-shaped centre block) or "arena9".
  static GridMap Builtin(const std::string& name);
  static std::vector<std::string> BuiltinNames();

  int width() const { return width_; }
  int height() const { return height_; }
  bool InBounds(Cell cell) const;
  // Out-of-bounds cells count as obstacles.
  bool IsObstacle(Cell cell) const;
  const std::vector<SpawnPoint>& spawns() const { return spawns_; }

  std::string ToText() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> obstacles_;
  std::vector<SpawnPoint> spawns_;
};

struct LaserTagConfig {
  std::string map = "arena11";
  std::string map_file;  // when non-empty, overrides `map`
  int max_episode_steps = 300;
  bool tag_respawn = true;
  int view_front = 17;
  int view_side = 10;
  int view_back = 2;

  friend bool operator==(const LaserTagConfig&,
                         const LaserTagConfig&) = default;
};

void to_json(nlohmann::json& j, const LaserTagConfig& config);
void from_json(const nlohmann::json& j, LaserTagConfig& config);
void Validate(const LaserTagConfig& config);

struct TagAgentState {
  Cell position;
  Orientation orientation = Orientation::kNorth;
  int score = 0;
  friend bool operator==(const TagAgentState&, const TagAgentState&) = default;
};

Cell Forward(Orientation o);
Cell RightOf(Orientation o);
Orientation RotateLeft(Orientation o);
Orientation RotateRight(Orientation o);

class LaserTagGame final : public Game {
 public:
  explicit LaserTagGame(LaserTagConfig config);
  LaserTagGame(LaserTagConfig config, GridMap map);

  const GameSpec& spec() const override { return spec_; }
  std::string name() const override { return "lasertag"; }

  JointObservation Reset(uint64_t seed) override;
  StepResult Step(const JointAction& actions) override;
  JointObservation Observe() const override;

  bool done() const override { return done_; }
  int step_index() const override { return step_; }

  std::string Render() const override;
  nlohmann::json StateJson() const override;
  std::unique_ptr<Game> Clone() const override;

  // Egocentric window, (view_front + 1 + view_back) rows by
  // (2 * view_side + 1) columns by kNumChannels, flattened row-major. Row 0 is
  // the farthest cell ahead; column 0 is the leftmost.
  Observation ObserveAgent(int agent) const;
  int window_rows() const;
  int window_cols() const;
  int ObservationIndex(int forward, int lateral, int channel) const;

  const GridMap& map() const { return map_; }
  const LaserTagConfig& config() const { return config_; }
  const std::array<TagAgentState, kNumAgents>& agents() const {
    return agents_;
  }
  // Test hook: place agents directly. Positions must be distinct floor cells.
  void SetAgents(const std::array<TagAgentState, kNumAgents>& agents);

 private:
  Cell Target(int agent, int action) const;
  bool BeamHits(int shooter) const;
  void Respawn(const std::array<bool, kNumAgents>& tagged);

  LaserTagConfig config_;
  GridMap map_;
  GameSpec spec_;
  std::array<TagAgentState, kNumAgents> agents_;
  CounterRng rng_;
  int step_ = 0;
  bool done_ = true;
};

}  // namespace exploitlab::lasertag

#endif  // EXPLOITLAB_LASERTAG_H_
