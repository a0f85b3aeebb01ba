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

#include "exploitlab/lasertag.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "exploitlab/errors.h"

namespace exploitlab::lasertag {
namespace {

constexpr std::string_view kArena11 =
    "###########\n"
    "#S.......S#\n"
    "#.........#\n"
    "#....#....#\n"
    "#....#....#\n"
    "#..#####..#\n"
    "#....#....#\n"
    "#....#....#\n"
    "#.........#\n"
    "#S.......S#\n"
    "###########\n";

constexpr std::string_view kArena9 =
    "#########\n"
    "#S.....S#\n"
    "#.......#\n"
    "#...#...#\n"
    "#..###..#\n"
    "#...#...#\n"
    "#.......#\n"
    "#S.....S#\n"
    "#########\n";

Cell operator+(Cell a, Cell b) { return {a.row + b.row, a.col + b.col}; }
Cell operator*(int k, Cell a) { return {k * a.row, k * a.col}; }
Cell operator-(Cell a) { return {-a.row, -a.col}; }

Orientation FacingCentre(Cell cell, int width, int height) {
  const double dr = (height - 1) / 2.0 - cell.row;
  const double dc = (width - 1) / 2.0 - cell.col;
  if (std::abs(dr) >= std::abs(dc)) {
    return dr < 0 ? Orientation::kNorth : Orientation::kSouth;
  }
  return dc < 0 ? Orientation::kWest : Orientation::kEast;
}

char Arrow(Orientation o) {
  switch (o) {
    case Orientation::kNorth:
      return '^';
    case Orientation::kEast:
      return '>';
    case Orientation::kSouth:
      return 'v';
    case Orientation::kWest:
      return '<';
  }
  return '?';
}

const char* OrientationName(Orientation o) {
  switch (o) {
    case Orientation::kNorth:
      return "N";
    case Orientation::kEast:
      return "E";
    case Orientation::kSouth:
      return "S";
    case Orientation::kWest:
      return "W";
  }
  return "?";
}

}  // namespace

Cell Forward(Orientation o) {
  switch (o) {
    case Orientation::kNorth:
      return {-1, 0};
    case Orientation::kEast:
      return {0, 1};
    case Orientation::kSouth:
      return {1, 0};
    case Orientation::kWest:
      return {0, -1};
  }
  return {0, 0};
}

Cell RightOf(Orientation o) { return Forward(RotateRight(o)); }

Orientation RotateLeft(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 3) % 4);
}

Orientation RotateRight(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 1) % 4);
}

// ---------------------------------------------------------------- GridMap

GridMap GridMap::Parse(std::string_view text) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.size() < 3) throw UsageError("map needs at least 3 rows");
  GridMap map;
  map.height_ = static_cast<int>(rows.size());
  map.width_ = static_cast<int>(rows[0].size());
  if (map.width_ < 3) throw UsageError("map needs at least 3 columns");
  map.obstacles_.assign(static_cast<std::size_t>(map.width_ * map.height_), 0);
  for (int r = 0; r < map.height_; ++r) {
    if (static_cast<int>(rows[r].size()) != map.width_) {
      throw UsageError("map row " + std::to_string(r) + " has width " +
                       std::to_string(rows[r].size()) + ", expected " +
                       std::to_string(map.width_));
    }
    for (int c = 0; c < map.width_; ++c) {
      const char ch = rows[r][c];
      const bool border =
          r == 0 || c == 0 || r == map.height_ - 1 || c == map.width_ - 1;
      if (ch == '#') {
        map.obstacles_[r * map.width_ + c] = 1;
      } else if (ch == '.' || ch == 'S') {
        if (border) {
          throw UsageError("map border cell (" + std::to_string(r) + ", " +
                           std::to_string(c) + ") must be an obstacle");
        }
        if (ch == 'S') {
          const Cell cell{r, c};
          map.spawns_.push_back(
              {cell, FacingCentre(cell, map.width_, map.height_)});
        }
      } else {
        throw UsageError(std::string("unexpected map character '") + ch + "'");
      }
    }
  }
  if (map.spawns_.size() < 2) throw UsageError("map needs at least 2 spawns");
  return map;
}

GridMap GridMap::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open map file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

GridMap GridMap::Builtin(const std::string& name) {
  if (name == "arena11") return Parse(kArena11);
  if (name == "arena9") return Parse(kArena9);
  throw UsageError("unknown builtin map '" + name + "'");
}

std::vector<std::string> GridMap::BuiltinNames() { return {"arena11", "arena9"}; }

bool GridMap::InBounds(Cell cell) const {
  return cell.row >= 0 && cell.col >= 0 && cell.row < height_ &&
         cell.col < width_;
}

bool GridMap::IsObstacle(Cell cell) const {
  return !InBounds(cell) || obstacles_[cell.row * width_ + cell.col] != 0;
}

std::string GridMap::ToText() const {
  std::string out;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      char ch = IsObstacle({r, c}) ? '#' : '.';
      for (const SpawnPoint& spawn : spawns_) {
        if (spawn.cell == Cell{r, c}) ch = 'S';
      }
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------- config

void to_json(nlohmann::json& j, const LaserTagConfig& config) {
  j = nlohmann::json{{"name", "lasertag"},
                     {"map", config.map},
                     {"map_file", config.map_file},
                     {"max_episode_steps", config.max_episode_steps},
                     {"tag_respawn", config.tag_respawn},
                     {"view_front", config.view_front},
                     {"view_side", config.view_side},
                     {"view_back", config.view_back}};
}

void from_json(const nlohmann::json& j, LaserTagConfig& config) {
  const LaserTagConfig defaults;
  config.map = j.value("map", defaults.map);
  config.map_file = j.value("map_file", defaults.map_file);
  config.max_episode_steps =
      j.value("max_episode_steps", defaults.max_episode_steps);
  config.tag_respawn = j.value("tag_respawn", defaults.tag_respawn);
  config.view_front = j.value("view_front", defaults.view_front);
  config.view_side = j.value("view_side", defaults.view_side);
  config.view_back = j.value("view_back", defaults.view_back);
}

void Validate(const LaserTagConfig& config) {
  if (config.max_episode_steps <= 0) {
    throw ConfigError("env.max_episode_steps", "must be positive");
  }
  if (config.view_front < 0) throw ConfigError("env.view_front", "must be >= 0");
  if (config.view_side < 0) throw ConfigError("env.view_side", "must be >= 0");
  if (config.view_back < 0) throw ConfigError("env.view_back", "must be >= 0");
  if (config.map_file.empty()) {
    bool known = false;
    for (const auto& name : GridMap::BuiltinNames()) known |= name == config.map;
    if (!known) throw ConfigError("env.map", "unknown builtin map '" + config.map + "'");
  }
}

// ---------------------------------------------------------------- game

LaserTagGame::LaserTagGame(LaserTagConfig config)
    : LaserTagGame(config, config.map_file.empty()
                               ? GridMap::Builtin(config.map)
                               : GridMap::Load(config.map_file)) {}

LaserTagGame::LaserTagGame(LaserTagConfig config, GridMap map)
    : config_(std::move(config)), map_(std::move(map)) {
  Validate(config_);
  const int obs_dim = window_rows() * window_cols() * kNumChannels;
  spec_.agent_roles = {"player-0", "player-1"};
  spec_.obs_dim = {obs_dim, obs_dim};
  spec_.action_space = {ActionSpace::Discrete(kNumActions),
                        ActionSpace::Discrete(kNumActions)};
  spec_.discount = 0.99;
  spec_.max_episode_steps = config_.max_episode_steps;
  agents_[0].position = map_.spawns()[0].cell;
  agents_[1].position = map_.spawns()[1].cell;
}

int LaserTagGame::window_rows() const {
  return config_.view_front + 1 + config_.view_back;
}

int LaserTagGame::window_cols() const { return 2 * config_.view_side + 1; }

int LaserTagGame::ObservationIndex(int forward, int lateral,
                                   int channel) const {
  const int row = config_.view_front - forward;
  const int col = lateral + config_.view_side;
  return (row * window_cols() + col) * kNumChannels + channel;
}

JointObservation LaserTagGame::Reset(uint64_t seed) {
  rng_ = CounterRng(seed);
  const auto& spawns = map_.spawns();
  const std::size_t n = spawns.size();
  const std::size_t first = rng_.UniformInt(n);
  std::size_t second = rng_.UniformInt(n - 1);
  if (second >= first) ++second;
  agents_[0] = {spawns[first].cell, spawns[first].orientation, 0};
  agents_[1] = {spawns[second].cell, spawns[second].orientation, 0};
  step_ = 0;
  done_ = false;
  return Observe();
}

void LaserTagGame::SetAgents(
    const std::array<TagAgentState, kNumAgents>& agents) {
  for (const auto& agent : agents) {
    if (map_.IsObstacle(agent.position)) {
      throw UsageError("agent placed on an obstacle");
    }
  }
  if (agents[0].position == agents[1].position) {
    throw UsageError("agents must occupy distinct cells");
  }
  agents_ = agents;
  if (done_) {
    step_ = 0;
    done_ = false;
  }
}

Cell LaserTagGame::Target(int agent, int action) const {
  const TagAgentState& self = agents_[agent];
  const Cell forward = Forward(self.orientation);
  const Cell right = RightOf(self.orientation);
  Cell delta{0, 0};
  switch (action) {
    case kForward:
    case kForwardRotateLeft:
    case kForwardRotateRight:
      delta = forward;
      break;
    case kBackward:
      delta = -forward;
      break;
    case kStepLeft:
      delta = -right;
      break;
    case kStepRight:
      delta = right;
      break;
    default:
      break;
  }
  const Cell target = self.position + delta;
  return map_.IsObstacle(target) ? self.position : target;
}

bool LaserTagGame::BeamHits(int shooter) const {
  const TagAgentState& self = agents_[shooter];
  const Cell step = Forward(self.orientation);
  const Cell opponent = agents_[1 - shooter].position;
  for (Cell cell = self.position + step; !map_.IsObstacle(cell);
       cell = cell + step) {
    if (cell == opponent) return true;
  }
  return false;
}

void LaserTagGame::Respawn(const std::array<bool, kNumAgents>& tagged) {
  const auto& spawns = map_.spawns();
  for (int agent = 0; agent < kNumAgents; ++agent) {
    if (!tagged[agent]) continue;
    const Cell other = agents_[1 - agent].position;
    // The other agent's cell is final unless it is still waiting to respawn.
    const bool other_pending = agent == 0 && tagged[1];
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < spawns.size(); ++i) {
      if (other_pending || !(spawns[i].cell == other)) free.push_back(i);
    }
    const SpawnPoint& spawn = spawns[free[rng_.UniformInt(free.size())]];
    agents_[agent].position = spawn.cell;
    agents_[agent].orientation = spawn.orientation;
  }
}

StepResult LaserTagGame::Step(const JointAction& actions) {
  if (done_) throw UsageError("step called on a finished episode");
  for (int agent = 0; agent < kNumAgents; ++agent) {
    ValidateAction(spec_.action_space[agent], actions[agent]);
  }
  const std::array<int, kNumAgents> act = {actions[0].discrete,
                                           actions[1].discrete};

  // Simultaneous movement: contested cells and swaps cancel both moves.
  std::array<Cell, kNumAgents> target = {Target(0, act[0]), Target(1, act[1])};
  const bool contested = target[0] == target[1];
  const bool swap =
      target[0] == agents_[1].position && target[1] == agents_[0].position;
  if (!contested && !swap) {
    agents_[0].position = target[0];
    agents_[1].position = target[1];
  }
  for (int agent = 0; agent < kNumAgents; ++agent) {
    if (act[agent] == kRotateLeft || act[agent] == kForwardRotateLeft) {
      agents_[agent].orientation = RotateLeft(agents_[agent].orientation);
    } else if (act[agent] == kRotateRight || act[agent] == kForwardRotateRight) {
      agents_[agent].orientation = RotateRight(agents_[agent].orientation);
    }
  }

  // Beams resolve against post-move positions; mutual tags both count.
  std::array<bool, kNumAgents> hit{};
  for (int agent = 0; agent < kNumAgents; ++agent) {
    hit[agent] = act[agent] == kFire && BeamHits(agent);
  }
  StepResult result;
  const double reward0 = static_cast<double>(hit[0]) - static_cast<double>(hit[1]);
  result.rewards = {reward0, -reward0};
  agents_[0].score += static_cast<int>(hit[0]) - static_cast<int>(hit[1]);
  agents_[1].score += static_cast<int>(hit[1]) - static_cast<int>(hit[0]);
  if (config_.tag_respawn && (hit[0] || hit[1])) Respawn({hit[1], hit[0]});

  ++step_;
  done_ = step_ >= config_.max_episode_steps;
  result.done = done_;
  result.step_index = step_;
  result.observations = Observe();
  return result;
}

Observation LaserTagGame::ObserveAgent(int agent) const {
  if (agent < 0 || agent >= kNumAgents) throw UsageError("agent out of range");
  const TagAgentState& self = agents_[agent];
  const Cell opponent = agents_[1 - agent].position;
  const Cell forward = Forward(self.orientation);
  const Cell right = RightOf(self.orientation);
  const int rows = window_rows();
  const int cols = window_cols();
  Observation obs(static_cast<std::size_t>(rows * cols * kNumChannels), 0.0);
  for (int r = 0; r < rows; ++r) {
    const int f = config_.view_front - r;
    for (int c = 0; c < cols; ++c) {
      const int s = c - config_.view_side;
      const Cell cell = self.position + f * forward + s * right;
      int channel = kEmptyChannel;
      if (f == 0 && s == 0) {
        channel = kEmptyChannel;
      } else if (map_.IsObstacle(cell)) {
        channel = kObstacleChannel;
      } else if (cell == opponent) {
        channel = kOpponentChannel;
      }
      obs[(r * cols + c) * kNumChannels + channel] = 1.0;
    }
  }
  return obs;
}

JointObservation LaserTagGame::Observe() const {
  return {ObserveAgent(0), ObserveAgent(1)};
}

std::string LaserTagGame::Render() const {
  std::string out;
  for (int r = 0; r < map_.height(); ++r) {
    for (int c = 0; c < map_.width(); ++c) {
      char ch = map_.IsObstacle({r, c}) ? '#' : '.';
      for (const auto& agent : agents_) {
        if (agent.position == Cell{r, c}) ch = Arrow(agent.orientation);
      }
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  std::ostringstream legend;
  legend << "step " << step_;
  for (int i = 0; i < kNumAgents; ++i) {
    legend << " | agent" << i << " (" << agents_[i].position.row << ","
           << agents_[i].position.col << ") "
           << OrientationName(agents_[i].orientation) << " score "
           << agents_[i].score;
  }
  out += legend.str();
  out.push_back('\n');
  return out;
}

nlohmann::json LaserTagGame::StateJson() const {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& agent : agents_) {
    agents.push_back({{"row", agent.position.row},
                      {"col", agent.position.col},
                      {"orientation", OrientationName(agent.orientation)},
                      {"score", agent.score}});
  }
  return {{"step", step_}, {"agents", agents}};
}

std::unique_ptr<Game> LaserTagGame::Clone() const {
  return std::make_unique<LaserTagGame>(*this);
}

}  // namespace exploitlab::lasertag
