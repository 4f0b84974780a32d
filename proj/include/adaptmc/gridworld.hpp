// Copyright 2026 The adaptmc Authors
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

// Bump-and-turn coverage robot on a cell grid, used as a source of
// presentations for the two-state / two-decision chain.
//
// The robot drives straight until the next cell is blocked. The bump is
// attributed to the left or right front sensor (MDP state 0 or 1). The
// decision taker then picks a reaction: back up one cell and turn 90 degrees
// left (decision 0) or right (decision 1). One bump-to-bump interval is one
// MDP step; payoff is the number of newly scanned cells.
//
// Coordinates: x grows east, y grows south. Headings are numbered clockwise
// from north.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adaptmc/errors.hpp"
#include "adaptmc/simulate.hpp"

namespace adaptmc::grid {

enum class Heading : int { kN = 0, kNE, kE, kSE, kS, kSW, kW, kNW };

inline constexpr std::array<std::string_view, 8> kHeadingNames{"N", "NE", "E", "SE", "S", "SW", "W", "NW"};

inline Heading rotate(Heading h, int eighths) {
  return static_cast<Heading>(((static_cast<int>(h) + eighths) % 8 + 8) % 8);
}

struct Cell {
  int x = 0;
  int y = 0;

  bool operator==(const Cell&) const = default;
};

inline Cell step(Cell c, Heading h) {
  static constexpr std::array<int, 8> dx{0, 1, 1, 1, 0, -1, -1, -1};
  static constexpr std::array<int, 8> dy{-1, -1, 0, 1, 1, 1, 0, -1};
  const auto i = static_cast<std::size_t>(h);
  return {c.x + dx[i], c.y + dy[i]};
}

struct RobotPose {
  Cell cell;
  Heading heading = Heading::kE;

  bool operator==(const RobotPose&) const = default;
};

enum class Sensor : int { kLeft = 0, kRight = 1 };

struct BumpEvent {
  Sensor sensor = Sensor::kLeft;

  int state() const { return static_cast<int>(sensor); }
};

inline constexpr int kBackTurnLeft = 0;
inline constexpr int kBackTurnRight = 1;

class Room {
 public:
  Room() = default;
  Room(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("room dimensions must be positive");
    obstacle_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), false);
    visited_ = obstacle_;
  }

  /// '#' is an obstacle, anything else free. Rows must have equal length.
  static Room from_ascii(std::string_view art) {
    std::vector<std::string_view> rows;
    while (!art.empty()) {
      const auto nl = art.find('\n');
      auto line = art.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) rows.push_back(line);
      if (nl == std::string_view::npos) break;
      art.remove_prefix(nl + 1);
    }
    if (rows.empty()) throw std::invalid_argument("empty room drawing");
    Room room(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
    for (int y = 0; y < room.height(); ++y) {
      const auto row = rows[static_cast<std::size_t>(y)];
      if (static_cast<int>(row.size()) != room.width()) throw std::invalid_argument("ragged room drawing");
      for (int x = 0; x < room.width(); ++x) {
        if (row[static_cast<std::size_t>(x)] == '#') room.add_obstacle({x, y});
      }
    }
    return room;
  }

  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool is_obstacle(Cell c) const { return in_bounds(c) && obstacle_[Index(c)]; }
  bool is_blocked(Cell c) const { return !in_bounds(c) || obstacle_[Index(c)]; }
  bool is_visited(Cell c) const { return in_bounds(c) && visited_[Index(c)]; }

  void add_obstacle(Cell c) {
    if (!in_bounds(c)) {
      throw std::out_of_range("obstacle (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ") outside room");
    }
    obstacle_[Index(c)] = true;
    visited_[Index(c)] = false;
  }

  /// Returns true when the cell was not scanned before.
  bool mark_visited(Cell c) {
    if (is_blocked(c)) throw std::logic_error("cannot scan a blocked cell");
    const bool fresh = !visited_[Index(c)];
    visited_[Index(c)] = true;
    visited_count_ += fresh ? 1 : 0;
    return fresh;
  }

  void clear_visited() {
    visited_.assign(visited_.size(), false);
    visited_count_ = 0;
  }

  std::size_t visited_count() const { return visited_count_; }

  std::size_t free_count() const {
    std::size_t n = 0;
    for (bool b : obstacle_) n += b ? 0 : 1;
    return n;
  }

  std::vector<Cell> obstacles() const {
    std::vector<Cell> out;
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        if (obstacle_[Index({x, y})]) out.push_back({x, y});
      }
    }
    return out;
  }

  /// Number of head-on collisions so far; decides their sensor attribution.
  std::uint64_t head_on_bumps = 0;

 private:
  std::size_t Index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<bool> obstacle_;
  std::vector<bool> visited_;
  std::size_t visited_count_ = 0;
};

inline bool boxed_in(const Room& room, Cell c) {
  for (int h = 0; h < 8; ++h) {
    if (!room.is_blocked(step(c, static_cast<Heading>(h)))) return false;
  }
  return true;
}

inline void require_valid(const Room& room, const RobotPose& pose) {
  if (room.is_blocked(pose.cell)) throw std::invalid_argument("robot pose is outside the room or on an obstacle");
}

struct Advance {
  RobotPose pose;
  int newly_visited = 0;
  BumpEvent bump;
};

/// Drives along the heading, scanning cells (the current one included), until
/// the next cell is blocked. A blocked front-left diagonal alone means a left
/// bump, a blocked front-right alone a right bump; symmetric contacts
/// alternate left, right, left, ...
inline Advance advance_until_bump(Room& room, RobotPose pose) {
  require_valid(room, pose);
  if (boxed_in(room, pose.cell)) throw Stuck("robot is boxed in on all eight headings");
  Advance out;
  out.newly_visited += room.mark_visited(pose.cell) ? 1 : 0;
  while (!room.is_blocked(step(pose.cell, pose.heading))) {
    pose.cell = step(pose.cell, pose.heading);
    out.newly_visited += room.mark_visited(pose.cell) ? 1 : 0;
  }
  out.pose = pose;
  const bool left = room.is_blocked(step(pose.cell, rotate(pose.heading, -1)));
  const bool right = room.is_blocked(step(pose.cell, rotate(pose.heading, +1)));
  if (left != right) {
    out.bump.sensor = left ? Sensor::kLeft : Sensor::kRight;
  } else {
    out.bump.sensor = room.head_on_bumps % 2 == 0 ? Sensor::kLeft : Sensor::kRight;
    ++room.head_on_bumps;
  }
  return out;
}

/// Back up one cell if that cell is free, then turn 90 degrees.
inline RobotPose apply_reaction(const Room& room, RobotPose pose, int decision) {
  if (decision != kBackTurnLeft && decision != kBackTurnRight) {
    throw std::invalid_argument("reaction must be 0 (back, turn left) or 1 (back, turn right)");
  }
  const Cell behind = step(pose.cell, rotate(pose.heading, 4));
  if (!room.is_blocked(behind)) pose.cell = behind;
  pose.heading = rotate(pose.heading, decision == kBackTurnLeft ? -2 : +2);
  return pose;
}

/// Step-at-a-time episode on a room it owns. The pending bump's sensor is
/// the current MDP state; decide() applies a reaction and drives to the next
/// bump. Cells scanned before the first bump are credited to the first step
/// and cells scanned after the last complete step to that step, so step
/// payoffs always add up to the episode total.
class CoverageRun {
 public:
  CoverageRun(Room room, RobotPose start) : room_(std::move(room)) {
    require_valid(room_, start);
    initial_visited_ = room_.visited_count();
    pose_ = start;
    try {
      const auto adv = advance_until_bump(room_, start);
      pose_ = adv.pose;
      pending_ = adv.bump;
      carried_ = adv.newly_visited;
    } catch (const Stuck&) {
      carried_ = room_.mark_visited(start.cell) ? 1 : 0;
      stuck_ = true;
    }
  }

  bool stuck() const { return stuck_; }
  const Room& room() const { return room_; }
  Room release_room() && { return std::move(room_); }
  const RobotPose& pose() const { return pose_; }
  std::optional<BumpEvent> pending() const { return stuck_ ? std::nullopt : std::optional<BumpEvent>(pending_); }

  /// Reacts to the pending bump. Returns the completed step, or nullopt when
  /// the robot got stuck before the next bump.
  std::optional<Step> decide(int decision) {
    if (stuck_) throw Stuck("robot is stuck; the episode is over");
    const int state = pending_.state();
    pose_ = apply_reaction(room_, pose_, decision);
    double payoff = carried_ + (room_.mark_visited(pose_.cell) ? 1 : 0);
    carried_ = 0.0;
    Advance next;
    try {
      next = advance_until_bump(room_, pose_);
    } catch (const Stuck&) {
      carried_ = payoff;
      stuck_ = true;
      return std::nullopt;
    }
    payoff += next.newly_visited;
    pose_ = next.pose;
    pending_ = next.bump;
    Step s{state, decision, pending_.state(), payoff};
    episode_.steps.push_back(s);
    episode_.total_payoff += payoff;
    return s;
  }

  /// The episode so far with any uncredited coverage folded in.
  Episode episode() const {
    Episode ep = episode_;
    if (ep.steps.empty()) {
      ep.total_payoff = carried_;
    } else {
      *ep.steps.back().step_payoff += carried_;
      ep.total_payoff += carried_;
    }
    return ep;
  }

  std::size_t initial_visited() const { return initial_visited_; }

 private:
  Room room_;
  RobotPose pose_;
  BumpEvent pending_;
  Episode episode_;
  double carried_ = 0.0;
  bool stuck_ = false;
  std::size_t initial_visited_ = 0;
};

struct GridEpisode {
  Episode episode;
  RobotPose final_pose;
  bool stuck = false;
  std::size_t initial_visited = 0;
  std::size_t final_visited = 0;
};

/// Runs up to `max_bumps` decisions, ending early if the robot gets stuck.
/// `room` is updated with the scanned cells.
inline GridEpisode run_gridworld_episode(Room& room, RobotPose start, const Policy& policy, int max_bumps) {
  if (max_bumps < 1) throw std::invalid_argument("max_bumps must be at least 1");
  require_valid(room, start);
  CoverageRun run(std::move(room), start);
  try {
    for (int b = 0; b < max_bumps && !run.stuck(); ++b) run.decide(policy(run.pending()->state()));
  } catch (...) {
    room = std::move(run).release_room();
    throw;
  }
  GridEpisode out;
  out.episode = run.episode();
  out.final_pose = run.pose();
  out.stuck = run.stuck();
  out.initial_visited = run.initial_visited();
  out.final_visited = run.room().visited_count();
  room = std::move(run).release_room();
  return out;
}

/// Uniform free cell and uniform heading.
inline RobotPose random_start_pose(const Room& room, Rng& rng) {
  std::vector<Cell> free;
  for (int y = 0; y < room.height(); ++y) {
    for (int x = 0; x < room.width(); ++x) {
      if (!room.is_blocked({x, y})) free.push_back({x, y});
    }
  }
  if (free.empty()) throw std::invalid_argument("room has no free cell");
  const auto cell = free[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(free.size()))];
  const auto heading = static_cast<Heading>(static_cast<int>(uniform01(rng) * 8.0));
  return {cell, heading};
}

}  // namespace adaptmc::grid
