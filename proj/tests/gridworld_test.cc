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

#include "adaptmc/gridworld.hpp"

#include <gtest/gtest.h>

namespace adaptmc::grid {
namespace {

TEST(Room, FromAscii) {
  const auto room = Room::from_ascii(
      "..#\n"
      "...\n");
  EXPECT_EQ(room.width(), 3);
  EXPECT_EQ(room.height(), 2);
  EXPECT_TRUE(room.is_obstacle({2, 0}));
  EXPECT_EQ(room.free_count(), 5u);
  EXPECT_THROW(Room::from_ascii("..\n...\n"), std::invalid_argument);
  EXPECT_THROW(Room::from_ascii(""), std::invalid_argument);
}

TEST(Room, ObstacleOutOfBounds) {
  Room room(3, 3);
  EXPECT_THROW(room.add_obstacle({3, 0}), std::out_of_range);
}

TEST(AdvanceUntilBump, CorridorEast) {
  Room room(5, 1);
  const auto adv = advance_until_bump(room, {{0, 0}, Heading::kE});
  EXPECT_EQ(adv.newly_visited, 5);
  EXPECT_EQ(adv.pose.cell, (Cell{4, 0}));
  EXPECT_EQ(adv.bump.sensor, Sensor::kLeft);  // head-on, first of the alternation
  EXPECT_EQ(room.visited_count(), 5u);
}

TEST(AdvanceUntilBump, StartAgainstWall) {
  Room room(4, 4);
  room.mark_visited({3, 1});
  const auto adv = advance_until_bump(room, {{3, 1}, Heading::kE});
  EXPECT_EQ(adv.newly_visited, 0);
  EXPECT_EQ(adv.pose.cell, (Cell{3, 1}));
}

TEST(AdvanceUntilBump, BoxedInIsStuck) {
  Room single(1, 1);
  EXPECT_THROW(advance_until_bump(single, {{0, 0}, Heading::kN}), Stuck);
  auto walled = Room::from_ascii(
      "###\n"
      "#.#\n"
      "###\n");
  EXPECT_THROW(advance_until_bump(walled, {{1, 1}, Heading::kE}), Stuck);
}

TEST(AdvanceUntilBump, HeadOnBumpsAlternate) {
  Room room(5, 5);
  std::vector<Sensor> seen;
  for (int n = 0; n < 4; ++n) seen.push_back(advance_until_bump(room, {{2, 2}, Heading::kE}).bump.sensor);
  EXPECT_EQ(seen, (std::vector<Sensor>{Sensor::kLeft, Sensor::kRight, Sensor::kLeft, Sensor::kRight}));
}

TEST(AdvanceUntilBump, GlancingContactPicksSide) {
  Room room(5, 5);
  // Heading north-east into the north wall: the wall is on the left.
  auto adv = advance_until_bump(room, {{0, 2}, Heading::kNE});
  EXPECT_EQ(adv.pose.cell, (Cell{2, 0}));
  EXPECT_EQ(adv.bump.sensor, Sensor::kLeft);
  // Heading north-east into the east wall: the wall is on the right.
  adv = advance_until_bump(room, {{2, 4}, Heading::kNE});
  EXPECT_EQ(adv.pose.cell, (Cell{4, 2}));
  EXPECT_EQ(adv.bump.sensor, Sensor::kRight);
  EXPECT_EQ(room.head_on_bumps, 0u);
}

TEST(ApplyReaction, RotationTable) {
  Room room(5, 5);
  auto pose = apply_reaction(room, {{2, 2}, Heading::kE}, kBackTurnLeft);
  EXPECT_EQ(pose, (RobotPose{{1, 2}, Heading::kN}));
  pose = apply_reaction(room, {{2, 2}, Heading::kE}, kBackTurnRight);
  EXPECT_EQ(pose, (RobotPose{{1, 2}, Heading::kS}));
  pose = apply_reaction(room, {{2, 2}, Heading::kNE}, kBackTurnRight);
  EXPECT_EQ(pose, (RobotPose{{1, 3}, Heading::kSE}));
}

TEST(ApplyReaction, BlockedBehindOnlyRotates) {
  Room room(5, 5);
  EXPECT_EQ(apply_reaction(room, {{0, 2}, Heading::kE}, kBackTurnLeft), (RobotPose{{0, 2}, Heading::kN}));
  EXPECT_THROW(apply_reaction(room, {{0, 2}, Heading::kE}, 2), std::invalid_argument);
}

TEST(RunGridworldEpisode, ImmediateStuckCountsStartCell) {
  Room room(1, 1);
  const auto out = run_gridworld_episode(room, {{0, 0}, Heading::kE}, policy_of(Strategy{{0, 0}}), 10);
  EXPECT_TRUE(out.stuck);
  EXPECT_TRUE(out.episode.steps.empty());
  EXPECT_EQ(out.episode.total_payoff, 1.0);
}

TEST(RunGridworldEpisode, CorridorByHand) {
  // 5x1 corridor, heading east from the west end. Bump at (4,0) is
  // head-on (left). Back-turn-left: to (3,0) facing north, blocked at once,
  // head-on again (right). Back-turn-left: south of (3,0) is outside, so
  // rotate only, facing west; drive to (0,0), head-on (left).
  Room room(5, 1);
  const auto out = run_gridworld_episode(room, {{0, 0}, Heading::kE}, policy_of(Strategy{{0, 0}}), 2);
  ASSERT_EQ(out.episode.steps.size(), 2u);
  EXPECT_EQ(out.episode.steps[0], (Step{0, 0, 1, 5.0}));
  EXPECT_EQ(out.episode.steps[1], (Step{1, 0, 0, 0.0}));
  EXPECT_EQ(out.final_pose, (RobotPose{{0, 0}, Heading::kW}));
  EXPECT_EQ(out.episode.total_payoff, 5.0);
}

TEST(RunGridworldEpisode, StrategiesDifferInEmptyRoom) {
  std::vector<double> payoff;
  for (const auto& s : enumerate_strategies(2, 2)) {
    Room room(20, 20);
    const auto out = run_gridworld_episode(room, {{3, 5}, Heading::kNE}, policy_of(s), 40);
    EXPECT_TRUE(validate_episode(out.episode, 2, 2).empty());
    EXPECT_LE(out.episode.total_payoff, 400.0);
    payoff.push_back(out.episode.total_payoff);
  }
  RecordProperty("payoffs", std::to_string(payoff[0]) + "," + std::to_string(payoff[1]) + "," +
                                std::to_string(payoff[2]) + "," + std::to_string(payoff[3]));
  EXPECT_NE(payoff[0], payoff[3]);
}

TEST(RunGridworldEpisode, Deterministic) {
  const auto room0 = Room::from_ascii(
      "..........\n"
      "...##.....\n"
      "...##...#.\n"
      "..........\n"
      "......#...\n");
  Room a = room0, b = room0;
  const auto policy = policy_of(Strategy{{0, 1}});
  EXPECT_EQ(run_gridworld_episode(a, {{0, 0}, Heading::kSE}, policy, 50).episode,
            run_gridworld_episode(b, {{0, 0}, Heading::kSE}, policy, 50).episode);
}

TEST(RunGridworldEpisode, PayoffIsCoverageGain) {
  Room room(12, 9);
  room.add_obstacle({5, 4});
  room.mark_visited({0, 0});
  const auto out = run_gridworld_episode(room, {{6, 6}, Heading::kW}, policy_of(Strategy{{1, 0}}), 30);
  EXPECT_EQ(out.episode.total_payoff, static_cast<double>(out.final_visited - out.initial_visited));
  EXPECT_EQ(out.initial_visited, 1u);
  EXPECT_TRUE(validate_episode(out.episode, 2, 2).empty());
}

TEST(RunGridworldEpisode, Preconditions) {
  Room room(3, 3);
  room.add_obstacle({1, 1});
  EXPECT_THROW(run_gridworld_episode(room, {{0, 0}, Heading::kE}, policy_of(Strategy{{0, 0}}), 0),
               std::invalid_argument);
  EXPECT_THROW(run_gridworld_episode(room, {{1, 1}, Heading::kE}, policy_of(Strategy{{0, 0}}), 3),
               std::invalid_argument);
  EXPECT_THROW(run_gridworld_episode(room, {{0, 0}, Heading::kE}, [](int) { return 3; }, 3), std::invalid_argument);
}

TEST(RandomStartPose, LandsOnFreeCell) {
  auto room = Room::from_ascii(
      "#.#\n"
      "###\n");
  Rng rng(5);
  for (int n = 0; n < 20; ++n) EXPECT_EQ(random_start_pose(room, rng).cell, (Cell{1, 0}));
}

}  // namespace
}  // namespace adaptmc::grid
