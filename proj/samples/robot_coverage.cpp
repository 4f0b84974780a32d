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

// Score the four bump reactions of the coverage robot in a small furnished
// room from the same start pose.

#include <cstdio>

#include "adaptmc/gridworld.hpp"

int main() {
  using namespace adaptmc;
  const grid::Room furnished = grid::Room::from_ascii(
      "................\n"
      "................\n"
      "...####.........\n"
      "...####.....##..\n"
      "............##..\n"
      "................\n"
      "........#.......\n"
      "................\n");

  for (std::uint64_t id = 0; id < 4; ++id) {
    grid::Room room = furnished;
    const auto strategy = strategy_from_index(id, 2, 2);
    const auto run = grid::run_gridworld_episode(room, {{8, 4}, grid::Heading::kE}, policy_of(strategy), 60);
    std::printf("strategy %llu [left->%d, right->%d]: scanned %.0f of %zu cells\n",
                static_cast<unsigned long long>(id + 1), strategy[0], strategy[1], run.episode.total_payoff,
                room.free_count());
  }
  return 0;
}
