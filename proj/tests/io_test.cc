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

#include "adaptmc/io.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "test_util.hpp"

namespace adaptmc::io {
namespace {

TEST(ModelJson, ShippedTable1MatchesFixture) {
  const auto model = load_model(std::string(ADAPTMC_DATA_DIR) + "/table1.json");
  const auto fixture = testing::Table1();
  EXPECT_EQ(model.num_states, 2);
  EXPECT_EQ(model.num_decisions, 2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(model.transitions[k], fixture.transitions[k]);
    EXPECT_EQ(model.payoffs[k], fixture.payoffs[k]);
  }
}

TEST(ModelJson, RoundTrip) {
  std::mt19937_64 rng(1);
  const auto model = testing::RandomModel(4, 3, rng);
  const auto back = model_from_json(Json::parse(to_json(model).dump()));
  EXPECT_EQ(back.initial_distribution, model.initial_distribution);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(back.transitions[k], model.transitions[k]);
    EXPECT_EQ(back.payoffs[k], model.payoffs[k]);
  }
}

TEST(ModelJson, Malformed) {
  EXPECT_THROW(model_from_json(Json::parse(R"({"num_states": 2})")), std::invalid_argument);
  EXPECT_THROW(model_from_json(Json::parse(R"({"num_states": 1, "num_decisions": 1, "initial_distribution": [1],
      "transitions": [[[1, 0], [0.5]]], "payoffs": [[[1, 2]]]})")),
               std::invalid_argument);
  EXPECT_THROW(load_model("/nonexistent/model.json"), std::runtime_error);
}

TEST(EpisodeLog, RoundTripPreservesEpisodes) {
  std::mt19937_64 gen(3);
  const auto model = testing::RandomModel(3, 2, gen);
  const auto batch = simulate_batch(model, cycling_schedule(3, 2, 20), 17, 4);
  std::stringstream full;
  write_episode_log(batch, full, true);
  EXPECT_EQ(read_episode_log(full), batch);

  std::stringstream observed;
  write_episode_log(observe_all(batch), observed);
  const auto back = read_episode_log(observed);
  ASSERT_EQ(back.size(), batch.size());
  for (std::size_t e = 0; e < batch.size(); ++e) {
    EXPECT_EQ(back[e].observe(), batch[e].observe());
    for (const auto& s : back[e].steps) EXPECT_FALSE(s.step_payoff.has_value());
  }
}

TEST(EpisodeLog, ObservationGradeLineFormat) {
  const Episode ep{{{0, 0, 1, 79.0}}, 79.0};
  std::stringstream out;
  write_episode_log(std::vector<Episode>{ep}, out, false);
  EXPECT_EQ(out.str(), R"({"steps":[{"decision":0,"next_state":1,"state":0}],"total_payoff":79.0})"
                       "\n");
}

TEST(EpisodeLog, BadLineReportsLineNumber) {
  std::stringstream in("{\"steps\":[],\"total_payoff\":1}\n\nnot json\n");
  try {
    read_episode_log(in);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(RoomJson, RoundTripAndValidation) {
  const auto room = grid::Room::from_ascii(
      "#...\n"
      "..#.\n");
  const auto back = room_from_json(Json::parse(to_json(room).dump()));
  EXPECT_EQ(back.width(), 4);
  EXPECT_EQ(back.height(), 2);
  EXPECT_TRUE(back.is_obstacle({0, 0}));
  EXPECT_TRUE(back.is_obstacle({2, 1}));
  EXPECT_EQ(back.free_count(), 6u);
  EXPECT_THROW(room_from_json(Json::parse(R"({"width": 3, "height": 3, "obstacles": [[3, 0]]})")),
               std::invalid_argument);
  EXPECT_THROW(room_from_json(Json::parse(R"({"width": 0, "height": 3})")), std::invalid_argument);
}

TEST(EstimatorSnapshot, RoundTrip) {
  const auto model = testing::Table1();
  EstimatorState est(2, 2);
  for (const auto& ep : simulate_batch(model, cycling_schedule(2, 2, 12), 30, 2)) {
    est.counts = ingest_transitions(est.counts, ep.observe());
    est.rls = rls_update(est.rls, episode_regressor(ep.observe(), 2, 2), ep.total_payoff);
  }
  const auto j = to_json(est);
  EXPECT_TRUE(j.contains("p_hat"));
  const auto back = estimator_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.counts, est.counts);
  EXPECT_EQ(back.rls.r_hat, est.rls.r_hat);
  EXPECT_EQ(back.rls.Q, est.rls.Q);
  EXPECT_EQ(back.rls.q, est.rls.q);
}

TEST(ControllerSnapshot, RoundTripIsByteStable) {
  std::vector<ObservedEpisode> eps;
  for (const auto& ep : simulate_batch(testing::Table1(), cycling_schedule(2, 2, 9), 30, 1)) eps.push_back(ep.observe());
  const auto fit = batch_fit(ControllerConfig{}, eps);
  const auto text = to_json(fit.snapshot).dump();
  EXPECT_EQ(to_json(snapshot_from_json(Json::parse(text))).dump(), text);
}

}  // namespace
}  // namespace adaptmc::io
