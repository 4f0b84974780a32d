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

#include "adaptmc/inverse_estimation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_util.hpp"

namespace adaptmc {
namespace {

using testing::Table1;

ObservedEpisode MakeEpisode(std::vector<std::pair<int, int>> state_decisions, int last_next, double v = 0.0) {
  ObservedEpisode ep;
  ep.total_payoff = v;
  for (std::size_t n = 0; n < state_decisions.size(); ++n) {
    const int next = n + 1 < state_decisions.size() ? state_decisions[n + 1].first : last_next;
    ep.steps.push_back({state_decisions[n].first, state_decisions[n].second, next});
  }
  return ep;
}

std::vector<ObservedEpisode> Observed(const std::vector<Episode>& batch) {
  std::vector<ObservedEpisode> out;
  for (const auto& ep : batch) out.push_back(ep.observe());
  return out;
}

TEST(IdentifyStrategy, PureStrategyEpisode) {
  const auto batch = simulate_batch(Table1(), TeacherSchedule{{{Strategy{{0, 1}}, 5}}}, 30, 1);
  for (const auto& ep : batch) {
    const auto id = identify_strategy(ep.observe(), 2, 2);
    ASSERT_TRUE(id.complete());
    EXPECT_EQ(id.strategy, (Strategy{{0, 1}}));
  }
}

TEST(IdentifyStrategy, MajorityVote) {
  const auto ep = MakeEpisode({{0, 0}, {0, 0}, {0, 1}, {1, 1}}, 0);
  const auto id = identify_strategy(ep, 2, 2);
  EXPECT_EQ(id.strategy, (Strategy{{0, 1}}));
  EXPECT_TRUE(id.complete());
}

TEST(IdentifyStrategy, TiesGoToLowerDecision) {
  const auto id = identify_strategy(MakeEpisode({{1, 1}, {1, 0}}, 1), 2, 2);
  EXPECT_EQ(id.strategy[1], 0);
}

TEST(IdentifyStrategy, UnvisitedStateIsFlagged) {
  const auto id = identify_strategy(MakeEpisode({{0, 1}, {0, 1}}, 0), 2, 2);
  EXPECT_EQ(id.strategy, (Strategy{{1, 0}}));
  EXPECT_TRUE(id.visited[0]);
  EXPECT_FALSE(id.visited[1]);
  EXPECT_FALSE(id.complete());
}

TEST(IdentifyStrategy, EmptyEpisodeRejected) {
  EXPECT_THROW(identify_strategy(ObservedEpisode{}, 2, 2), std::invalid_argument);
}

TEST(IngestTransitions, SingleStep) {
  const auto counts = ingest_transitions(TransitionCounts(2, 2), MakeEpisode({{0, 0}}, 1));
  EXPECT_EQ(counts(0, 0, 1), 1u);
  EXPECT_EQ(counts.total(), 1u);
}

TEST(IngestTransitions, MassAndAdditivity) {
  const auto ep = simulate_batch(Table1(), cycling_schedule(2, 2, 1), 30, 3).front().observe();
  const auto once = ingest_transitions(TransitionCounts(2, 2), ep);
  EXPECT_EQ(once.total(), 30u);
  const auto twice = ingest_transitions(once, ep);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) EXPECT_EQ(twice(k, i, j), 2 * once(k, i, j));
    }
  }
}

TEST(IngestTransitions, OrderDoesNotMatter) {
  auto episodes = Observed(simulate_batch(Table1(), cycling_schedule(2, 2, 12), 30, 5));
  TransitionCounts forward(2, 2);
  for (const auto& ep : episodes) forward = ingest_transitions(forward, ep);
  std::mt19937_64 rng(1);
  std::shuffle(episodes.begin(), episodes.end(), rng);
  TransitionCounts shuffled(2, 2);
  for (const auto& ep : episodes) shuffled = ingest_transitions(shuffled, ep);
  EXPECT_EQ(forward, shuffled);
}

TEST(IngestTransitions, RangeCheck) {
  EXPECT_THROW(ingest_transitions(TransitionCounts(2, 2), MakeEpisode({{0, 2}}, 1)), std::out_of_range);
}

TEST(TransitionEstimates, FrequenciesAndFallback) {
  TransitionCounts counts(2, 2);
  counts(0, 0, 0) = 1;
  counts(0, 0, 1) = 3;
  const auto est = transition_estimates(counts);
  EXPECT_DOUBLE_EQ(est.p_hat[0](0, 0), 0.25);
  EXPECT_DOUBLE_EQ(est.p_hat[0](0, 1), 0.75);
  EXPECT_EQ(est.sample_size(0, 0), 4u);
  EXPECT_DOUBLE_EQ(est.p_hat[1](1, 0), 0.5);
  EXPECT_DOUBLE_EQ(est.p_hat[1](1, 1), 0.5);
  EXPECT_EQ(est.sample_size(1, 1), 0u);
  EXPECT_EQ(est.unexplored().size(), 3u);
}

TEST(TransitionEstimates, Table1ExperimentConverges) {
  const auto model = Table1();
  TransitionCounts counts(2, 2);
  for (const auto& ep : simulate_batch(model, cycling_schedule(2, 2, 100), 30, 7)) {
    counts = ingest_transitions(counts, ep.observe());
  }
  const auto est = transition_estimates(counts);
  for (int k = 0; k < 2; ++k) {
    EXPECT_LE((est.p_hat[k] - model.transitions[k]).cwiseAbs().maxCoeff(), 0.05);
  }
}

TEST(EpisodeRegressor, Counts) {
  const auto phi = episode_regressor(MakeEpisode({{0, 0}, {1, 1}, {0, 0}}, 1), 2, 2);
  EXPECT_EQ(phi.phi, (std::vector<int>{2, 0, 0, 1}));
}

TEST(EpisodeRegressor, SumsToLengthAndRespectsStrategy) {
  const auto ep = simulate_batch(Table1(), TeacherSchedule{{{Strategy{{0, 0}}, 1}}}, 30, 2).front().observe();
  const auto phi = episode_regressor(ep, 2, 2);
  int sum = 0;
  for (int c : phi.phi) sum += c;
  EXPECT_EQ(sum, 30);
  EXPECT_EQ(phi.phi[1], 0);  // state 0, decision 1
  EXPECT_EQ(phi.phi[3], 0);  // state 1, decision 1
}

TEST(RlsInit, Construction) {
  const auto s = rls_init(4, 1e6);
  EXPECT_EQ(s.r_hat, Vector::Zero(4));
  EXPECT_EQ(s.Q, 1e6 * Matrix::Identity(4, 4));
  EXPECT_EQ(s.q, 0u);
  EXPECT_THROW(rls_init(4, 0.0), std::invalid_argument);
  EXPECT_THROW(rls_init(4, -1.0), std::invalid_argument);
}

TEST(RlsUpdate, ZeroRegressorOnlyCounts) {
  const auto s0 = rls_init(4, 1e6);
  const auto s1 = rls_update(s0, Vector::Zero(4), 123.0);
  EXPECT_EQ(s1.r_hat, s0.r_hat);
  EXPECT_EQ(s1.Q, s0.Q);
  EXPECT_EQ(s1.q, 1u);
}

TEST(RlsUpdate, SingleObservationByHand) {
  const auto s0 = rls_init(4, 1e6);
  Vector phi(4);
  phi << 30, 0, 0, 0;
  const auto s1 = rls_update(s0, phi, 2319.0);
  EXPECT_NEAR(s1.r_hat[0], 1e6 * 30 * 2319 / (900 * 1e6 + 1), 1e-9);
  EXPECT_NEAR(s1.r_hat[0], 77.3, 1e-6);
  EXPECT_EQ(s1.r_hat.tail(3), Vector::Zero(3));
  EXPECT_EQ(s0.q, 0u);  // input untouched
}

TEST(RlsUpdate, RecoversNoiseFreeCoefficients) {
  Vector r(4);
  r << 77.30, 23.54, 33.47, 68.04;
  const std::vector<std::vector<double>> rows{{5, 0, 25, 0}, {10, 0, 0, 20}, {0, 6, 24, 0}, {0, 12, 0, 18}};
  auto s = rls_init(4, 1e6);
  for (const auto& row : rows) {
    const Vector phi = Eigen::Map<const Vector>(row.data(), 4);
    s = rls_update(s, phi, phi.dot(r));
  }
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(s.r_hat[i], r[i], 1e-3 * std::abs(r[i]));
}

TEST(RlsUpdate, Errors) {
  const auto s = rls_init(4);
  EXPECT_THROW(rls_update(s, Vector::Zero(3), 1.0), std::invalid_argument);
  EXPECT_THROW(rls_update(s, Vector::Zero(4), std::nan("")), std::invalid_argument);
  EXPECT_THROW(rls_update(s, Vector::Zero(4), 1.0, 0.0), std::invalid_argument);
}

TEST(RlsUpdate, MatchesRidgeBatchOracle) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> count(0, 30);
  std::uniform_real_distribution<double> coef(-100.0, 100.0);
  std::normal_distribution<double> noise(0.0, 20.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 8;
    const int q = 1 + (trial * 7) % 50;
    std::vector<double> truth(static_cast<std::size_t>(d));
    for (auto& t : truth) t = coef(rng);
    std::vector<std::vector<double>> phis;
    std::vector<double> vs;
    auto s = rls_init(d, 1e6);
    for (int n = 0; n < q; ++n) {
      std::vector<double> row(static_cast<std::size_t>(d));
      double v = noise(rng);
      for (int c = 0; c < d; ++c) {
        row[static_cast<std::size_t>(c)] = count(rng);
        v += row[static_cast<std::size_t>(c)] * truth[static_cast<std::size_t>(c)];
      }
      s = rls_update(s, Eigen::Map<const Vector>(row.data(), d), v);
      phis.push_back(row);
      vs.push_back(v);
    }
    const auto oracle = testing::RidgeBatchOracle(phis, vs, 1e6);
    long double err = 0.0L, norm = 0.0L;
    for (int c = 0; c < d; ++c) {
      err = std::max(err, std::fabs(s.r_hat[c] - oracle[static_cast<std::size_t>(c)]));
      norm = std::max(norm, std::fabs(oracle[static_cast<std::size_t>(c)]));
    }
    EXPECT_LE(static_cast<double>(err / norm), 1e-6) << "d=" << d << " q=" << q;
  }
}

TEST(RlsUpdate, ShermanMorrisonIdentity) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> count(0, 30);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + trial % 8;
    auto s = rls_init(d, 1e3);
    for (int n = 0; n < 10; ++n) {
      Vector phi(d);
      for (int c = 0; c < d; ++c) phi[c] = count(rng);
      const auto next = rls_update(s, phi, 1.0);
      const Matrix check = next.Q * (s.Q.inverse() + phi * phi.transpose());
      EXPECT_LE((check - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE((next.Q - next.Q.transpose()).cwiseAbs().maxCoeff(), 1e-9);
      s = next;
    }
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(s.Q).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(RlsUpdate, ForgettingTracksDrift) {
  // Single coefficient jumps from 10 to 50 halfway; lambda < 1 follows it.
  auto plain = rls_init(1);
  auto forgetful = rls_init(1);
  Vector phi = Vector::Constant(1, 30.0);
  for (int n = 0; n < 200; ++n) {
    const double v = 30.0 * (n < 100 ? 10.0 : 50.0);
    plain = rls_update(plain, phi, v);
    forgetful = rls_update(forgetful, phi, v, 0.9);
  }
  EXPECT_NEAR(forgetful.r_hat[0], 50.0, 0.01);
  EXPECT_NEAR(plain.r_hat[0], 30.0, 0.1);
}

TEST(EstimatedGainModel, ExactParametersGiveOptimalStrategy) {
  const auto model = Table1();
  auto rls = rls_init(4);
  rls.r_hat << 77.30, 23.54, 33.47, 68.04;
  const auto sol = solve_direct(estimated_gain_model(model.transitions, rls));
  EXPECT_EQ(sol.best.strategy, (Strategy{{0, 1}}));
  EXPECT_NEAR(sol.best.mean_gain, testing::kV01, 1e-10);
}

TEST(EstimatedGainModel, ZeroPayoffsTieBreak) {
  const auto sol = solve_direct(estimated_gain_model(Table1().transitions, rls_init(4)));
  EXPECT_EQ(sol.best_index, 0u);
  for (const auto& row : sol.table) EXPECT_EQ(row.evaluation->mean_gain, 0.0);
}

TEST(EstimatedGainModel, UniformTransitions) {
  auto rls = rls_init(4);
  rls.r_hat << 77.30, 23.54, 33.47, 68.04;
  const std::vector<Matrix> uniform(2, Matrix::Constant(2, 2, 0.5));
  const auto sol = solve_direct(estimated_gain_model(uniform, rls));
  // Stationary law is uniform, so V^s is the mean of the chosen r_i^k.
  EXPECT_NEAR(sol.table[0].evaluation->mean_gain, (77.30 + 33.47) / 2, 1e-12);
  EXPECT_NEAR(sol.table[1].evaluation->mean_gain, (77.30 + 68.04) / 2, 1e-12);
  EXPECT_NEAR(sol.table[2].evaluation->mean_gain, (23.54 + 33.47) / 2, 1e-12);
  EXPECT_NEAR(sol.table[3].evaluation->mean_gain, (23.54 + 68.04) / 2, 1e-12);
  EXPECT_EQ(sol.best_index, 1u);
}

TEST(EstimatedGainModel, ShapeMismatch) {
  EXPECT_THROW(estimated_gain_model(Table1().transitions, rls_init(3)), std::invalid_argument);
}

}  // namespace
}  // namespace adaptmc
