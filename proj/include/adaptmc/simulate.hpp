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

// Episode ("presentation") generation from a controlled chain.
//
// Reproducibility: every episode of a batch owns its generator, seeded with
// base_seed + episode_index, so any single episode can be regenerated (or
// replayed interactively, see service.hpp) without running the others.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adaptmc/mdp_core.hpp"

namespace adaptmc {

using Rng = std::mt19937_64;

/// One observed transition. step_payoff is only known to a full-knowledge
/// simulator and is never part of what an observer sees.
struct Step {
  int state = 0;
  int decision = 0;
  int next_state = 0;
  std::optional<double> step_payoff;

  bool operator==(const Step&) const = default;
};

struct ObservedStep {
  int state = 0;
  int decision = 0;
  int next_state = 0;

  bool operator==(const ObservedStep&) const = default;
};

/// What the decision taker's observer records: states, decisions and the
/// single payoff total revealed when the presentation ends.
struct ObservedEpisode {
  std::vector<ObservedStep> steps;
  double total_payoff = 0.0;

  bool operator==(const ObservedEpisode&) const = default;
};

struct Episode {
  std::vector<Step> steps;
  double total_payoff = 0.0;

  bool operator==(const Episode&) const = default;

  ObservedEpisode observe() const {
    ObservedEpisode out;
    out.total_payoff = total_payoff;
    out.steps.reserve(steps.size());
    for (const auto& s : steps) out.steps.push_back({s.state, s.decision, s.next_state});
    return out;
  }
};

/// Maps the current state to a decision.
using Policy = std::function<int(int)>;

inline Policy policy_of(Strategy strategy) {
  return [s = std::move(strategy)](int state) { return s[state]; };
}

struct TeacherSchedule {
  std::vector<std::pair<Strategy, int>> entries;  // (strategy, episode_count)

  std::size_t total_episodes() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += static_cast<std::size_t>(e.second);
    return n;
  }
};

/// Round-robin over all K^m pure strategies, one episode each, until
/// `episodes` episodes are assigned.
inline TeacherSchedule cycling_schedule(int num_states, int num_decisions, std::size_t episodes) {
  const auto all = enumerate_strategies(num_states, num_decisions);
  TeacherSchedule out;
  for (std::size_t e = 0; e < episodes; ++e) out.entries.emplace_back(all[e % all.size()], 1);
  return out;
}

inline std::uint64_t episode_seed(std::uint64_t base_seed, std::size_t episode_index) {
  return base_seed + static_cast<std::uint64_t>(episode_index);
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from a probability vector.
template <typename Row>
int sample_categorical(const Row& probabilities, Rng& rng) {
  const double u = uniform01(rng);
  const auto n = static_cast<int>(probabilities.size());
  double cumulative = 0.0;
  int last_positive = 0;
  for (int j = 0; j < n; ++j) {
    if (probabilities[j] <= 0.0) continue;
    cumulative += probabilities[j];
    last_positive = j;
    if (u < cumulative) return j;
  }
  return last_positive;
}

inline void check_state(const MarkovPayoffModel& model, int state) {
  if (state < 0 || state >= model.num_states) {
    throw std::out_of_range("state " + std::to_string(state) + " out of range");
  }
}

inline void check_decision(const MarkovPayoffModel& model, int decision) {
  if (decision < 0 || decision >= model.num_decisions) {
    throw std::out_of_range("decision " + std::to_string(decision) + " out of range");
  }
}

inline int sample_next(const MarkovPayoffModel& model, int state, int decision, Rng& rng) {
  check_state(model, state);
  check_decision(model, decision);
  return sample_categorical(model.transitions[static_cast<std::size_t>(decision)].row(state), rng);
}

inline int sample_start(const MarkovPayoffModel& model, Rng& rng) {
  return sample_categorical(model.initial_distribution, rng);
}

/// Draws a start state from the initial distribution unless one is pinned,
/// then takes `num_steps` decisions.
inline Episode simulate_episode(const MarkovPayoffModel& model, const Policy& policy, int num_steps,
                                std::optional<int> start_state, Rng& rng) {
  if (num_steps < 1) throw std::invalid_argument("num_steps must be at least 1");
  require_valid(model);
  int state = start_state ? *start_state : sample_start(model, rng);
  check_state(model, state);

  Episode ep;
  ep.steps.reserve(static_cast<std::size_t>(num_steps));
  for (int n = 0; n < num_steps; ++n) {
    const int decision = policy(state);
    check_decision(model, decision);
    const int next = sample_next(model, state, decision, rng);
    const double payoff = model.payoffs[static_cast<std::size_t>(decision)](state, next);
    ep.steps.push_back({state, decision, next, payoff});
    ep.total_payoff += payoff;
    state = next;
  }
  return ep;
}

inline std::vector<Episode> simulate_batch(const MarkovPayoffModel& model, const TeacherSchedule& schedule,
                                           int steps_per_episode, std::uint64_t seed) {
  require_valid(model);
  std::vector<Episode> out;
  out.reserve(schedule.total_episodes());
  for (const auto& [strategy, count] : schedule.entries) {
    if (count < 1) throw std::invalid_argument("schedule episode_count must be at least 1");
    require_valid(strategy, model.num_states, model.num_decisions);
    const Policy policy = policy_of(strategy);
    for (int c = 0; c < count; ++c) {
      Rng rng(episode_seed(seed, out.size()));
      out.push_back(simulate_episode(model, policy, steps_per_episode, std::nullopt, rng));
    }
  }
  return out;
}

/// Checks index ranges, chain consistency and (when step payoffs are
/// present) payoff additivity.
inline std::vector<Violation> validate_episode(const Episode& ep, int num_states, int num_decisions) {
  std::vector<Violation> out;
  double sum = 0.0;
  bool all_payoffs = !ep.steps.empty();
  for (std::size_t n = 0; n < ep.steps.size(); ++n) {
    const auto& s = ep.steps[n];
    const std::string at = "steps[" + std::to_string(n) + "]";
    if (s.state < 0 || s.state >= num_states) out.push_back({at + ".state", "out of range"});
    if (s.next_state < 0 || s.next_state >= num_states) out.push_back({at + ".next_state", "out of range"});
    if (s.decision < 0 || s.decision >= num_decisions) out.push_back({at + ".decision", "out of range"});
    if (n + 1 < ep.steps.size() && s.next_state != ep.steps[n + 1].state) {
      out.push_back({at + ".next_state", "does not match the following step's state"});
    }
    if (s.step_payoff) {
      sum += *s.step_payoff;
    } else {
      all_payoffs = false;
    }
  }
  if (!std::isfinite(ep.total_payoff)) out.push_back({"total_payoff", "non-finite"});
  if (all_payoffs && std::abs(ep.total_payoff - sum) > 1e-9) {
    out.push_back({"total_payoff", "differs from the sum of step payoffs"});
  }
  return out;
}

inline std::vector<Violation> validate_episode(const ObservedEpisode& ep, int num_states, int num_decisions) {
  Episode full;
  full.total_payoff = ep.total_payoff;
  for (const auto& s : ep.steps) full.steps.push_back({s.state, s.decision, s.next_state, std::nullopt});
  return validate_episode(full, num_states, num_decisions);
}

}  // namespace adaptmc
