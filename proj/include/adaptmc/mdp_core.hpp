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

// Controlled Markov chains with payoffs and the direct problem: choose the
// pure stationary strategy with the largest steady-state one-step mean
// payoff, by exhaustive search over all K^m strategies.
//
// Indices are 0-based throughout. Decision k and state i here correspond to
// k+1 and i+1 in the usual 1-based textbook notation, so the strategy
// written [1 2]^T there is {0, 1} here.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptmc/errors.hpp"

namespace adaptmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kProbabilityTolerance = 1e-9;
inline constexpr std::uint64_t kDefaultStrategyCap = 1'000'000;

/// The full controlled chain: per-decision transition matrices P^k and
/// one-step payoff matrices R^k, both indexed [k](i, j).
struct MarkovPayoffModel {
  int num_states = 0;
  int num_decisions = 0;
  Vector initial_distribution;
  std::vector<Matrix> transitions;
  std::vector<Matrix> payoffs;
};

/// Pure stationary strategy: decisions[i] is the decision taken in state i.
struct Strategy {
  std::vector<int> decisions;

  int size() const { return static_cast<int>(decisions.size()); }
  int operator[](int state) const { return decisions[static_cast<std::size_t>(state)]; }
  bool operator==(const Strategy&) const = default;
};

/// What the direct solver needs: transitions plus expected one-step payoffs
/// step_payoffs(i, k) = r_i^k. Built either from a known model or from
/// estimates.
struct GainModel {
  std::vector<Matrix> transitions;
  Matrix step_payoffs;  // m x K

  int num_states() const { return static_cast<int>(step_payoffs.rows()); }
  int num_decisions() const { return static_cast<int>(step_payoffs.cols()); }
};

struct GainEvaluation {
  Strategy strategy;
  Matrix working_transition;  // P^s
  Vector stationary;          // steady-state probabilities
  Vector state_payoffs;       // r_i^s
  double mean_gain = 0.0;     // V^s
};

namespace detail {

inline bool IsStochasticRow(const Eigen::Ref<const Vector>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (!std::isfinite(row[j]) || row[j] < 0.0 || row[j] > 1.0) return false;
  }
  return std::abs(row.sum() - 1.0) <= kProbabilityTolerance;
}

inline std::string Index2(int a, int b) {
  return "[" + std::to_string(a) + "][" + std::to_string(b) + "]";
}

}  // namespace detail

/// Lists every violated invariant; an empty result means the model is valid.
inline std::vector<Violation> validate_model(const MarkovPayoffModel& model) {
  std::vector<Violation> out;
  const int m = model.num_states;
  const int K = model.num_decisions;
  if (m <= 0) out.push_back({"num_states", "must be positive"});
  if (K <= 0) out.push_back({"num_decisions", "must be positive"});
  if (m <= 0 || K <= 0) return out;

  if (model.initial_distribution.size() != m) {
    out.push_back({"initial_distribution", "length must equal num_states"});
  } else {
    for (int i = 0; i < m; ++i) {
      const double p = model.initial_distribution[i];
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        out.push_back({"initial_distribution[" + std::to_string(i) + "]",
                       "probability outside [0, 1]"});
      }
    }
    if (std::abs(model.initial_distribution.sum() - 1.0) > kProbabilityTolerance) {
      out.push_back({"initial_distribution", "does not sum to 1"});
    }
  }

  auto check_stack = [&](const std::vector<Matrix>& stack, const char* name, bool stochastic) {
    if (static_cast<int>(stack.size()) != K) {
      out.push_back({name, "expected one matrix per decision"});
      return;
    }
    for (int k = 0; k < K; ++k) {
      const Matrix& mat = stack[static_cast<std::size_t>(k)];
      const std::string base = std::string(name) + "[" + std::to_string(k) + "]";
      if (mat.rows() != m || mat.cols() != m) {
        out.push_back({base, "shape must be num_states x num_states"});
        continue;
      }
      for (int i = 0; i < m; ++i) {
        if (stochastic) {
          for (int j = 0; j < m; ++j) {
            const double p = mat(i, j);
            if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
              out.push_back({std::string(name) + detail::Index2(k, i) + "[" + std::to_string(j) + "]",
                             "probability outside [0, 1]"});
            }
          }
          if (std::abs(mat.row(i).sum() - 1.0) > kProbabilityTolerance) {
            out.push_back({std::string(name) + detail::Index2(k, i), "row does not sum to 1"});
          }
        } else if (!mat.row(i).allFinite()) {
          out.push_back({std::string(name) + detail::Index2(k, i), "non-finite payoff"});
        }
      }
    }
  };
  check_stack(model.transitions, "transitions", true);
  check_stack(model.payoffs, "payoffs", false);
  return out;
}

inline void require_valid(const MarkovPayoffModel& model) {
  auto violations = validate_model(model);
  if (!violations.empty()) throw InvalidModel(std::move(violations));
}

inline void require_valid(const GainModel& gm) {
  std::vector<Violation> out;
  const int m = gm.num_states();
  const int K = gm.num_decisions();
  if (m <= 0 || K <= 0) out.push_back({"step_payoffs", "empty"});
  if (static_cast<int>(gm.transitions.size()) != K) {
    out.push_back({"transitions", "expected one matrix per decision"});
  }
  for (std::size_t k = 0; k < gm.transitions.size() && out.empty(); ++k) {
    const Matrix& mat = gm.transitions[k];
    if (mat.rows() != m || mat.cols() != m) {
      out.push_back({"transitions[" + std::to_string(k) + "]", "shape mismatch"});
      continue;
    }
    for (int i = 0; i < m; ++i) {
      if (!detail::IsStochasticRow(mat.row(i).transpose())) {
        out.push_back({"transitions" + detail::Index2(static_cast<int>(k), i), "row is not a probability vector"});
      }
    }
  }
  if (!gm.step_payoffs.allFinite()) out.push_back({"step_payoffs", "non-finite entry"});
  if (!out.empty()) throw InvalidModel(std::move(out));
}

inline void require_valid(const Strategy& strategy, int num_states, int num_decisions) {
  if (strategy.size() != num_states) {
    throw std::invalid_argument("strategy length " + std::to_string(strategy.size()) +
                                " does not match " + std::to_string(num_states) + " states");
  }
  for (int d : strategy.decisions) {
    if (d < 0 || d >= num_decisions) {
      throw std::invalid_argument("strategy decision " + std::to_string(d) + " out of range");
    }
  }
}

/// r_i^k = sum_j p_ij^k r_ij^k, returned as an m x K matrix.
inline Matrix expected_step_payoffs(const MarkovPayoffModel& model) {
  require_valid(model);
  Matrix r(model.num_states, model.num_decisions);
  for (int k = 0; k < model.num_decisions; ++k) {
    const auto& P = model.transitions[static_cast<std::size_t>(k)];
    const auto& R = model.payoffs[static_cast<std::size_t>(k)];
    r.col(k) = P.cwiseProduct(R).rowwise().sum();
  }
  return r;
}

inline GainModel gain_model(const MarkovPayoffModel& model) {
  return GainModel{model.transitions, expected_step_payoffs(model)};
}

namespace detail {

inline Matrix AssembleRows(const std::vector<Matrix>& stack, const Strategy& strategy) {
  const Eigen::Index m = stack.front().rows();
  Matrix out(m, stack.front().cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    out.row(i) = stack[static_cast<std::size_t>(strategy[static_cast<int>(i)])].row(i);
  }
  return out;
}

}  // namespace detail

/// Row i of P^s (R^s) is row i of P^{k_i} (R^{k_i}).
inline std::pair<Matrix, Matrix> working_matrices(const MarkovPayoffModel& model,
                                                  const Strategy& strategy) {
  require_valid(model);
  require_valid(strategy, model.num_states, model.num_decisions);
  return {detail::AssembleRows(model.transitions, strategy),
          detail::AssembleRows(model.payoffs, strategy)};
}

/// Solves P^T p = p with sum(p) = 1 by replacing the last balance equation
/// with the normalization row. Throws NonErgodic when that system is
/// singular, i.e. the chain has more than one closed class.
inline Vector stationary_distribution(const Matrix& P) {
  const Eigen::Index m = P.rows();
  if (m == 0 || P.cols() != m) throw std::invalid_argument("transition matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!detail::IsStochasticRow(P.row(i).transpose())) {
      throw std::invalid_argument("transition matrix row " + std::to_string(i) + " is not stochastic");
    }
  }

  Matrix A = P.transpose() - Matrix::Identity(m, m);
  A.row(m - 1).setOnes();
  Vector b = Vector::Zero(m);
  b[m - 1] = 1.0;

  Eigen::FullPivLU<Matrix> lu(A);
  lu.setThreshold(1e-10);
  if (lu.rank() < m) {
    throw NonErgodic("stationary system has rank " + std::to_string(lu.rank()) + " < " +
                     std::to_string(m) + "; chain has no unique steady state");
  }
  Vector p = lu.solve(b);
  // Roundoff can leave entries like -1e-17 on states that are transient.
  p = p.cwiseMax(0.0);
  p /= p.sum();
  return p;
}

inline GainEvaluation evaluate_strategy(const GainModel& gm, const Strategy& strategy) {
  require_valid(gm);
  require_valid(strategy, gm.num_states(), gm.num_decisions());
  GainEvaluation ev;
  ev.strategy = strategy;
  ev.working_transition = detail::AssembleRows(gm.transitions, strategy);
  ev.stationary = stationary_distribution(ev.working_transition);
  ev.state_payoffs.resize(gm.num_states());
  for (int i = 0; i < gm.num_states(); ++i) ev.state_payoffs[i] = gm.step_payoffs(i, strategy[i]);
  ev.mean_gain = ev.stationary.dot(ev.state_payoffs);
  return ev;
}

/// K^m, or nullopt when it exceeds `cap`.
inline std::optional<std::uint64_t> strategy_count(int num_states, int num_decisions,
                                                   std::uint64_t cap = kDefaultStrategyCap) {
  std::uint64_t n = 1;
  for (int i = 0; i < num_states; ++i) {
    if (n > cap / static_cast<std::uint64_t>(num_decisions)) return std::nullopt;
    n *= static_cast<std::uint64_t>(num_decisions);
  }
  if (n > cap) return std::nullopt;
  return n;
}

/// All K^m strategies in lexicographic order (state 0 is the most
/// significant digit).
inline std::vector<Strategy> enumerate_strategies(int num_states, int num_decisions,
                                                  std::uint64_t cap = kDefaultStrategyCap) {
  if (num_states <= 0 || num_decisions <= 0) {
    throw std::invalid_argument("state and decision counts must be positive");
  }
  const auto count = strategy_count(num_states, num_decisions, cap);
  if (!count) {
    throw StrategySpaceTooLarge(std::to_string(num_decisions) + "^" + std::to_string(num_states) +
                                " strategies exceed the cap of " + std::to_string(cap));
  }
  std::vector<Strategy> out;
  out.reserve(*count);
  Strategy current{std::vector<int>(static_cast<std::size_t>(num_states), 0)};
  for (std::uint64_t n = 0; n < *count; ++n) {
    out.push_back(current);
    for (int i = num_states - 1; i >= 0; --i) {
      auto& d = current.decisions[static_cast<std::size_t>(i)];
      if (++d < num_decisions) break;
      d = 0;
    }
  }
  return out;
}

/// Position of `strategy` in enumerate_strategies order.
inline std::uint64_t strategy_index(const Strategy& strategy, int num_decisions) {
  std::uint64_t id = 0;
  for (int d : strategy.decisions) id = id * static_cast<std::uint64_t>(num_decisions) + static_cast<std::uint64_t>(d);
  return id;
}

inline Strategy strategy_from_index(std::uint64_t id, int num_states, int num_decisions) {
  Strategy s{std::vector<int>(static_cast<std::size_t>(num_states), 0)};
  for (int i = num_states - 1; i >= 0; --i) {
    s.decisions[static_cast<std::size_t>(i)] = static_cast<int>(id % static_cast<std::uint64_t>(num_decisions));
    id /= static_cast<std::uint64_t>(num_decisions);
  }
  return s;
}

struct StrategyRow {
  Strategy strategy;
  std::optional<GainEvaluation> evaluation;  // empty when the chain is non-ergodic

  bool non_ergodic() const { return !evaluation.has_value(); }
};

struct DirectSolution {
  GainEvaluation best;
  std::size_t best_index = 0;
  std::vector<StrategyRow> table;
};

/// Exhaustive argmax of V^s. Non-ergodic strategies stay in the table but
/// cannot win. Gains within a relative 1e-12 of the incumbent count as ties
/// and keep the lexicographically earlier strategy.
inline DirectSolution solve_direct(const GainModel& gm, std::uint64_t cap = kDefaultStrategyCap) {
  require_valid(gm);
  DirectSolution sol;
  std::optional<std::size_t> best;
  for (auto& s : enumerate_strategies(gm.num_states(), gm.num_decisions(), cap)) {
    StrategyRow row{std::move(s), std::nullopt};
    try {
      row.evaluation = evaluate_strategy(gm, row.strategy);
    } catch (const NonErgodic&) {
    }
    if (row.evaluation) {
      const double v = row.evaluation->mean_gain;
      if (!best) {
        best = sol.table.size();
      } else {
        const double incumbent = sol.table[*best].evaluation->mean_gain;
        if (v - incumbent > 1e-12 * std::max(1.0, std::abs(incumbent))) best = sol.table.size();
      }
    }
    sol.table.push_back(std::move(row));
  }
  if (!best) throw NoFeasibleStrategy("every strategy yields a non-ergodic chain");
  sol.best_index = *best;
  sol.best = *sol.table[*best].evaluation;
  return sol;
}

}  // namespace adaptmc
