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

// Reverse problem: recover the chain's parameters from observed
// presentations.
//
//   Stage 1  identify_strategy     modal decision per state in one episode
//   Stage 2  ingest_transitions /  conditional transition frequencies
//            transition_estimates
//   Stage 3  episode_regressor /   recursive least squares on episode totals
//            rls_update
//
// Stage 3 uses the linear model  E[v] = sum_{i,k} n_ik * r_i^k,  where n_ik is
// how often decision k was taken in state i during the episode and v is the
// episode's total payoff. The coefficients r_i^k are exactly the expected
// one-step payoffs the direct solver needs. Flattened index: i * K + k.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptmc/mdp_core.hpp"
#include "adaptmc/simulate.hpp"

namespace adaptmc {

inline constexpr double kDefaultRlsDelta = 1e6;

struct IdentifiedStrategy {
  Strategy strategy;
  std::vector<bool> visited;  // false: the state's decision is a fallback 0

  bool complete() const {
    for (bool v : visited) {
      if (!v) return false;
    }
    return true;
  }
};

/// Modal decision per visited state; ties go to the lower decision index.
inline IdentifiedStrategy identify_strategy(const ObservedEpisode& episode, int num_states, int num_decisions) {
  if (episode.steps.empty()) throw std::invalid_argument("identify_strategy needs a nonempty episode");
  std::vector<std::vector<int>> freq(static_cast<std::size_t>(num_states),
                                     std::vector<int>(static_cast<std::size_t>(num_decisions), 0));
  for (const auto& s : episode.steps) {
    if (s.state < 0 || s.state >= num_states || s.decision < 0 || s.decision >= num_decisions) {
      throw std::out_of_range("episode step index out of range");
    }
    ++freq[static_cast<std::size_t>(s.state)][static_cast<std::size_t>(s.decision)];
  }
  IdentifiedStrategy out{Strategy{std::vector<int>(static_cast<std::size_t>(num_states), 0)},
                         std::vector<bool>(static_cast<std::size_t>(num_states), false)};
  for (int i = 0; i < num_states; ++i) {
    const auto& row = freq[static_cast<std::size_t>(i)];
    int best = 0;
    int total = 0;
    for (int k = 0; k < num_decisions; ++k) {
      total += row[static_cast<std::size_t>(k)];
      if (row[static_cast<std::size_t>(k)] > row[static_cast<std::size_t>(best)]) best = k;
    }
    out.strategy.decisions[static_cast<std::size_t>(i)] = best;
    out.visited[static_cast<std::size_t>(i)] = total > 0;
  }
  return out;
}

/// counts(k, i, j): observed i -> j transitions under decision k.
class TransitionCounts {
 public:
  TransitionCounts() = default;
  TransitionCounts(int num_states, int num_decisions)
      : m_(num_states), K_(num_decisions), data_(static_cast<std::size_t>(num_states * num_states * num_decisions), 0) {
    if (num_states <= 0 || num_decisions <= 0) throw std::invalid_argument("dimensions must be positive");
  }

  int num_states() const { return m_; }
  int num_decisions() const { return K_; }

  std::uint64_t operator()(int k, int i, int j) const { return data_[Offset(k, i, j)]; }
  std::uint64_t& operator()(int k, int i, int j) { return data_[Offset(k, i, j)]; }

  std::uint64_t row_total(int k, int i) const {
    std::uint64_t n = 0;
    for (int j = 0; j < m_; ++j) n += (*this)(k, i, j);
    return n;
  }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : data_) n += c;
    return n;
  }

  bool operator==(const TransitionCounts&) const = default;

 private:
  std::size_t Offset(int k, int i, int j) const {
    if (k < 0 || k >= K_ || i < 0 || i >= m_ || j < 0 || j >= m_) {
      throw std::out_of_range("transition count index out of range");
    }
    return static_cast<std::size_t>((k * m_ + i) * m_ + j);
  }

  int m_ = 0;
  int K_ = 0;
  std::vector<std::uint64_t> data_;
};

inline TransitionCounts ingest_transitions(TransitionCounts counts, const ObservedEpisode& episode) {
  for (const auto& s : episode.steps) ++counts(s.decision, s.state, s.next_state);
  return counts;
}

struct TransitionEstimates {
  std::vector<Matrix> p_hat;                 // [k](i, j)
  std::vector<std::uint64_t> sample_sizes;   // [k * m + i]

  std::uint64_t sample_size(int k, int i) const {
    return sample_sizes[static_cast<std::size_t>(k * p_hat.front().rows() + i)];
  }

  /// Rows with no data, reported as (k, i) pairs. Those rows are uniform.
  std::vector<std::pair<int, int>> unexplored() const {
    std::vector<std::pair<int, int>> out;
    const auto m = static_cast<int>(p_hat.front().rows());
    for (int k = 0; k < static_cast<int>(p_hat.size()); ++k) {
      for (int i = 0; i < m; ++i) {
        if (sample_size(k, i) == 0) out.emplace_back(k, i);
      }
    }
    return out;
  }
};

/// Row-normalized counts; unexplored rows fall back to uniform 1/m.
inline TransitionEstimates transition_estimates(const TransitionCounts& counts) {
  const int m = counts.num_states();
  const int K = counts.num_decisions();
  TransitionEstimates out;
  out.p_hat.assign(static_cast<std::size_t>(K), Matrix::Zero(m, m));
  out.sample_sizes.assign(static_cast<std::size_t>(K * m), 0);
  for (int k = 0; k < K; ++k) {
    auto& P = out.p_hat[static_cast<std::size_t>(k)];
    for (int i = 0; i < m; ++i) {
      const std::uint64_t n = counts.row_total(k, i);
      out.sample_sizes[static_cast<std::size_t>(k * m + i)] = n;
      for (int j = 0; j < m; ++j) {
        P(i, j) = n == 0 ? 1.0 / m : static_cast<double>(counts(k, i, j)) / static_cast<double>(n);
      }
    }
  }
  return out;
}

/// Per-episode visit counts of each (state, decision) pair.
struct Regressor {
  std::vector<int> phi;

  Vector as_vector() const {
    Vector v(static_cast<Eigen::Index>(phi.size()));
    for (std::size_t n = 0; n < phi.size(); ++n) v[static_cast<Eigen::Index>(n)] = phi[n];
    return v;
  }
};

inline Regressor episode_regressor(const ObservedEpisode& episode, int num_states, int num_decisions) {
  if (episode.steps.empty()) throw std::invalid_argument("episode_regressor needs a nonempty episode");
  Regressor out{std::vector<int>(static_cast<std::size_t>(num_states * num_decisions), 0)};
  for (const auto& s : episode.steps) {
    if (s.state < 0 || s.state >= num_states || s.decision < 0 || s.decision >= num_decisions) {
      throw std::out_of_range("episode step index out of range");
    }
    ++out.phi[static_cast<std::size_t>(s.state * num_decisions + s.decision)];
  }
  return out;
}

struct RlsState {
  Vector r_hat;
  Matrix Q;
  std::uint64_t q = 0;

  Eigen::Index dim() const { return r_hat.size(); }
};

/// Diffuse start: r_hat = 0, Q = delta * I.
inline RlsState rls_init(int d, double delta = kDefaultRlsDelta) {
  if (d <= 0) throw std::invalid_argument("RLS dimension must be positive");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("RLS delta must be positive and finite");
  return RlsState{Vector::Zero(d), delta * Matrix::Identity(d, d), 0};
}

/// One recursive least-squares step on observation (phi, v):
///
///   r' = r + Q phi [phi' Q phi + lambda]^-1 (v - phi' r)
///   Q' = (Q - Q phi [phi' Q phi + lambda]^-1 phi' Q) / lambda
///
/// lambda = 1 is the plain recursion with unit observation weight; lambda < 1
/// discounts older episodes so the estimate can follow drifting payoffs.
inline RlsState rls_update(const RlsState& state, const Vector& phi, double v, double forgetting = 1.0) {
  if (phi.size() != state.dim()) {
    throw std::invalid_argument("regressor length " + std::to_string(phi.size()) + " does not match RLS dimension " +
                                std::to_string(state.dim()));
  }
  if (!std::isfinite(v)) throw std::invalid_argument("observed payoff must be finite");
  if (!(forgetting > 0.0 && forgetting <= 1.0)) throw std::invalid_argument("forgetting factor must be in (0, 1]");

  const Vector gain_dir = state.Q * phi;
  const double denom = phi.dot(gain_dir) + forgetting;
  const double innovation = v - phi.dot(state.r_hat);

  RlsState next;
  next.r_hat = state.r_hat + gain_dir * (innovation / denom);
  next.Q = (state.Q - gain_dir * gain_dir.transpose() / denom) / forgetting;
  next.Q = 0.5 * (next.Q + next.Q.transpose());
  next.q = state.q + 1;
  return next;
}

inline RlsState rls_update(const RlsState& state, const Regressor& phi, double v, double forgetting = 1.0) {
  return rls_update(state, phi.as_vector(), v, forgetting);
}

/// Transitions from Stage 2 and step payoffs from Stage 3, shaped for
/// solve_direct.
inline GainModel estimated_gain_model(const std::vector<Matrix>& p_hat, const RlsState& rls) {
  if (p_hat.empty()) throw std::invalid_argument("no transition estimates");
  const auto m = p_hat.front().rows();
  const auto K = static_cast<Eigen::Index>(p_hat.size());
  if (rls.dim() != m * K) {
    throw std::invalid_argument("RLS dimension " + std::to_string(rls.dim()) + " does not match m*K = " +
                                std::to_string(m * K));
  }
  for (const auto& P : p_hat) {
    if (P.rows() != m || P.cols() != m) throw std::invalid_argument("transition estimate shape mismatch");
  }
  GainModel gm;
  gm.transitions = p_hat;
  gm.step_payoffs.resize(m, K);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < K; ++k) gm.step_payoffs(i, k) = rls.r_hat[i * K + k];
  }
  return gm;
}

/// Everything the reverse solver has accumulated.
struct EstimatorState {
  TransitionCounts counts;
  RlsState rls;

  EstimatorState() = default;
  EstimatorState(int num_states, int num_decisions, double delta = kDefaultRlsDelta)
      : counts(num_states, num_decisions), rls(rls_init(num_states * num_decisions, delta)) {}
};

}  // namespace adaptmc
