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

// Closed loop: each observed presentation updates the estimator, the direct
// problem is re-solved on the estimated model, and one trace row records the
// resulting estimates and recommendation.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adaptmc/inverse_estimation.hpp"
#include "adaptmc/mdp_core.hpp"
#include "adaptmc/simulate.hpp"

namespace adaptmc {

struct ControllerConfig {
  int num_states = 2;
  int num_decisions = 2;
  double delta = kDefaultRlsDelta;
  double forgetting = 1.0;
  /// Ground truth, when known (simulation studies). Only used to fill the
  /// V_true_of_recommended trace column.
  std::optional<MarkovPayoffModel> truth;
};

struct ControllerSnapshot {
  std::uint64_t q = 0;
  std::vector<Matrix> p_hat;
  std::vector<std::uint64_t> sample_sizes;  // [k * m + i]
  Vector r_hat;
  Strategy recommended;
  std::uint64_t recommended_id = 0;
  double recommended_gain = 0.0;
  /// Stage 1 label of the most recently ingested episode.
  IdentifiedStrategy identified;
  /// No strategy was ergodic under the estimates; recommendation carried over.
  bool recommendation_stale = false;
};

struct TraceRow {
  std::uint64_t q = 0;
  std::vector<double> p_hat;  // independent entries, see trace_columns()
  std::vector<double> r_hat;
  std::uint64_t recommended_id = 0;
  double v_hat = 0.0;
  std::optional<double> v_true;
  std::uint64_t identified_id = 0;
  std::vector<std::uint64_t> sample_sizes;

  bool operator==(const TraceRow&) const = default;
};

struct ConvergenceTrace {
  int num_states = 0;
  int num_decisions = 0;
  bool has_truth = false;
  std::vector<TraceRow> rows;

  bool operator==(const ConvergenceTrace&) const = default;
};

/// CSV header. Probability columns are p_hat_k<k>_i<i>_j<j> (1-based) for
/// j < m, omitting the last column of each row since it is implied by the
/// others.
inline std::vector<std::string> trace_columns(int m, int K, bool has_truth) {
  std::vector<std::string> cols{"q"};
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j + 1 < m; ++j) {
        cols.push_back("p_hat_k" + std::to_string(k + 1) + "_i" + std::to_string(i + 1) + "_j" + std::to_string(j + 1));
      }
    }
  }
  for (int d = 0; d < m * K; ++d) cols.push_back("r_hat_" + std::to_string(d));
  cols.insert(cols.end(), {"recommended_id", "V_hat"});
  if (has_truth) cols.push_back("V_true_of_recommended");
  cols.push_back("identified_id");
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < m; ++i) cols.push_back("n_k" + std::to_string(k + 1) + "_i" + std::to_string(i + 1));
  }
  return cols;
}

class AdaptiveController {
 public:
  explicit AdaptiveController(ControllerConfig config)
      : config_(std::move(config)), estimator_(config_.num_states, config_.num_decisions, config_.delta) {
    if (config_.truth) {
      require_valid(*config_.truth);
      if (config_.truth->num_states != config_.num_states || config_.truth->num_decisions != config_.num_decisions) {
        throw std::invalid_argument("ground-truth model dimensions differ from the controller's");
      }
      truth_gain_ = gain_model(*config_.truth);
    }
    // Ensures the strategy space is enumerable before any data arrives.
    enumerate_strategies(config_.num_states, config_.num_decisions);

    const auto est = transition_estimates(estimator_.counts);
    snapshot_.p_hat = est.p_hat;
    snapshot_.sample_sizes = est.sample_sizes;
    snapshot_.r_hat = estimator_.rls.r_hat;
    snapshot_.recommended = strategy_from_index(0, config_.num_states, config_.num_decisions);
    snapshot_.identified = {snapshot_.recommended,
                            std::vector<bool>(static_cast<std::size_t>(config_.num_states), false)};
    trace_.num_states = config_.num_states;
    trace_.num_decisions = config_.num_decisions;
    trace_.has_truth = truth_gain_.has_value();
  }

  const ControllerConfig& config() const { return config_; }
  const EstimatorState& estimator() const { return estimator_; }
  const ControllerSnapshot& snapshot() const { return snapshot_; }
  const ConvergenceTrace& trace() const { return trace_; }

  /// Stage 1 label, Stage 2 counts, Stage 3 RLS, then re-plan.
  const ControllerSnapshot& process_episode(const ObservedEpisode& episode) {
    const int m = config_.num_states;
    const int K = config_.num_decisions;
    if (episode.steps.empty()) throw std::invalid_argument("cannot process an empty episode");
    if (auto v = validate_episode(episode, m, K); !v.empty()) {
      throw std::invalid_argument("invalid episode: " + v.front().path + " " + v.front().message);
    }

    ControllerSnapshot next = snapshot_;
    next.identified = identify_strategy(episode, m, K);

    EstimatorState est = estimator_;
    est.counts = ingest_transitions(std::move(est.counts), episode);
    est.rls = rls_update(est.rls, episode_regressor(episode, m, K), episode.total_payoff, config_.forgetting);

    const auto p = transition_estimates(est.counts);
    next.q = est.rls.q;
    next.p_hat = p.p_hat;
    next.sample_sizes = p.sample_sizes;
    next.r_hat = est.rls.r_hat;
    try {
      const auto sol = solve_direct(estimated_gain_model(p.p_hat, est.rls));
      next.recommended = sol.best.strategy;
      next.recommended_id = sol.best_index;
      next.recommended_gain = sol.best.mean_gain;
      next.recommendation_stale = false;
    } catch (const NoFeasibleStrategy&) {
      next.recommendation_stale = true;
    }

    estimator_ = std::move(est);
    snapshot_ = std::move(next);
    trace_.rows.push_back(MakeRow(snapshot_));
    return snapshot_;
  }

 private:
  TraceRow MakeRow(const ControllerSnapshot& s) const {
    const int m = config_.num_states;
    const int K = config_.num_decisions;
    TraceRow row;
    row.q = s.q;
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j + 1 < m; ++j) row.p_hat.push_back(s.p_hat[static_cast<std::size_t>(k)](i, j));
      }
    }
    row.r_hat.assign(s.r_hat.data(), s.r_hat.data() + s.r_hat.size());
    row.recommended_id = s.recommended_id;
    row.v_hat = s.recommended_gain;
    if (truth_gain_) {
      try {
        row.v_true = evaluate_strategy(*truth_gain_, s.recommended).mean_gain;
      } catch (const NonErgodic&) {
        row.v_true = std::numeric_limits<double>::quiet_NaN();
      }
    }
    row.identified_id = strategy_index(s.identified.strategy, K);
    row.sample_sizes = s.sample_sizes;
    return row;
  }

  ControllerConfig config_;
  std::optional<GainModel> truth_gain_;
  EstimatorState estimator_;
  ControllerSnapshot snapshot_;
  ConvergenceTrace trace_;
};

struct BatchFit {
  ControllerSnapshot snapshot;
  ConvergenceTrace trace;
  EstimatorState estimator;
};

/// Folds process_episode over `episodes`.
inline BatchFit batch_fit(const ControllerConfig& config, const std::vector<ObservedEpisode>& episodes) {
  if (episodes.empty()) throw std::invalid_argument("batch_fit needs at least one episode");
  AdaptiveController controller(config);
  for (const auto& ep : episodes) controller.process_episode(ep);
  return {controller.snapshot(), controller.trace(), controller.estimator()};
}

namespace detail {

inline std::string FormatDouble(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double ParseDouble(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double x = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
  return x;
}

inline std::uint64_t ParseCount(const std::string& s) {
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("malformed integer '" + s + "'");
  return x;
}

inline std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Header plus one row per episode; doubles at round-trip precision.
inline void export_trace(const ConvergenceTrace& trace, std::ostream& out) {
  const auto cols = trace_columns(trace.num_states, trace.num_decisions, trace.has_truth);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& row : trace.rows) {
    out << row.q;
    for (double p : row.p_hat) out << ',' << detail::FormatDouble(p);
    for (double r : row.r_hat) out << ',' << detail::FormatDouble(r);
    out << ',' << row.recommended_id << ',' << detail::FormatDouble(row.v_hat);
    if (trace.has_truth) out << ',' << detail::FormatDouble(row.v_true.value_or(std::numeric_limits<double>::quiet_NaN()));
    out << ',' << row.identified_id;
    for (auto n : row.sample_sizes) out << ',' << n;
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed to write trace");
}

inline std::string export_trace(const ConvergenceTrace& trace) {
  std::ostringstream out;
  export_trace(trace, out);
  return out.str();
}

/// Inverse of export_trace; dimensions are recovered from the header.
inline ConvergenceTrace parse_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trace CSV has no header");
  const auto header = detail::SplitCsv(line);

  ConvergenceTrace trace;
  int p_cols = 0;
  int r_cols = 0;
  int n_cols = 0;
  for (const auto& h : header) {
    if (h.rfind("p_hat_", 0) == 0) ++p_cols;
    if (h.rfind("r_hat_", 0) == 0) ++r_cols;
    if (h.rfind("n_k", 0) == 0) ++n_cols;
    if (h == "V_true_of_recommended") trace.has_truth = true;
  }
  // n columns = K*m, r columns = m*K, p columns = K*m*(m-1)
  if (n_cols == 0 || r_cols != n_cols || p_cols % n_cols != 0) throw std::invalid_argument("unrecognized trace header");
  trace.num_states = p_cols / n_cols + 1;
  trace.num_decisions = n_cols / trace.num_states;
  if (header != trace_columns(trace.num_states, trace.num_decisions, trace.has_truth)) {
    throw std::invalid_argument("unrecognized trace header");
  }

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::SplitCsv(line);
    if (cells.size() != header.size()) throw std::invalid_argument("trace row has wrong column count");
    std::size_t c = 0;
    TraceRow row;
    row.q = detail::ParseCount(cells[c++]);
    for (int n = 0; n < p_cols; ++n) row.p_hat.push_back(detail::ParseDouble(cells[c++]));
    for (int n = 0; n < r_cols; ++n) row.r_hat.push_back(detail::ParseDouble(cells[c++]));
    row.recommended_id = detail::ParseCount(cells[c++]);
    row.v_hat = detail::ParseDouble(cells[c++]);
    if (trace.has_truth) row.v_true = detail::ParseDouble(cells[c++]);
    row.identified_id = detail::ParseCount(cells[c++]);
    for (int n = 0; n < n_cols; ++n) row.sample_sizes.push_back(detail::ParseCount(cells[c++]));
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace adaptmc
