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

// Offline workflows behind the command-line tool. Each run_* function does
// the work and returns data; each cmd_* function adds file and console
// output. Option structs carry already-parsed flags.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptmc/adaptive_controller.hpp"
#include "adaptmc/gridworld.hpp"
#include "adaptmc/io.hpp"
#include "adaptmc/mdp_core.hpp"
#include "adaptmc/simulate.hpp"
#include "json.hpp"

namespace adaptmc::cli {

using Json = nlohmann::json;

/// Bad flags or arguments; the tool exits with status 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string Fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string Decisions(const Strategy& s) {
  std::string out = "[";
  for (int i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

inline void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path);
}

inline std::vector<std::string> Split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, sep);) out.push_back(part);
  return out;
}

inline std::uint64_t ParsePositive(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || v < 1) throw UsageError(what + " must be a positive integer, got \"" + text + "\"");
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

/// Strategy by 1-based number in lexicographic order ("2" or "f2") or by
/// its decision list ("0,1").
inline Strategy parse_strategy(const std::string& text, int num_states, int num_decisions) {
  if (text.find(',') != std::string::npos) {
    Strategy s;
    for (const auto& part : detail::Split(text, ',')) {
      std::size_t used = 0;
      int d = -1;
      try {
        d = std::stoi(part, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != part.size()) throw UsageError("bad decision \"" + part + "\" in \"" + text + "\"");
      s.decisions.push_back(d);
    }
    if (static_cast<int>(s.size()) != num_states) {
      throw UsageError("strategy \"" + text + "\" needs " + std::to_string(num_states) + " decisions");
    }
    for (int d : s.decisions) {
      if (d < 0 || d >= num_decisions) throw UsageError("decision " + std::to_string(d) + " out of range");
    }
    return s;
  }
  const std::string digits = !text.empty() && text[0] == 'f' ? text.substr(1) : text;
  const auto number = detail::ParsePositive(digits, "strategy number");
  const auto count = strategy_count(num_states, num_decisions);
  if (!count || number > *count) throw UsageError("strategy number " + text + " out of range");
  return strategy_from_index(number - 1, num_states, num_decisions);
}

/// "id:count,id:count,..." blocks, repeated until `episodes` episodes are
/// assigned (the last repetition may be cut short). Empty text cycles
/// through every strategy one episode at a time.
inline TeacherSchedule parse_schedule(const std::string& text, int num_states, int num_decisions,
                                      std::size_t episodes) {
  if (episodes == 0) throw UsageError("episodes must be at least 1");
  if (text.empty()) return cycling_schedule(num_states, num_decisions, episodes);
  std::vector<std::pair<Strategy, std::uint64_t>> blocks;
  for (const auto& item : detail::Split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("schedule item \"" + item + "\" is not id:count");
    blocks.emplace_back(parse_strategy(item.substr(0, colon), num_states, num_decisions),
                        detail::ParsePositive(item.substr(colon + 1), "schedule count"));
  }
  if (blocks.empty()) throw UsageError("empty schedule");
  TeacherSchedule out;
  std::size_t assigned = 0;
  for (std::size_t b = 0; assigned < episodes; b = (b + 1) % blocks.size()) {
    const auto n = std::min<std::uint64_t>(blocks[b].second, episodes - assigned);
    out.entries.emplace_back(blocks[b].first, static_cast<int>(n));
    assigned += n;
  }
  return out;
}

// ---------------------------------------------------------------- solve

struct SolveOptions {
  std::string model;
  bool json = false;
};

inline Json to_json(const DirectSolution& sol, int num_decisions) {
  Json rows = Json::array();
  for (std::size_t s = 0; s < sol.table.size(); ++s) {
    const auto& row = sol.table[s];
    Json r{{"id", s}, {"decisions", row.strategy.decisions}};
    if (row.non_ergodic()) {
      r["non_ergodic"] = true;
    } else {
      r["V"] = row.evaluation->mean_gain;
      r["stationary"] = std::vector<double>(row.evaluation->stationary.data(),
                                            row.evaluation->stationary.data() + row.evaluation->stationary.size());
      r["state_payoffs"] = std::vector<double>(row.evaluation->state_payoffs.data(),
                                               row.evaluation->state_payoffs.data() +
                                                   row.evaluation->state_payoffs.size());
    }
    rows.push_back(std::move(r));
  }
  return Json{{"best_id", sol.best_index},
              {"best", sol.best.strategy.decisions},
              {"V", sol.best.mean_gain},
              {"num_decisions", num_decisions},
              {"strategies", rows}};
}

inline void print_solution(const DirectSolution& sol, std::ostream& out) {
  out << "strategy  decisions        V\n";
  for (std::size_t s = 0; s < sol.table.size(); ++s) {
    const auto& row = sol.table[s];
    char line[160];
    std::snprintf(line, sizeof line, "%-9s %-12s %12s%s\n", ("f" + std::to_string(s + 1)).c_str(),
                  detail::Decisions(row.strategy).c_str(),
                  row.non_ergodic() ? "non-ergodic" : detail::Fmt(row.evaluation->mean_gain).c_str(),
                  s == sol.best_index ? "  *" : "");
    out << line;
  }
}

inline DirectSolution run_solve(const MarkovPayoffModel& model) { return solve_direct(gain_model(model)); }

inline int cmd_solve(const SolveOptions& opt, std::ostream& out) {
  const auto model = io::load_model(opt.model);
  const auto sol = run_solve(model);
  if (opt.json) {
    out << to_json(sol, model.num_decisions).dump(2) << '\n';
  } else {
    print_solution(sol, out);
  }
  return 0;
}

// ----------------------------------------------------------- experiment

struct ExperimentOptions {
  std::string model;
  std::size_t episodes = 100;
  int steps = 30;
  std::uint64_t seed = 7;
  double delta = kDefaultRlsDelta;
  double forgetting = 1.0;
  std::string schedule;
  std::string out;  // trace CSV; skipped when empty
  bool json = false;
};

struct ExperimentSummary {
  std::uint64_t episodes = 0;
  Strategy final_recommended;
  std::uint64_t final_recommended_id = 0;
  double final_v_hat = 0.0;
  Strategy optimal;
  std::uint64_t optimal_id = 0;
  double optimal_v = 0.0;
  std::optional<std::uint64_t> optimal_from_q;  // recommendation optimal at this q and every later one
  double max_p_error = 0.0;                     // over all K*m*m entries of the final row
  double max_r_error = 0.0;
};

/// Everything here is derived from the trace plus the true model, so the
/// same numbers come back from a parsed CSV.
inline ExperimentSummary summarize_trace(const ConvergenceTrace& trace, const MarkovPayoffModel& model) {
  if (trace.rows.empty()) throw std::invalid_argument("empty trace");
  const int m = trace.num_states;
  const int K = trace.num_decisions;
  if (m != model.num_states || K != model.num_decisions) throw std::invalid_argument("trace does not match model");

  const auto truth = solve_direct(gain_model(model));
  const auto r = expected_step_payoffs(model);
  const auto& last = trace.rows.back();

  ExperimentSummary s;
  s.episodes = last.q;
  s.final_recommended_id = last.recommended_id;
  s.final_recommended = strategy_from_index(last.recommended_id, m, K);
  s.final_v_hat = last.v_hat;
  s.optimal = truth.best.strategy;
  s.optimal_id = truth.best_index;
  s.optimal_v = truth.best.mean_gain;

  for (auto it = trace.rows.rbegin(); it != trace.rows.rend() && it->recommended_id == s.optimal_id; ++it) {
    s.optimal_from_q = it->q;
  }

  std::size_t c = 0;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < m; ++i) {
      double rest = 1.0;
      for (int j = 0; j < m; ++j) {
        const double p = j + 1 < m ? last.p_hat[c++] : rest;
        rest -= p;
        s.max_p_error = std::max(s.max_p_error, std::abs(p - model.transitions[static_cast<std::size_t>(k)](i, j)));
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < K; ++k) {
      s.max_r_error = std::max(s.max_r_error, std::abs(last.r_hat[static_cast<std::size_t>(i * K + k)] - r(i, k)));
    }
  }
  return s;
}

inline Json to_json(const ExperimentSummary& s) {
  return Json{{"episodes", s.episodes},
              {"final_recommended", s.final_recommended.decisions},
              {"final_recommended_id", s.final_recommended_id},
              {"final_V_hat", s.final_v_hat},
              {"optimal", s.optimal.decisions},
              {"optimal_id", s.optimal_id},
              {"optimal_V", s.optimal_v},
              {"optimal_from_q", s.optimal_from_q ? Json(*s.optimal_from_q) : Json(nullptr)},
              {"max_abs_p_error", s.max_p_error},
              {"max_abs_r_error", s.max_r_error}};
}

inline void print_summary(const ExperimentSummary& s, std::ostream& out) {
  out << "episodes:              " << s.episodes << '\n'
      << "final recommendation:  f" << s.final_recommended_id + 1 << ' ' << detail::Decisions(s.final_recommended)
      << "  V_hat " << detail::Fmt(s.final_v_hat) << '\n'
      << "optimal strategy:      f" << s.optimal_id + 1 << ' ' << detail::Decisions(s.optimal) << "  V "
      << detail::Fmt(s.optimal_v) << '\n'
      << "optimal from q:        " << (s.optimal_from_q ? std::to_string(*s.optimal_from_q) : "never") << '\n'
      << "max |p_hat - p|:       " << detail::Fmt(s.max_p_error) << '\n'
      << "max |r_hat - r|:       " << detail::Fmt(s.max_r_error) << '\n';
}

struct ExperimentResult {
  ConvergenceTrace trace;
  ExperimentSummary summary;
};

inline ExperimentResult run_experiment(const MarkovPayoffModel& model, const ExperimentOptions& opt) {
  if (opt.steps < 1) throw UsageError("steps must be at least 1");
  const auto schedule = parse_schedule(opt.schedule, model.num_states, model.num_decisions, opt.episodes);
  const auto episodes = simulate_batch(model, schedule, opt.steps, opt.seed);

  ControllerConfig cfg;
  cfg.num_states = model.num_states;
  cfg.num_decisions = model.num_decisions;
  cfg.delta = opt.delta;
  cfg.forgetting = opt.forgetting;
  cfg.truth = model;
  auto fit = batch_fit(cfg, io::observe_all(episodes));
  auto summary = summarize_trace(fit.trace, model);
  return {std::move(fit.trace), std::move(summary)};
}

inline int cmd_experiment(const ExperimentOptions& opt, std::ostream& out) {
  const auto model = io::load_model(opt.model);
  const auto result = run_experiment(model, opt);
  if (!opt.out.empty()) detail::WriteFile(opt.out, export_trace(result.trace));
  if (opt.json) {
    out << to_json(result.summary).dump(2) << '\n';
  } else {
    print_summary(result.summary, out);
  }
  return 0;
}

// ------------------------------------------------------------ gridworld

struct GridworldOptions {
  std::string room;
  std::string policy = "1";
  int bumps = 100;
  std::size_t episodes = 1;
  std::uint64_t seed = 0;
  std::string start;  // "x,y,H" pins the start pose; random otherwise
  std::string out;    // observation-grade episode log; skipped when empty
  bool json = false;
};

struct GridRunReport {
  grid::RobotPose start;
  grid::GridEpisode result;
  std::size_t free_cells = 0;
};

inline grid::RobotPose parse_pose(const std::string& text) {
  const auto parts = detail::Split(text, ',');
  if (parts.size() != 3) throw UsageError("start must be x,y,HEADING");
  grid::RobotPose pose;
  try {
    pose.cell = {std::stoi(parts[0]), std::stoi(parts[1])};
  } catch (const std::exception&) {
    throw UsageError("start must be x,y,HEADING");
  }
  const auto it = std::find(grid::kHeadingNames.begin(), grid::kHeadingNames.end(), parts[2]);
  if (it == grid::kHeadingNames.end()) throw UsageError("unknown heading \"" + parts[2] + "\"");
  pose.heading = static_cast<grid::Heading>(it - grid::kHeadingNames.begin());
  return pose;
}

inline std::vector<GridRunReport> run_gridworld(const grid::Room& room, const GridworldOptions& opt) {
  if (opt.bumps < 1) throw UsageError("bumps must be at least 1");
  if (opt.episodes == 0) throw UsageError("episodes must be at least 1");
  const Policy policy = policy_of(parse_strategy(opt.policy, 2, 2));
  const std::optional<grid::RobotPose> pinned =
      opt.start.empty() ? std::nullopt : std::optional<grid::RobotPose>(parse_pose(opt.start));

  std::vector<GridRunReport> out;
  for (std::size_t e = 0; e < opt.episodes; ++e) {
    grid::Room fresh = room;
    fresh.clear_visited();
    Rng rng(episode_seed(opt.seed, e));
    GridRunReport report;
    report.start = pinned ? *pinned : grid::random_start_pose(fresh, rng);
    report.result = grid::run_gridworld_episode(fresh, report.start, policy, opt.bumps);
    report.free_cells = fresh.free_count();
    out.push_back(std::move(report));
  }
  return out;
}

inline int cmd_gridworld(const GridworldOptions& opt, std::ostream& out) {
  const auto room = io::load_room(opt.room);
  const auto reports = run_gridworld(room, opt);

  if (!opt.out.empty()) {
    std::ofstream log(opt.out, std::ios::binary | std::ios::trunc);
    for (const auto& r : reports) {
      // A robot stuck from the start produced no steps and nothing to learn from.
      if (!r.result.episode.steps.empty()) log << io::to_json(r.result.episode.observe()).dump() << '\n';
    }
    if (!log) throw std::runtime_error("cannot write " + opt.out);
  }

  Json rows = Json::array();
  for (std::size_t e = 0; e < reports.size(); ++e) {
    const auto& r = reports[e];
    const auto scanned = static_cast<long long>(std::llround(r.result.episode.total_payoff));
    if (opt.json) {
      rows.push_back({{"episode", e},
                      {"start", {{"x", r.start.cell.x}, {"y", r.start.cell.y},
                                 {"heading", std::string(grid::kHeadingNames[static_cast<std::size_t>(r.start.heading)])}}},
                      {"bumps", r.result.episode.steps.size()},
                      {"scanned", scanned},
                      {"free_cells", r.free_cells},
                      {"stuck", r.result.stuck}});
    } else {
      out << "episode " << e << ": start (" << r.start.cell.x << ',' << r.start.cell.y << ") "
          << grid::kHeadingNames[static_cast<std::size_t>(r.start.heading)] << ", bumps "
          << r.result.episode.steps.size() << ", scanned " << scanned << " of " << r.free_cells
          << (r.result.stuck ? ", stuck" : "") << '\n';
    }
  }
  if (opt.json) out << rows.dump(2) << '\n';
  return 0;
}

// ------------------------------------------------------------------ fit

struct FitOptions {
  std::string log;
  std::string model;  // optional: supplies dimensions and the V_true column
  int states = 2;
  int decisions = 2;
  double delta = kDefaultRlsDelta;
  double forgetting = 1.0;
  std::string out;    // snapshot document; stdout when empty
  std::string trace;  // trace CSV; skipped when empty
};

inline BatchFit run_fit(const std::vector<ObservedEpisode>& episodes, const FitOptions& opt,
                        const std::optional<MarkovPayoffModel>& model) {
  ControllerConfig cfg;
  cfg.num_states = model ? model->num_states : opt.states;
  cfg.num_decisions = model ? model->num_decisions : opt.decisions;
  cfg.delta = opt.delta;
  cfg.forgetting = opt.forgetting;
  cfg.truth = model;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto bad = validate_episode(episodes[e], cfg.num_states, cfg.num_decisions);
    if (!bad.empty()) {
      throw std::invalid_argument("episode " + std::to_string(e + 1) + ": " + bad.front().path + " " +
                                  bad.front().message);
    }
  }
  return batch_fit(cfg, episodes);
}

inline int cmd_fit(const FitOptions& opt, std::ostream& out) {
  std::ifstream in(opt.log);
  if (!in) throw std::runtime_error("cannot open " + opt.log);
  const auto episodes = io::observe_all(io::read_episode_log(in));
  std::optional<MarkovPayoffModel> model;
  if (!opt.model.empty()) model = io::load_model(opt.model);
  const auto fit = run_fit(episodes, opt, model);

  const std::string doc = io::snapshot_document(fit.snapshot, fit.estimator).dump(2) + "\n";
  if (opt.out.empty()) {
    out << doc;
  } else {
    detail::WriteFile(opt.out, doc);
  }
  if (!opt.trace.empty()) detail::WriteFile(opt.trace, export_trace(fit.trace));
  return 0;
}

}  // namespace adaptmc::cli
