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

// File formats: model JSON, episode logs (JSON Lines), room JSON and
// estimator/controller snapshots. All indices are 0-based.

#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptmc/adaptive_controller.hpp"
#include "adaptmc/gridworld.hpp"
#include "adaptmc/inverse_estimation.hpp"
#include "adaptmc/mdp_core.hpp"
#include "adaptmc/simulate.hpp"
#include "json.hpp"

namespace adaptmc::io {

using Json = nlohmann::json;

namespace detail {

inline Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix MatrixFromJson(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(what + ": expected a nonempty array of rows");
  const auto rows = j.size();
  const auto cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw std::invalid_argument(what + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

inline Json VectorToJson(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Vector VectorFromJson(const Json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

inline Json StackToJson(const std::vector<Matrix>& stack) {
  Json out = Json::array();
  for (const auto& m : stack) out.push_back(MatrixToJson(m));
  return out;
}

inline std::vector<Matrix> StackFromJson(const Json& j, const std::string& what) {
  if (!j.is_array()) throw std::invalid_argument(what + ": expected an array of matrices");
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(MatrixFromJson(j[k], what + "[" + std::to_string(k) + "]"));
  return out;
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

// --- model -----------------------------------------------------------------

inline Json to_json(const MarkovPayoffModel& model) {
  return Json{{"num_states", model.num_states},
              {"num_decisions", model.num_decisions},
              {"initial_distribution", detail::VectorToJson(model.initial_distribution)},
              {"transitions", detail::StackToJson(model.transitions)},
              {"payoffs", detail::StackToJson(model.payoffs)}};
}

/// Parses without validating; call validate_model on the result.
inline MarkovPayoffModel model_from_json(const Json& j) {
  try {
    MarkovPayoffModel model;
    model.num_states = j.at("num_states").get<int>();
    model.num_decisions = j.at("num_decisions").get<int>();
    model.initial_distribution = detail::VectorFromJson(j.at("initial_distribution"));
    model.transitions = detail::StackFromJson(j.at("transitions"), "transitions");
    model.payoffs = detail::StackFromJson(j.at("payoffs"), "payoffs");
    return model;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed model JSON: ") + e.what());
  }
}

/// Loads and validates.
inline MarkovPayoffModel load_model(const std::string& path) {
  Json j;
  try {
    j = Json::parse(detail::ReadFile(path));
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  auto model = model_from_json(j);
  require_valid(model);
  return model;
}

// --- episodes --------------------------------------------------------------

inline Json to_json(const Episode& ep, bool with_step_payoffs) {
  Json steps = Json::array();
  for (const auto& s : ep.steps) {
    Json js{{"state", s.state}, {"decision", s.decision}, {"next_state", s.next_state}};
    if (with_step_payoffs && s.step_payoff) js["step_payoff"] = *s.step_payoff;
    steps.push_back(std::move(js));
  }
  return Json{{"steps", std::move(steps)}, {"total_payoff", ep.total_payoff}};
}

inline Json to_json(const ObservedEpisode& ep) {
  Json steps = Json::array();
  for (const auto& s : ep.steps) {
    steps.push_back(Json{{"state", s.state}, {"decision", s.decision}, {"next_state", s.next_state}});
  }
  return Json{{"steps", std::move(steps)}, {"total_payoff", ep.total_payoff}};
}

inline Episode episode_from_json(const Json& j) {
  try {
    Episode ep;
    ep.total_payoff = j.at("total_payoff").get<double>();
    for (const auto& js : j.at("steps")) {
      Step s{js.at("state").get<int>(), js.at("decision").get<int>(), js.at("next_state").get<int>(), std::nullopt};
      if (js.contains("step_payoff")) s.step_payoff = js["step_payoff"].get<double>();
      ep.steps.push_back(s);
    }
    return ep;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed episode JSON: ") + e.what());
  }
}

/// One compact JSON object per line.
template <typename EpisodeT>
void write_episode_log(const std::vector<EpisodeT>& episodes, std::ostream& out) {
  for (const auto& ep : episodes) out << to_json(ep).dump() << '\n';
  if (!out) throw std::runtime_error("failed to write episode log");
}

inline void write_episode_log(const std::vector<Episode>& episodes, std::ostream& out, bool with_step_payoffs) {
  for (const auto& ep : episodes) out << to_json(ep, with_step_payoffs).dump() << '\n';
  if (!out) throw std::runtime_error("failed to write episode log");
}

inline std::vector<Episode> read_episode_log(std::istream& in) {
  std::vector<Episode> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(episode_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("episode log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ObservedEpisode> observe_all(const std::vector<Episode>& episodes) {
  std::vector<ObservedEpisode> out;
  out.reserve(episodes.size());
  for (const auto& ep : episodes) out.push_back(ep.observe());
  return out;
}

// --- rooms -----------------------------------------------------------------

inline Json to_json(const grid::Room& room) {
  Json obstacles = Json::array();
  for (const auto& c : room.obstacles()) obstacles.push_back(Json::array({c.x, c.y}));
  return Json{{"width", room.width()}, {"height", room.height()}, {"obstacles", std::move(obstacles)}};
}

inline grid::Room room_from_json(const Json& j) {
  try {
    grid::Room room(j.at("width").get<int>(), j.at("height").get<int>());
    if (j.contains("obstacles")) {
      for (const auto& c : j["obstacles"]) {
        if (!c.is_array() || c.size() != 2) throw std::invalid_argument("obstacle must be [x, y]");
        room.add_obstacle({c[0].get<int>(), c[1].get<int>()});
      }
    }
    return room;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed room JSON: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw std::invalid_argument(e.what());
  }
}

inline grid::Room load_room(const std::string& path) {
  const auto text = detail::ReadFile(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return room_from_json(j);
}

// --- snapshots -------------------------------------------------------------

inline Json counts_to_json(const TransitionCounts& counts) {
  Json out = Json::array();
  for (int k = 0; k < counts.num_decisions(); ++k) {
    Json mat = Json::array();
    for (int i = 0; i < counts.num_states(); ++i) {
      Json row = Json::array();
      for (int j = 0; j < counts.num_states(); ++j) row.push_back(counts(k, i, j));
      mat.push_back(std::move(row));
    }
    out.push_back(std::move(mat));
  }
  return out;
}

/// Persisted estimator: {q, r_hat, Q, counts, p_hat}.
inline Json to_json(const EstimatorState& est) {
  return Json{{"q", est.rls.q},
              {"r_hat", detail::VectorToJson(est.rls.r_hat)},
              {"Q", detail::MatrixToJson(est.rls.Q)},
              {"counts", counts_to_json(est.counts)},
              {"p_hat", detail::StackToJson(transition_estimates(est.counts).p_hat)}};
}

inline EstimatorState estimator_from_json(const Json& j) {
  try {
    const auto& jc = j.at("counts");
    const int K = static_cast<int>(jc.size());
    const int m = K > 0 ? static_cast<int>(jc.front().size()) : 0;
    EstimatorState est(m, K);
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < m; ++i) {
        if (jc[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(m)) {
          throw std::invalid_argument("counts tensor is ragged");
        }
        for (int c = 0; c < m; ++c) {
          est.counts(k, i, c) = jc[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]
                                    .get<std::uint64_t>();
        }
      }
    }
    est.rls.q = j.at("q").get<std::uint64_t>();
    est.rls.r_hat = detail::VectorFromJson(j.at("r_hat"));
    est.rls.Q = detail::MatrixFromJson(j.at("Q"), "Q");
    if (est.rls.r_hat.size() != m * K || est.rls.Q.rows() != m * K || est.rls.Q.cols() != m * K) {
      throw std::invalid_argument("snapshot dimensions are inconsistent");
    }
    return est;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed estimator snapshot: ") + e.what());
  }
}

inline Json to_json(const ControllerSnapshot& s) {
  return Json{{"q", s.q},
              {"p_hat", detail::StackToJson(s.p_hat)},
              {"sample_sizes", s.sample_sizes},
              {"r_hat", detail::VectorToJson(s.r_hat)},
              {"recommended", s.recommended.decisions},
              {"recommended_id", s.recommended_id},
              {"V_hat", s.recommended_gain},
              {"identified_strategy", s.identified.strategy.decisions},
              {"identified_visited", s.identified.visited},
              {"recommendation_stale", s.recommendation_stale}};
}

inline ControllerSnapshot snapshot_from_json(const Json& j) {
  try {
    ControllerSnapshot s;
    s.q = j.at("q").get<std::uint64_t>();
    s.p_hat = detail::StackFromJson(j.at("p_hat"), "p_hat");
    s.sample_sizes = j.at("sample_sizes").get<std::vector<std::uint64_t>>();
    s.r_hat = detail::VectorFromJson(j.at("r_hat"));
    s.recommended.decisions = j.at("recommended").get<std::vector<int>>();
    s.recommended_id = j.at("recommended_id").get<std::uint64_t>();
    s.recommended_gain = j.at("V_hat").get<double>();
    s.identified.strategy.decisions = j.at("identified_strategy").get<std::vector<int>>();
    s.identified.visited = j.at("identified_visited").get<std::vector<bool>>();
    s.recommendation_stale = j.at("recommendation_stale").get<bool>();
    return s;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed controller snapshot: ") + e.what());
  }
}

/// Controller snapshot and estimator state in one document, as persisted by
/// the service and written by `fit`.
inline Json snapshot_document(const ControllerSnapshot& snapshot, const EstimatorState& estimator) {
  return Json{{"snapshot", to_json(snapshot)}, {"estimator", to_json(estimator)}};
}

}  // namespace adaptmc::io
