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

// Interactive teaching sessions over HTTP/JSON.
//
// A session wraps one environment (a controlled chain or the coverage-robot
// room) and one AdaptiveController. In teaching mode a human supplies each
// decision; ending an episode feeds it to the controller. In autopilot mode
// the latest recommended strategy drives the environment instead.
//
// Persistence is event sourced. Per session, under <data_dir>/<id>/:
//   session.json     resolved configuration (model or room inline)
//   episodes.jsonl   committed observed episodes, append-only
//   snapshot.json    derived controller snapshot + estimator state
// Replaying episodes.jsonl through a fresh controller reproduces
// snapshot.json byte for byte.
//
// Teaching episode e (0-based, e = episodes committed so far) runs on a
// generator seeded episode_seed(seed, e), the same derivation simulate_batch
// uses, so a client that follows a TeacherSchedule reproduces simulate_batch
// exactly.

#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "adaptmc/adaptive_controller.hpp"
#include "adaptmc/gridworld.hpp"
#include "adaptmc/io.hpp"
#include "adaptmc/mdp_core.hpp"
#include "adaptmc/simulate.hpp"
#include "httplib.h"
#include "json.hpp"

namespace adaptmc::service {

using Json = nlohmann::json;

/// Error with the HTTP status it maps to.
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& message, Json details = nullptr)
      : Error(message), status_(status), details_(std::move(details)) {}

  int status() const { return status_; }
  const Json& details() const { return details_; }

 private:
  int status_;
  Json details_;
};

inline ServiceError BadRequest(const std::string& m, Json d = nullptr) { return {400, m, std::move(d)}; }
inline ServiceError NotFound(const std::string& m) { return {404, m}; }
inline ServiceError Conflict(const std::string& m) { return {409, m}; }

enum class Mode { kTeaching, kAutopilot };

inline std::string to_string(Mode m) { return m == Mode::kTeaching ? "teaching" : "autopilot"; }

inline Mode mode_from_string(const std::string& s) {
  if (s == "teaching") return Mode::kTeaching;
  if (s == "autopilot") return Mode::kAutopilot;
  throw BadRequest("mode must be \"teaching\" or \"autopilot\"");
}

struct SessionConfig {
  enum class Kind { kModel, kGridworld };

  Kind kind = Kind::kModel;
  MarkovPayoffModel model;  // kModel
  grid::Room room;          // kGridworld
  std::uint64_t seed = 0;
  double delta = kDefaultRlsDelta;
  double forgetting = 1.0;

  int num_states() const { return kind == Kind::kModel ? model.num_states : 2; }
  int num_decisions() const { return kind == Kind::kModel ? model.num_decisions : 2; }
};

inline Json to_json(const SessionConfig& c) {
  Json j{{"kind", c.kind == SessionConfig::Kind::kModel ? "model" : "gridworld"},
         {"seed", c.seed},
         {"delta", c.delta},
         {"lambda", c.forgetting}};
  if (c.kind == SessionConfig::Kind::kModel) {
    j["model"] = io::to_json(c.model);
  } else {
    j["room"] = io::to_json(c.room);
  }
  return j;
}

/// Accepts {"kind": "model", "model": {...} | "model_file": path} or
/// {"kind": "gridworld", "room": {...} | "room_ascii": text | "room_file": path},
/// plus optional "seed", "delta", "lambda". Throws 400-class errors.
inline SessionConfig session_config_from_json(const Json& j, double default_delta, double default_forgetting) {
  if (!j.is_object()) throw BadRequest("session config must be a JSON object");
  SessionConfig c;
  c.delta = default_delta;
  c.forgetting = default_forgetting;
  try {
    const auto kind = j.value("kind", std::string(j.contains("room") || j.contains("room_ascii") ||
                                                          j.contains("room_file")
                                                      ? "gridworld"
                                                      : "model"));
    c.seed = j.value("seed", std::uint64_t{0});
    c.delta = j.value("delta", c.delta);
    c.forgetting = j.value("lambda", c.forgetting);
    if (!(c.delta > 0.0)) throw BadRequest("delta must be positive");
    if (!(c.forgetting > 0.0 && c.forgetting <= 1.0)) throw BadRequest("lambda must be in (0, 1]");

    if (kind == "model") {
      c.kind = SessionConfig::Kind::kModel;
      if (j.contains("model")) {
        c.model = io::model_from_json(j["model"]);
      } else if (j.contains("model_file")) {
        c.model = io::model_from_json(Json::parse(io::detail::ReadFile(j["model_file"].get<std::string>())));
      } else {
        throw BadRequest("model session needs \"model\" or \"model_file\"");
      }
      auto violations = validate_model(c.model);
      if (!violations.empty()) {
        Json list = Json::array();
        for (const auto& v : violations) list.push_back({{"path", v.path}, {"message", v.message}});
        throw BadRequest("invalid model", {{"violations", list}});
      }
      if (!strategy_count(c.model.num_states, c.model.num_decisions)) {
        throw BadRequest("strategy space too large for exhaustive search");
      }
    } else if (kind == "gridworld") {
      c.kind = SessionConfig::Kind::kGridworld;
      if (j.contains("room")) {
        c.room = io::room_from_json(j["room"]);
      } else if (j.contains("room_ascii")) {
        c.room = grid::Room::from_ascii(j["room_ascii"].get<std::string>());
      } else if (j.contains("room_file")) {
        c.room = io::load_room(j["room_file"].get<std::string>());
      } else {
        throw BadRequest("gridworld session needs \"room\", \"room_ascii\" or \"room_file\"");
      }
      bool movable = false;
      for (int y = 0; y < c.room.height() && !movable; ++y) {
        for (int x = 0; x < c.room.width() && !movable; ++x) {
          movable = !c.room.is_blocked({x, y}) && !grid::boxed_in(c.room, {x, y});
        }
      }
      if (!movable) throw BadRequest("room has no free cell with a free neighbour");
    } else {
      throw BadRequest("kind must be \"model\" or \"gridworld\"");
    }
  } catch (const Json::exception& e) {
    throw BadRequest(std::string("malformed session config: ") + e.what());
  } catch (const ServiceError&) {
    throw;
  } catch (const std::exception& e) {
    throw BadRequest(e.what());
  }
  return c;
}

/// One episode's worth of environment. `decide` returns nullopt when the
/// environment cannot continue (a stuck robot).
class Environment {
 public:
  virtual ~Environment() = default;
  virtual void reset(std::uint64_t seed) = 0;
  virtual bool finished() const = 0;
  virtual int pending_state() const = 0;
  virtual std::optional<Step> decide(int decision) = 0;
  virtual Episode episode() const = 0;
  virtual Json view() const = 0;
};

class ModelEnvironment final : public Environment {
 public:
  explicit ModelEnvironment(const MarkovPayoffModel& model) : model_(model) {}

  void reset(std::uint64_t seed) override {
    rng_.seed(seed);
    state_ = sample_start(model_, rng_);
    episode_ = Episode{};
  }
  bool finished() const override { return false; }
  int pending_state() const override { return state_; }

  std::optional<Step> decide(int decision) override {
    const int next = sample_next(model_, state_, decision, rng_);
    const double payoff = model_.payoffs[static_cast<std::size_t>(decision)](state_, next);
    Step s{state_, decision, next, payoff};
    episode_.steps.push_back(s);
    episode_.total_payoff += payoff;
    state_ = next;
    return s;
  }

  Episode episode() const override { return episode_; }
  Json view() const override { return Json{{"state", state_}}; }

 private:
  const MarkovPayoffModel& model_;
  Rng rng_;
  int state_ = 0;
  Episode episode_;
};

class GridEnvironment final : public Environment {
 public:
  explicit GridEnvironment(const grid::Room& room) : room_(room) {}

  void reset(std::uint64_t seed) override {
    Rng rng(seed);
    grid::Room fresh = room_;
    fresh.clear_visited();
    fresh.head_on_bumps = 0;
    grid::RobotPose pose = grid::random_start_pose(fresh, rng);
    for (int attempt = 0; attempt < 1000 && grid::boxed_in(fresh, pose.cell); ++attempt) {
      pose = grid::random_start_pose(fresh, rng);
    }
    run_.emplace(std::move(fresh), pose);
  }

  bool finished() const override { return run_->stuck(); }
  int pending_state() const override { return run_->pending()->state(); }
  std::optional<Step> decide(int decision) override { return run_->decide(decision); }
  Episode episode() const override { return run_->episode(); }

  Json view() const override {
    const auto& room = run_->room();
    Json visited = Json::array();
    for (int y = 0; y < room.height(); ++y) {
      for (int x = 0; x < room.width(); ++x) {
        if (room.is_visited({x, y})) visited.push_back(Json::array({x, y}));
      }
    }
    const auto& pose = run_->pose();
    Json j = io::to_json(room);
    j["visited"] = std::move(visited);
    j["robot"] = {{"x", pose.cell.x}, {"y", pose.cell.y},
                  {"heading", std::string(grid::kHeadingNames[static_cast<std::size_t>(pose.heading)])}};
    j["scanned"] = room.visited_count() - run_->initial_visited();
    if (auto bump = run_->pending()) j["sensor"] = bump->sensor == grid::Sensor::kLeft ? "left" : "right";
    return j;
  }

 private:
  grid::Room room_;
  std::optional<grid::CoverageRun> run_;
};

/// Last committed, immutable view of a session's estimates.
struct Committed {
  ControllerSnapshot snapshot;
  std::string snapshot_document;  // what snapshot.json holds
  std::string trace_csv;
  std::size_t trace_rows = 0;
};

class Session {
 public:
  /// `dir` empty means in-memory only.
  Session(std::string id, SessionConfig config, std::filesystem::path dir = {})
      : id_(std::move(id)), config_(std::move(config)), dir_(std::move(dir)), controller_(MakeControllerConfig()) {
    if (config_.kind == SessionConfig::Kind::kModel) {
      teaching_env_ = std::make_unique<ModelEnvironment>(config_.model);
      autopilot_env_ = std::make_unique<ModelEnvironment>(config_.model);
    } else {
      teaching_env_ = std::make_unique<GridEnvironment>(config_.room);
      autopilot_env_ = std::make_unique<GridEnvironment>(config_.room);
    }
  }

  /// Fresh session: writes session.json and the empty log, then opens the
  /// first teaching episode.
  void initialize() {
    if (!dir_.empty()) {
      std::filesystem::create_directories(dir_);
      WriteAtomically(dir_ / "session.json", to_json(config_).dump(2) + "\n");
      std::ofstream(dir_ / "episodes.jsonl", std::ios::trunc);
    }
    Commit();
    teaching_env_->reset(episode_seed(config_.seed, 0));
  }

  /// Rebuilds controller state from a committed log (cold restart).
  void replay(const std::vector<ObservedEpisode>& episodes) {
    for (const auto& ep : episodes) controller_.process_episode(ep);
    Commit();
    teaching_env_->reset(episode_seed(config_.seed, controller_.snapshot().q));
  }

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  std::mutex& mutex() { return mutex_; }

  std::shared_ptr<const Committed> committed() const {
    std::lock_guard lock(committed_mutex_);
    return committed_;
  }

  // Everything below mutates; callers hold mutex().

  Json summary() const {
    Json j{{"id", id_},
           {"kind", config_.kind == SessionConfig::Kind::kModel ? "model" : "gridworld"},
           {"mode", to_string(mode_)},
           {"q", controller_.snapshot().q},
           {"num_states", config_.num_states()},
           {"num_decisions", config_.num_decisions()},
           {"episode_steps", teaching_env_->episode().steps.size()},
           {"seed", config_.seed}};
    j["pending"] = PendingJson();
    j["view"] = (mode_ == Mode::kTeaching ? teaching_env_ : autopilot_env_)->view();
    if (mode_ == Mode::kAutopilot) j["autopilot"] = AutopilotJson();
    return j;
  }

  /// Teaching: the pending event. Autopilot: advances one auto-decided step.
  Json event() {
    if (mode_ == Mode::kTeaching) return Json{{"mode", "teaching"}, {"pending", PendingJson()}};
    if (autopilot_env_->finished()) ResetAutopilot();
    const int state = autopilot_env_->pending_state();
    const int decision = autopilot_strategy_[state];
    const auto step = autopilot_env_->decide(decision);
    Json j{{"mode", "autopilot"}, {"strategy", autopilot_strategy_.decisions}};
    if (step) {
      ++autopilot_steps_;
      autopilot_payoff_ += *step->step_payoff;
      j["step"] = {{"state", step->state},
                   {"decision", step->decision},
                   {"next_state", step->next_state},
                   {"step_payoff", *step->step_payoff}};
    }
    j["pending"] = PendingJson();
    j["autopilot"] = AutopilotJson();
    return j;
  }

  /// `event` (the step index the client is answering) guards against
  /// answering the same pending event twice.
  Json post_decision(int decision, std::optional<std::uint64_t> event = std::nullopt) {
    if (mode_ != Mode::kTeaching) throw Conflict("session is in autopilot; decisions are not accepted");
    if (teaching_env_->finished()) throw Conflict("no pending event; end the episode");
    if (decision < 0 || decision >= config_.num_decisions()) {
      throw BadRequest("decision " + std::to_string(decision) + " out of range");
    }
    const std::uint64_t index = teaching_env_->episode().steps.size();
    if (event && *event != index) {
      throw Conflict("event " + std::to_string(*event) + " was already answered; pending event is " +
                     std::to_string(index));
    }
    const auto step = teaching_env_->decide(decision);
    Json j;
    if (step) j["step"] = {{"state", step->state}, {"decision", step->decision}, {"next_state", step->next_state}};
    j["pending"] = PendingJson();
    return j;
  }

  /// Commits the teaching episode to the log and the controller.
  Json end_episode() {
    if (mode_ != Mode::kTeaching) throw Conflict("session is in autopilot");
    const Episode full = teaching_env_->episode();
    if (full.steps.empty()) throw BadRequest("episode has no decisions yet");
    const ObservedEpisode observed = full.observe();
    if (!dir_.empty()) {
      std::ofstream log(dir_ / "episodes.jsonl", std::ios::app);
      log << io::to_json(observed).dump() << '\n';
      log.flush();
      if (!log) throw ServiceError(500, "failed to append to the episode log");
    }
    controller_.process_episode(observed);
    Commit();
    teaching_env_->reset(episode_seed(config_.seed, controller_.snapshot().q));
    return Json{{"snapshot", io::to_json(controller_.snapshot())}, {"episode", io::to_json(full, true)}};
  }

  /// Loads the current recommendation into the autopilot.
  Json hot_swap() {
    if (controller_.snapshot().q == 0) throw BadRequest("no snapshot yet; complete an episode first");
    if (mode_ == Mode::kTeaching && !teaching_env_->episode().steps.empty()) {
      throw Conflict("a teaching episode is in progress; end it first");
    }
    autopilot_strategy_ = controller_.snapshot().recommended;
    if (mode_ != Mode::kAutopilot) {
      mode_ = Mode::kAutopilot;
      ResetAutopilot();
    }
    return Json{{"mode", "autopilot"},
                {"strategy", autopilot_strategy_.decisions},
                {"strategy_id", controller_.snapshot().recommended_id},
                {"q", controller_.snapshot().q}};
  }

  Json set_mode(Mode mode) {
    if (mode == Mode::kAutopilot) return hot_swap();
    if (mode_ == Mode::kAutopilot) {
      mode_ = Mode::kTeaching;
      teaching_env_->reset(episode_seed(config_.seed, controller_.snapshot().q));
    }
    return Json{{"mode", "teaching"}, {"pending", PendingJson()}};
  }

  Mode mode() const { return mode_; }
  const AdaptiveController& controller() const { return controller_; }

 private:
  ControllerConfig MakeControllerConfig() const {
    ControllerConfig c;
    c.num_states = config_.num_states();
    c.num_decisions = config_.num_decisions();
    c.delta = config_.delta;
    c.forgetting = config_.forgetting;
    return c;
  }

  Json PendingJson() const {
    const auto& env = mode_ == Mode::kTeaching ? teaching_env_ : autopilot_env_;
    if (env->finished()) return nullptr;
    Json j{{"state", env->pending_state()}, {"event", env->episode().steps.size()}};
    if (config_.kind == SessionConfig::Kind::kGridworld) {
      j["sensor"] = env->pending_state() == 0 ? "left" : "right";
    }
    return j;
  }

  Json AutopilotJson() const {
    return Json{{"steps", autopilot_steps_},
                {"total_payoff", autopilot_payoff_},
                {"mean_payoff", autopilot_steps_ ? autopilot_payoff_ / static_cast<double>(autopilot_steps_) : 0.0}};
  }

  void ResetAutopilot() {
    // Separate stream from teaching episodes so autopilot use never shifts
    // the teaching seeds.
    autopilot_env_->reset(episode_seed(config_.seed ^ 0x9E3779B97F4A7C15ULL, autopilot_runs_++));
  }

  void Commit() {
    auto c = std::make_shared<Committed>();
    c->snapshot = controller_.snapshot();
    c->snapshot_document = io::snapshot_document(controller_.snapshot(), controller_.estimator()).dump(2) + "\n";
    c->trace_csv = export_trace(controller_.trace());
    c->trace_rows = controller_.trace().rows.size();
    if (!dir_.empty()) WriteAtomically(dir_ / "snapshot.json", c->snapshot_document);
    std::lock_guard lock(committed_mutex_);
    committed_ = std::move(c);
  }

  static void WriteAtomically(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << text;
      if (!out) throw ServiceError(500, "failed to write " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  std::string id_;
  SessionConfig config_;
  std::filesystem::path dir_;
  AdaptiveController controller_;
  std::unique_ptr<Environment> teaching_env_;
  std::unique_ptr<Environment> autopilot_env_;
  Mode mode_ = Mode::kTeaching;
  Strategy autopilot_strategy_;
  std::uint64_t autopilot_runs_ = 0;
  std::uint64_t autopilot_steps_ = 0;
  double autopilot_payoff_ = 0.0;

  std::mutex mutex_;
  mutable std::mutex committed_mutex_;
  std::shared_ptr<const Committed> committed_;
};

/// Sessions by id, optionally backed by a data directory.
class SessionStore {
 public:
  SessionStore(std::string data_dir = {}, double delta = kDefaultRlsDelta, double forgetting = 1.0)
      : data_dir_(std::move(data_dir)), delta_(delta), forgetting_(forgetting) {
    if (!data_dir_.empty()) Load();
  }

  double delta() const { return delta_; }
  double forgetting() const { return forgetting_; }

  std::shared_ptr<Session> create(const Json& config_json) {
    auto config = session_config_from_json(config_json, delta_, forgetting_);
    std::unique_lock lock(mutex_);
    std::string id;
    do {
      char buf[24];
      std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(++next_id_));
      id = buf;
    } while (sessions_.count(id));
    auto session = std::make_shared<Session>(id, std::move(config), SessionDir(id));
    session->initialize();
    sessions_.emplace(id, session);
    return session;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session " + id);
    return it->second;
  }

  std::vector<std::string> ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
  }

 private:
  std::filesystem::path SessionDir(const std::string& id) const {
    return data_dir_.empty() ? std::filesystem::path{} : std::filesystem::path(data_dir_) / id;
  }

  void Load() {
    std::filesystem::create_directories(data_dir_);
    for (const auto& entry : std::filesystem::directory_iterator(data_dir_)) {
      if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "session.json")) continue;
      const std::string id = entry.path().filename().string();
      const auto config_json = Json::parse(io::detail::ReadFile((entry.path() / "session.json").string()));
      auto session = std::make_shared<Session>(id, session_config_from_json(config_json, delta_, forgetting_),
                                               entry.path());
      std::vector<ObservedEpisode> episodes;
      std::ifstream log(entry.path() / "episodes.jsonl");
      for (const auto& ep : io::read_episode_log(log)) episodes.push_back(ep.observe());
      session->replay(episodes);
      sessions_.emplace(id, session);
      if (id.size() > 1 && id[0] == 's') {
        next_id_ = std::max<std::uint64_t>(next_id_, std::strtoull(id.c_str() + 1, nullptr, 10));
      }
    }
  }

  std::string data_dir_;
  double delta_;
  double forgetting_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 0;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
  double delta = kDefaultRlsDelta;
  double forgetting = 1.0;

  /// ADAPTMC_LISTEN (host:port), ADAPTMC_DATA_DIR, ADAPTMC_DELTA, ADAPTMC_LAMBDA.
  static ServerConfig from_env() {
    ServerConfig c;
    if (const char* listen = std::getenv("ADAPTMC_LISTEN")) {
      const std::string s(listen);
      const auto colon = s.rfind(':');
      if (colon == std::string::npos) {
        c.host = s;
      } else {
        c.host = s.substr(0, colon);
        c.port = std::stoi(s.substr(colon + 1));
      }
    }
    if (const char* dir = std::getenv("ADAPTMC_DATA_DIR")) c.data_dir = dir;
    if (const char* d = std::getenv("ADAPTMC_DELTA")) c.delta = std::stod(d);
    if (const char* l = std::getenv("ADAPTMC_LAMBDA")) c.forgetting = std::stod(l);
    return c;
  }
};

/// Binds the endpoints onto an httplib server.
class Server {
 public:
  explicit Server(ServerConfig config)
      : config_(std::move(config)), store_(config_.data_dir, config_.delta, config_.forgetting) {
    Route();
  }

  SessionStore& store() { return store_; }
  httplib::Server& http() { return http_; }

  bool listen() { return http_.listen(config_.host, config_.port); }
  int bind_to_any_port() { return http_.bind_to_any_port(config_.host); }
  bool listen_after_bind() { return http_.listen_after_bind(); }
  void stop() { http_.stop(); }

 private:
  template <typename Fn>
  static void Handle(httplib::Response& res, Fn&& fn) {
    try {
      Json body = fn();
      res.set_content(body.dump(), "application/json");
    } catch (const ServiceError& e) {
      Json body{{"error", e.what()}};
      if (!e.details().is_null()) body["details"] = e.details();
      res.status = e.status();
      res.set_content(body.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  static Json ParseBody(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
      return Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      throw BadRequest(std::string("request body is not JSON: ") + e.what());
    }
  }

  template <typename Fn>
  Json WithSession(const httplib::Request& req, Fn&& fn) {
    auto session = store_.get(req.matches[1]);
    std::lock_guard lock(session->mutex());
    return fn(*session);
  }

  void Route() {
    http_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    http_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });

    http_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] {
        auto session = store_.create(ParseBody(req));
        std::lock_guard lock(session->mutex());
        return session->summary();
      });
    });
    http_.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] { return WithSession(req, [](Session& s) { return s.summary(); }); });
    });
    http_.Get(R"(/sessions/([^/]+)/event)", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] { return WithSession(req, [](Session& s) { return s.event(); }); });
    });
    http_.Post(R"(/sessions/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] {
        const Json body = ParseBody(req);
        if (!body.contains("decision") || !body["decision"].is_number_integer()) {
          throw BadRequest("body must be {\"decision\": int}");
        }
        std::optional<std::uint64_t> event;
        if (body.contains("event")) event = body["event"].get<std::uint64_t>();
        return WithSession(req, [&](Session& s) { return s.post_decision(body["decision"].get<int>(), event); });
      });
    });
    http_.Post(R"(/sessions/([^/]+)/episode/end)", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] { return WithSession(req, [](Session& s) { return s.end_episode(); }); });
    });
    http_.Get(R"(/sessions/([^/]+)/estimates)", [this](const httplib::Request& req, httplib::Response& res) {
      // Reads the last committed snapshot without waiting for a writer.
      Handle(res, [&] {
        const auto committed = store_.get(req.matches[1])->committed();
        return Json{{"snapshot", io::to_json(committed->snapshot)},
                    {"estimator", Json::parse(committed->snapshot_document).at("estimator")},
                    {"trace_rows", committed->trace_rows}};
      });
    });
    http_.Get(R"(/sessions/([^/]+)/trace\.csv)", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        res.set_content(store_.get(req.matches[1])->committed()->trace_csv, "text/csv");
      } catch (const ServiceError& e) {
        res.status = e.status();
        res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
      }
    });
    http_.Post(R"(/sessions/([^/]+)/hot-swap)", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] { return WithSession(req, [](Session& s) { return s.hot_swap(); }); });
    });
    http_.Post(R"(/sessions/([^/]+)/mode)", [this](const httplib::Request& req, httplib::Response& res) {
      Handle(res, [&] {
        const Json body = ParseBody(req);
        if (!body.contains("mode") || !body["mode"].is_string()) throw BadRequest("body must be {\"mode\": string}");
        const Mode mode = mode_from_string(body["mode"].get<std::string>());
        return WithSession(req, [&](Session& s) { return s.set_mode(mode); });
      });
    });
  }

  ServerConfig config_;
  SessionStore store_;
  httplib::Server http_;
};

}  // namespace adaptmc::service
