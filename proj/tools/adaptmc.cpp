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

// adaptmc: command-line driver.
//
//   adaptmc solve      --model M [--json]
//   adaptmc experiment --model M [--episodes N --steps S --seed X --schedule ...] [--out trace.csv]
//   adaptmc gridworld  --room R [--policy P --bumps B --episodes N --seed X --start x,y,H] [--out log.jsonl]
//   adaptmc fit        --log L [--model M] [--out snapshot.json] [--trace trace.csv]
//   adaptmc serve      [--listen host:port --data-dir D --delta d --lambda l]

#include <csignal>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "adaptmc/commands.hpp"
#include "adaptmc/service.hpp"

namespace {

adaptmc::service::Server* g_server = nullptr;

void StopServer(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace adaptmc;

  CLI::App app{"Adaptive control of Markov chains with payoffs"};
  app.require_subcommand(1);

  cli::SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Brute-force the best stationary strategy of a model");
  solve_cmd->add_option("--model", solve.model, "Model JSON")->required()->check(CLI::ExistingFile);
  solve_cmd->add_flag("--json", solve.json, "Machine-readable output");

  cli::ExperimentOptions exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Simulate a taught batch and fit the adaptive controller");
  exp_cmd->add_option("--model", exp.model, "Model JSON")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--episodes", exp.episodes, "Number of episodes")->capture_default_str();
  exp_cmd->add_option("--steps", exp.steps, "Steps per episode")->capture_default_str();
  exp_cmd->add_option("--seed", exp.seed, "Base seed; episode e uses seed+e")->capture_default_str();
  exp_cmd->add_option("--delta", exp.delta, "Initial RLS covariance scale")->capture_default_str();
  exp_cmd->add_option("--lambda", exp.forgetting, "RLS forgetting factor in (0,1]")->capture_default_str();
  exp_cmd->add_option("--schedule", exp.schedule, "Teacher blocks id:count,... (default: cycle all)");
  exp_cmd->add_option("--out", exp.out, "Trace CSV path");
  exp_cmd->add_flag("--json", exp.json, "Machine-readable summary");

  cli::GridworldOptions gw;
  auto* gw_cmd = app.add_subcommand("gridworld", "Run the coverage robot under a fixed reaction strategy");
  gw_cmd->add_option("--room", gw.room, "Room JSON or ASCII file")->required()->check(CLI::ExistingFile);
  gw_cmd->add_option("--policy", gw.policy, "Strategy number (1-4) or decisions like 0,1")->capture_default_str();
  gw_cmd->add_option("--bumps", gw.bumps, "Bumps per episode")->capture_default_str();
  gw_cmd->add_option("--episodes", gw.episodes, "Number of episodes")->capture_default_str();
  gw_cmd->add_option("--seed", gw.seed, "Base seed for start poses")->capture_default_str();
  gw_cmd->add_option("--start", gw.start, "Pinned start pose x,y,HEADING (e.g. 3,5,NE)");
  gw_cmd->add_option("--out", gw.out, "Episode log (JSON Lines)");
  gw_cmd->add_flag("--json", gw.json, "Machine-readable report");

  cli::FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the controller to an episode log");
  fit_cmd->add_option("--log", fit.log, "Episode log (JSON Lines)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--model", fit.model, "True model, for dimensions and the V_true column")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--states", fit.states, "Number of states without --model")->capture_default_str();
  fit_cmd->add_option("--decisions", fit.decisions, "Number of decisions without --model")->capture_default_str();
  fit_cmd->add_option("--delta", fit.delta, "Initial RLS covariance scale")->capture_default_str();
  fit_cmd->add_option("--lambda", fit.forgetting, "RLS forgetting factor in (0,1]")->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Snapshot JSON path (default stdout)");
  fit_cmd->add_option("--trace", fit.trace, "Trace CSV path");

  auto server_cfg = service::ServerConfig::from_env();
  std::string listen;
  auto* serve_cmd = app.add_subcommand("serve", "Serve teaching sessions over HTTP");
  serve_cmd->add_option("--listen", listen, "host:port (env ADAPTMC_LISTEN)");
  serve_cmd->add_option("--data-dir", server_cfg.data_dir, "Session store (env ADAPTMC_DATA_DIR)");
  serve_cmd->add_option("--delta", server_cfg.delta, "Default RLS delta (env ADAPTMC_DELTA)");
  serve_cmd->add_option("--lambda", server_cfg.forgetting, "Default forgetting factor (env ADAPTMC_LAMBDA)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) return cli::cmd_solve(solve, std::cout);
    if (*exp_cmd) return cli::cmd_experiment(exp, std::cout);
    if (*gw_cmd) return cli::cmd_gridworld(gw, std::cout);
    if (*fit_cmd) return cli::cmd_fit(fit, std::cout);
    if (*serve_cmd) {
      if (!listen.empty()) {
        const auto colon = listen.rfind(':');
        if (colon == std::string::npos) throw cli::UsageError("--listen must be host:port");
        server_cfg.host = listen.substr(0, colon);
        server_cfg.port = std::stoi(listen.substr(colon + 1));
      }
      service::Server server(server_cfg);
      g_server = &server;
      std::signal(SIGINT, StopServer);
      std::signal(SIGTERM, StopServer);
      std::cerr << "listening on " << server_cfg.host << ':' << server_cfg.port << '\n';
      if (!server.listen()) {
        std::cerr << "error: cannot listen on " << server_cfg.host << ':' << server_cfg.port << '\n';
        return 1;
      }
      return 0;
    }
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidModel& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& v : e.violations()) std::cerr << "  " << v.path << ": " << v.message << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
