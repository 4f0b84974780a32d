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

// Teach the controller on the two-state example chain, then compare what it
// learned against the exact solution.

#include <cstdio>

#include "adaptmc/adaptive_controller.hpp"
#include "adaptmc/io.hpp"
#include "adaptmc/simulate.hpp"

int main(int argc, char** argv) {
  using namespace adaptmc;
  const std::string path = argc > 1 ? argv[1] : ADAPTMC_DATA_DIR "/table1.json";
  const auto model = io::load_model(path);

  const auto exact = solve_direct(gain_model(model));
  std::printf("exact optimum: strategy %zu, V = %.3f\n", exact.best_index + 1, exact.best.mean_gain);

  const auto schedule = cycling_schedule(model.num_states, model.num_decisions, 100);
  const auto episodes = simulate_batch(model, schedule, 30, 7);

  ControllerConfig cfg;
  cfg.num_states = model.num_states;
  cfg.num_decisions = model.num_decisions;
  AdaptiveController controller(cfg);
  for (const auto& ep : episodes) {
    controller.process_episode(ep.observe());
    const auto& s = controller.snapshot();
    if (s.q % 20 == 0) {
      std::printf("q=%3llu  recommends %llu  V_hat=%.3f\n", static_cast<unsigned long long>(s.q),
                  static_cast<unsigned long long>(s.recommended_id + 1), s.recommended_gain);
    }
  }

  const auto r = expected_step_payoffs(model);
  const auto& est = controller.snapshot();
  for (int i = 0; i < model.num_states; ++i) {
    for (int k = 0; k < model.num_decisions; ++k) {
      std::printf("r[%d][%d]: true %.2f  estimated %.2f\n", i, k, r(i, k),
                  est.r_hat[i * model.num_decisions + k]);
    }
  }
  return 0;
}
