// Copyright 2026 The SBW Authors
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
// JSON run configuration shared by the CLI commands. Unknown keys are
// rejected; every error carries the JSON pointer and source line of the
// offending value.

#ifndef SBW_RUN_CONFIG_HPP_
#define SBW_RUN_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sbw/chain.hpp"
#include "sbw/experiment.hpp"

namespace sbw {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, int line, const std::string& message);

  const std::string& pointer() const { return pointer_; }
  int line() const { return line_; }  // 0 when unknown

 private:
  std::string pointer_;
  int line_;
};

struct SolverSettings {
  double eps_strategy = 0.0;       // <= 0: 1e-6 of the largest capacity
  double eps_dev_fraction = 1e-4;  // deviation tolerance, fraction of R
  int max_iters = 1000;
};

struct ChainSettings {
  double initial_balance = 1e6;  // per node, tokens
  double contracts_price_share = 1.0;
  chain::ContributionWindow window = chain::ContributionWindow::kEpoch;
  std::uint64_t rounds = 1000;
};

struct ExperimentSettings {
  ExperimentKind kind = ExperimentKind::kSurface;
  Sweep sweep;
};

struct RunConfig {
  GameSetup game;
  SolverSettings solver;
  std::optional<ChainSettings> chain;
  std::optional<ExperimentSettings> experiment;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  SolverOptions solver_options() const {
    return {solver.eps_strategy, solver.max_iters};
  }
  ExperimentSpec experiment_spec(int threads) const;
};

// Maps each JSON pointer in a document to the 1-based line where its value
// starts. The document must already be valid JSON.
std::map<std::string, int> ValueLines(std::string_view text);

RunConfig ParseRunConfig(std::string_view text);
RunConfig LoadRunConfig(const std::string& path);

}  // namespace sbw

#endif  // SBW_RUN_CONFIG_HPP_
