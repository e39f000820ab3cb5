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
#ifndef SBW_CLI_HPP_
#define SBW_CLI_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace sbw::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNotConverged = 2;

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;     // overrides the config seed
  std::optional<std::string> output_dir; // overrides the config output_dir
  int threads = 0;                       // 0: SBW_THREADS or all cores
};

// Writes equilibrium_<seed>.json.
int CmdSolve(const CommandOptions& options, std::ostream& out, std::ostream& err);
// Writes ledger_<seed>.json and rewards_<seed>.csv.
int CmdChain(const CommandOptions& options, std::ostream& out, std::ostream& err);
// Writes <kind>_<seed>.csv and <kind>_<seed>.json.
int CmdExperiment(const CommandOptions& options, std::ostream& out, std::ostream& err);

// Worker cap from SBW_THREADS, else hardware concurrency.
int ThreadsFromEnvironment();

int Main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sbw::cli

#endif  // SBW_CLI_HPP_
