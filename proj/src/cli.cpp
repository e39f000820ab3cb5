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
#include "sbw/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "sbw/chain.hpp"
#include "sbw/experiment.hpp"
#include "sbw/rng.hpp"
#include "sbw/run_config.hpp"

namespace sbw::cli {

using nlohmann::json;

namespace {

// Failure inside the chain workflow, tagged with the step that raised it.
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& step, const std::string& what)
      : std::runtime_error("chain step " + step + ": " + what) {}
};

template <typename F>
auto Step(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw StepError(name, e.what());
  }
}

json VectorJson(const Vector<double>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      out.push_back(v(i));
    } else {
      out.push_back("unlimited");
    }
  }
  return out;
}

json MatrixJson(const Matrix<double>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(VectorJson(m.row(r).transpose()));
  return rows;
}

void WriteFile(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << contents;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

struct Loaded {
  RunConfig config;
  std::filesystem::path out_dir;
};

Loaded Load(const CommandOptions& options) {
  Loaded l{LoadRunConfig(options.config_path), {}};
  if (options.seed) l.config.seed = *options.seed;
  if (options.output_dir) l.config.output_dir = *options.output_dir;
  l.out_dir = l.config.output_dir;
  return l;
}

int ReportConfigError(const CommandOptions& options, const ConfigError& e,
                      std::ostream& err) {
  err << options.config_path;
  if (e.line() > 0) err << ":" << e.line();
  err << ": ";
  if (!e.pointer().empty()) err << e.pointer() << ": ";
  err << e.what() << "\n";
  return kExitUsage;
}

template <typename Body>
int Guard(const CommandOptions& options, std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    return ReportConfigError(options, e, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

json EquilibriumJson(const RunConfig& rc, const GameConfig& game,
                     const EquilibriumResult& result, bool verified) {
  json trace = json::array();
  for (const auto& t : result.trace) {
    trace.push_back({{"utilities", VectorJson(t.utilities)}, {"totals", VectorJson(t.totals)}});
  }
  return {{"format", "sbw-equilibrium/1"},
          {"seed", rc.seed},
          {"block_reward", game.block_reward},
          {"capacities", VectorJson(game.capacities)},
          {"costs", MatrixJson(game.costs)},
          {"profile", MatrixJson(result.profile.purchases)},
          {"utilities", VectorJson(result.utilities)},
          {"totals", VectorJson(result.trace.back().totals)},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"verified", verified},
          {"eps_dev", rc.solver.eps_dev_fraction * game.block_reward},
          {"trace", trace}};
}

}  // namespace

int ThreadsFromEnvironment() {
  if (const char* env = std::getenv("SBW_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int CmdSolve(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return Guard(options, err, [&] {
    const Loaded l = Load(options);
    const GameConfig game = MaterializeGame(l.config.game, l.config.seed);
    const EquilibriumResult result =
        SolveEquilibrium(game, InitialProfile(l.config.game), l.config.solver_options());
    const bool verified = VerifyEquilibrium(
        game, result.profile, l.config.solver.eps_dev_fraction * game.block_reward);
    const auto path = l.out_dir / ("equilibrium_" + std::to_string(l.config.seed) + ".json");
    WriteFile(path, EquilibriumJson(l.config, game, result, verified).dump(1) + "\n");
    out << (result.converged ? "converged" : "not converged") << " after "
        << result.iterations << " sweeps; wrote " << path.string() << "\n";
    return result.converged ? kExitOk : kExitNotConverged;
  });
}

int CmdChain(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return Guard(options, err, [&] {
    const Loaded l = Load(options);
    if (!l.config.chain) throw ConfigError("/chain", 0, "config has no chain section");
    const ChainSettings& cs = *l.config.chain;
    const GameConfig game = MaterializeGame(l.config.game, l.config.seed);
    const EquilibriumResult result =
        SolveEquilibrium(game, InitialProfile(l.config.game), l.config.solver_options());
    if (!result.converged) {
      err << "equilibrium did not converge after " << result.iterations << " sweeps\n";
      return kExitNotConverged;
    }

    std::map<std::string, double> genesis;
    for (Eigen::Index n = 0; n < game.num_nodes(); ++n) {
      genesis[chain::NodeId(n)] = cs.initial_balance;
    }
    chain::Ledger ledger = Step("genesis", [&] {
      return chain::Ledger(game.block_reward, genesis, cs.window);
    });
    Step("create_contract", [&] {
      chain::ProvisionContracts(ledger, game, cs.contracts_price_share);
      return 0;
    });
    const chain::EpochReport report = Step("run_epoch", [&] {
      return chain::RunEpoch(ledger, game, result.profile, cs.contracts_price_share,
                             cs.rounds, DeriveSeed(l.config.seed, "election"));
    });
    if (!ledger.VerifyChain()) throw StepError("seal_block", "hash chain verification failed");

    const Vector<double> probability = LeaderProbability(result.trace.back().totals);
    std::string csv =
        "node,leader_probability [fraction],rewards [tokens],reward_share [fraction],"
        "spend [tokens]\r\n";
    for (Eigen::Index n = 0; n < game.num_nodes(); ++n) {
      const std::string id = chain::NodeId(n);
      const double reward = report.rewards.at(id).ToDouble();
      const double share =
          cs.rounds > 0 ? reward / (game.block_reward * static_cast<double>(cs.rounds)) : 0.0;
      csv += CsvQuote(id) + "," + FormatNumber(probability(n)) + "," + FormatNumber(reward) +
             "," + FormatNumber(share) + "," + FormatNumber(report.spend.at(id).ToDouble()) +
             "\r\n";
    }
    const std::string tag = std::to_string(l.config.seed);
    WriteFile(l.out_dir / ("ledger_" + tag + ".json"), chain::ExportJson(ledger.state()));
    WriteFile(l.out_dir / ("rewards_" + tag + ".csv"), csv);
    out << "sealed " << ledger.state().blocks.size() - 1 << " blocks; wrote "
        << (l.out_dir / ("ledger_" + tag + ".json")).string() << "\n";
    return kExitOk;
  });
}

int CmdExperiment(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return Guard(options, err, [&] {
    const Loaded l = Load(options);
    if (!l.config.experiment) {
      throw ConfigError("/experiment", 0, "config has no experiment section");
    }
    const int threads = options.threads > 0 ? options.threads : ThreadsFromEnvironment();
    const ExperimentSpec spec = l.config.experiment_spec(threads);
    const ResultTable table = RunExperiment(spec);
    const std::string stem =
        std::string(ToString(spec.kind)) + "_" + std::to_string(l.config.seed);
    WriteFile(l.out_dir / (stem + ".csv"), table.ToCsv());
    WriteFile(l.out_dir / (stem + ".json"), table.ToJson());
    out << "wrote " << table.rows.size() << " rows to "
        << (l.out_dir / (stem + ".csv")).string() << "\n";

    bool all_converged = true;
    for (std::string_view flag : {"converged"}) {
      for (const Column& c : table.columns) {
        if (c.name != flag) continue;
        for (double v : table.ColumnValues(flag)) all_converged = all_converged && v == 1.0;
      }
    }
    if (table.metadata.contains("summary")) {
      for (const auto& s : table.metadata["summary"]) {
        all_converged = all_converged && s["converged"].get<bool>();
      }
    }
    return all_converged ? kExitOk : kExitNotConverged;
  });
}

int Main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contribution-weighted proof-of-stake game solver and ledger simulator"};
  app.require_subcommand(1);
  CommandOptions options;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config_path, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "override the output directory");
  };
  CLI::App* solve = app.add_subcommand("solve", "compute a Nash equilibrium");
  CLI::App* chain = app.add_subcommand("chain", "simulate the ledger at equilibrium");
  CLI::App* experiment = app.add_subcommand("experiment", "run a configured experiment");
  for (CLI::App* sub : {solve, chain, experiment}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitUsage;
  }
  CLI::App* used = app.get_subcommands().front();
  if (used->count("--seed")) options.seed = seed;
  if (used->count("--out")) options.output_dir = out_dir;
  if (used == solve) return CmdSolve(options, out, err);
  if (used == chain) return CmdChain(options, out, err);
  return CmdExperiment(options, out, err);
}

}  // namespace sbw::cli
