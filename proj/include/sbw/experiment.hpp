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
// Desk-scale experiments over the purchasing game: single-node utility
// surface, convergence under cost perturbation, block-reward sweep and the
// reward x node-count grid. Every run is a pure function of its spec.

#ifndef SBW_EXPERIMENT_HPP_
#define SBW_EXPERIMENT_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sbw/result_table.hpp"
#include "sbw/solver.hpp"

namespace sbw {

// Unit costs drawn uniformly from [lo, hi].
struct CostLaw {
  double lo = 1.0;
  double hi = 2.0;
};

// A game before its random parts are drawn.
struct GameSetup {
  int num_nodes = 4;
  int num_users = 6;
  double block_reward = 1000.0;
  std::vector<double> capacities{150.0};  // one value broadcasts to all users
  std::optional<Matrix<double>> costs;    // explicit matrix wins over the law
  CostLaw cost_law;
  double initial_purchase = 2.0;          // every s[n,m] at the start
};

// Draws the cost matrix from the "costs" sub-stream of seed when no explicit
// matrix is given. The draw fills row-major, so a setup with fewer nodes or
// users sees a prefix of a larger draw only when the user count matches.
GameConfig MaterializeGame(const GameSetup& setup, std::uint64_t seed);
StrategyProfile InitialProfile(const GameSetup& setup);

enum class ExperimentKind { kSurface, kConvergence, kRewardSweep, kScaleGrid };

std::string_view ToString(ExperimentKind kind);
ExperimentKind ExperimentKindFromString(std::string_view name);

struct SurfaceSweep {
  Eigen::Index node = 0;
  Eigen::Index user_a = 0;
  Eigen::Index user_b = 1;
  double resolution = 1.0;  // grid step per axis
};

struct ConvergenceSweep {
  Eigen::Index node = 0;
  std::vector<double> perturbations{0.0, 0.1, 0.2};  // relative cost increase
};

struct RewardSweep {
  double r_min = 700.0;
  double r_max = 1400.0;
  double r_step = 100.0;
};

struct ScaleGridSweep {
  double r_min = 700.0;
  double r_max = 1700.0;
  double r_step = 100.0;
  std::vector<int> node_counts{10, 25, 50, 75};
  int num_users = 100;
};

using Sweep = std::variant<SurfaceSweep, ConvergenceSweep, RewardSweep, ScaleGridSweep>;

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kSurface;
  GameSetup base;
  std::uint64_t seed = 0;
  Sweep sweep;
  SolverOptions solver;
  double eps_dev_fraction = 1e-4;  // deviation tolerance as a fraction of R
  int threads = 1;                 // 0 = hardware concurrency
};

// Default sweep for a kind.
Sweep DefaultSweep(ExperimentKind kind);

// Inclusive arithmetic range lo, lo + step, ... <= hi (+ tiny slack).
std::vector<double> Axis(double lo, double hi, double step);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit FitLine(const std::vector<double>& x, const std::vector<double>& y);

ResultTable RunSurface(const ExperimentSpec& spec);
ResultTable RunConvergence(const ExperimentSpec& spec);
ResultTable RunRewardSweep(const ExperimentSpec& spec);
ResultTable RunScaleGrid(const ExperimentSpec& spec);
ResultTable RunExperiment(const ExperimentSpec& spec);

// Runs body(i) for i in [0, count) on up to `threads` workers.
void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t)>& body);

}  // namespace sbw

#endif  // SBW_EXPERIMENT_HPP_
