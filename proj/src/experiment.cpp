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
#include "sbw/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "sbw/digest.hpp"
#include "sbw/rng.hpp"

namespace sbw {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "sbw 1.0.0";

json MatrixJson(const Matrix<double>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json VectorJson(const Vector<double>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      out.push_back(v(i));
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

json SetupJson(const GameSetup& s) {
  json j = {{"num_nodes", s.num_nodes},
            {"num_users", s.num_users},
            {"block_reward", s.block_reward},
            {"initial_purchase", s.initial_purchase},
            {"cost_law", {{"law", "uniform"}, {"lo", s.cost_law.lo}, {"hi", s.cost_law.hi}}}};
  json caps = json::array();
  for (double c : s.capacities) {
    if (std::isfinite(c)) {
      caps.push_back(c);
    } else {
      caps.push_back("unlimited");
    }
  }
  j["capacities"] = caps;
  if (s.costs) j["costs"] = MatrixJson(*s.costs);
  return j;
}

json SweepJson(const Sweep& sweep) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SurfaceSweep>) {
          return {{"node", s.node}, {"user_a", s.user_a}, {"user_b", s.user_b},
                  {"resolution", s.resolution}};
        } else if constexpr (std::is_same_v<T, ConvergenceSweep>) {
          return {{"node", s.node}, {"perturbations", s.perturbations}};
        } else if constexpr (std::is_same_v<T, RewardSweep>) {
          return {{"r_min", s.r_min}, {"r_max", s.r_max}, {"r_step", s.r_step}};
        } else {
          return {{"r_min", s.r_min}, {"r_max", s.r_max}, {"r_step", s.r_step},
                  {"node_counts", s.node_counts}, {"num_users", s.num_users}};
        }
      },
      sweep);
}

json SpecEcho(const ExperimentSpec& spec) {
  return {{"kind", ToString(spec.kind)},
          {"seed", spec.seed},
          {"base", SetupJson(spec.base)},
          {"sweep", SweepJson(spec.sweep)},
          {"solver", {{"eps_strategy", spec.solver.eps_strategy},
                      {"max_iters", spec.solver.max_iters}}},
          {"eps_dev_fraction", spec.eps_dev_fraction}};
}

ResultTable NewTable(const ExperimentSpec& spec) {
  ResultTable t;
  t.metadata["spec"] = SpecEcho(spec);
  t.metadata["seed"] = spec.seed;
  t.metadata["provenance"] =
      std::string(kVersion) + " spec-sha256:" + Digest::Of(SpecEcho(spec).dump()).Hex();
  return t;
}

template <typename T>
const T& SweepAs(const ExperimentSpec& spec, ExperimentKind expected) {
  if (spec.kind != expected) {
    throw std::invalid_argument("experiment kind is " + std::string(ToString(spec.kind)) +
                                ", expected " + std::string(ToString(expected)));
  }
  const T* sweep = std::get_if<T>(&spec.sweep);
  if (!sweep) throw std::invalid_argument("sweep parameters do not match experiment kind");
  return *sweep;
}

struct SolvedPoint {
  EquilibriumResult result;
  bool verified = false;
};

SolvedPoint SolveAndVerify(const GameConfig& config, const StrategyProfile& initial,
                           const ExperimentSpec& spec) {
  SolvedPoint out;
  out.result = SolveEquilibrium(config, initial, spec.solver);
  out.verified = VerifyEquilibrium(config, out.result.profile,
                                   spec.eps_dev_fraction * config.block_reward);
  return out;
}

// Surface axis: grid points strictly below the residual, then the residual.
std::vector<double> SurfaceAxis(double residual, double step) {
  std::vector<double> axis;
  for (std::int64_t k = 0;; ++k) {
    const double v = static_cast<double>(k) * step;
    if (v >= residual) break;
    axis.push_back(v);
  }
  axis.push_back(residual);
  return axis;
}

}  // namespace

GameConfig MaterializeGame(const GameSetup& setup, std::uint64_t seed) {
  if (setup.num_nodes < 1 || setup.num_users < 1) {
    throw std::invalid_argument("num_nodes and num_users must be positive");
  }
  GameConfig config;
  config.block_reward = setup.block_reward;
  if (setup.capacities.size() == 1) {
    config.capacities = Vector<double>::Constant(setup.num_users, setup.capacities[0]);
  } else if (setup.capacities.size() == static_cast<std::size_t>(setup.num_users)) {
    config.capacities = Eigen::Map<const Vector<double>>(setup.capacities.data(),
                                                         setup.num_users);
  } else {
    throw std::invalid_argument("capacities must have 1 or num_users entries");
  }
  if (setup.costs) {
    config.costs = *setup.costs;
  } else {
    if (!(setup.cost_law.lo > 0.0) || setup.cost_law.hi < setup.cost_law.lo) {
      throw std::invalid_argument("cost law needs 0 < lo <= hi");
    }
    Rng rng(DeriveSeed(seed, "costs"));
    config.costs.resize(setup.num_nodes, setup.num_users);
    for (int n = 0; n < setup.num_nodes; ++n) {
      for (int m = 0; m < setup.num_users; ++m) {
        config.costs(n, m) = rng.Uniform(setup.cost_law.lo, setup.cost_law.hi);
      }
    }
  }
  config.Validate();
  if (config.num_nodes() != setup.num_nodes || config.num_users() != setup.num_users) {
    throw std::invalid_argument("cost matrix shape does not match node/user counts");
  }
  return config;
}

StrategyProfile InitialProfile(const GameSetup& setup) {
  return StrategyProfile::Constant(setup.num_nodes, setup.num_users,
                                   setup.initial_purchase);
}

std::string_view ToString(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSurface: return "surface";
    case ExperimentKind::kConvergence: return "convergence";
    case ExperimentKind::kRewardSweep: return "reward_sweep";
    case ExperimentKind::kScaleGrid: return "scale_grid";
  }
  return "unknown";
}

ExperimentKind ExperimentKindFromString(std::string_view name) {
  if (name == "surface") return ExperimentKind::kSurface;
  if (name == "convergence") return ExperimentKind::kConvergence;
  if (name == "reward_sweep") return ExperimentKind::kRewardSweep;
  if (name == "scale_grid") return ExperimentKind::kScaleGrid;
  throw std::invalid_argument("unknown experiment kind: " + std::string(name));
}

Sweep DefaultSweep(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSurface: return SurfaceSweep{};
    case ExperimentKind::kConvergence: return ConvergenceSweep{};
    case ExperimentKind::kRewardSweep: return RewardSweep{};
    case ExperimentKind::kScaleGrid: return ScaleGridSweep{};
  }
  throw std::invalid_argument("unknown experiment kind");
}

std::vector<double> Axis(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) {
    throw std::invalid_argument("sweep range must be non-empty with positive step");
  }
  std::vector<double> out;
  const double slack = 1e-9 * std::max(1.0, std::abs(step));
  for (std::int64_t k = 0;; ++k) {
    const double v = lo + static_cast<double>(k) * step;
    if (v > hi + slack) break;
    out.push_back(v);
  }
  return out;
}

LinearFit FitLine(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("line fit needs at least two paired points");
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  Matrix<double> design(n, 2);
  Vector<double> target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = x[static_cast<std::size_t>(i)];
    design(i, 1) = 1.0;
    target(i) = y[static_cast<std::size_t>(i)];
  }
  const Vector<double> coef = design.colPivHouseholderQr().solve(target);
  const Vector<double> residual = target - design * coef;
  const double ss_res = residual.squaredNorm();
  const double ss_tot = (target.array() - target.mean()).square().sum();
  LinearFit fit;
  fit.slope = coef(0);
  fit.intercept = coef(1);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ResultTable RunSurface(const ExperimentSpec& spec) {
  const auto& sweep = SweepAs<SurfaceSweep>(spec, ExperimentKind::kSurface);
  const GameConfig config = MaterializeGame(spec.base, spec.seed);
  const StrategyProfile frozen = InitialProfile(spec.base);
  if (!IsFeasible(config, frozen)) throw std::invalid_argument("frozen profile is infeasible");
  CheckNodeIndex(sweep.node, config.num_nodes());
  const Eigen::Index users = config.num_users();
  if (sweep.user_a < 0 || sweep.user_a >= users || sweep.user_b < 0 ||
      sweep.user_b >= users || sweep.user_a == sweep.user_b) {
    throw std::invalid_argument("surface needs two distinct valid user indices");
  }
  if (!(sweep.resolution > 0.0)) throw std::invalid_argument("resolution must be positive");

  const Vector<double> residual = ResidualCapacities(config, frozen, sweep.node);
  const double ra = residual(sweep.user_a);
  const double rb = residual(sweep.user_b);
  if (!std::isfinite(ra) || !std::isfinite(rb)) {
    throw std::invalid_argument("surface axes need finite residual capacities");
  }
  const std::vector<double> axis_a = SurfaceAxis(ra, sweep.resolution);
  const std::vector<double> axis_b = SurfaceAxis(rb, sweep.resolution);

  ResultTable table = NewTable(spec);
  table.columns = {{"s_a", "units"}, {"s_b", "units"}, {"utility", "tokens"},
                   {"is_argmax", "flag"}};
  StrategyProfile point = frozen;
  std::size_t best_row = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (double a : axis_a) {
    for (double b : axis_b) {
      point.purchases(sweep.node, sweep.user_a) = a;
      point.purchases(sweep.node, sweep.user_b) = b;
      const double u = Utility(config, point).utilities(sweep.node);
      if (u > best) {
        best = u;
        best_row = table.rows.size();
      }
      table.AddRow({a, b, u, 0.0});
    }
  }
  table.rows[best_row][3] = 1.0;

  const BestResponse br = BestResponseTo(config, frozen, sweep.node);
  table.metadata["argmax"] = {{"s_a", table.rows[best_row][0]},
                              {"s_b", table.rows[best_row][1]},
                              {"utility", best}};
  table.metadata["residuals"] = {{"s_a", ra}, {"s_b", rb}};
  table.metadata["best_response"] = {{"allocation", VectorJson(br.allocation)},
                                     {"utility", br.achieved_utility}};
  table.metadata["costs"] = MatrixJson(config.costs);
  table.metadata["capacities"] = VectorJson(config.capacities);
  return table;
}

ResultTable RunConvergence(const ExperimentSpec& spec) {
  const auto& sweep = SweepAs<ConvergenceSweep>(spec, ExperimentKind::kConvergence);
  const GameConfig base = MaterializeGame(spec.base, spec.seed);
  CheckNodeIndex(sweep.node, base.num_nodes());
  if (sweep.perturbations.empty()) throw std::invalid_argument("no perturbations given");
  const StrategyProfile initial = InitialProfile(spec.base);

  std::vector<SolvedPoint> solved(sweep.perturbations.size());
  ParallelFor(solved.size(), spec.threads, [&](std::size_t i) {
    const double p = sweep.perturbations[i];
    if (!(p > -1.0)) throw std::invalid_argument("perturbation must exceed -100%");
    GameConfig config = base;
    config.costs.row(sweep.node) *= 1.0 + p;
    solved[i] = SolveAndVerify(config, initial, spec);
  });

  ResultTable table = NewTable(spec);
  table.columns = {{"perturbation", "fraction"}, {"iteration", "sweeps"}, {"node", "index"},
                   {"utility", "tokens"}, {"total", "units"}};
  for (std::size_t i = 0; i < solved.size(); ++i) {
    const auto& trace = solved[i].result.trace;
    for (std::size_t k = 0; k < trace.size(); ++k) {
      for (Eigen::Index n = 0; n < base.num_nodes(); ++n) {
        table.AddRow({sweep.perturbations[i], static_cast<double>(k),
                      static_cast<double>(n), trace[k].utilities(n), trace[k].totals(n)});
      }
    }
  }

  std::size_t baseline = 0;
  for (std::size_t i = 0; i < sweep.perturbations.size(); ++i) {
    if (sweep.perturbations[i] == 0.0) {
      baseline = i;
      break;
    }
  }
  const Vector<double>& base_totals = solved[baseline].result.trace.back().totals;
  const Vector<double>& base_utils = solved[baseline].result.utilities;
  json summary = json::array();
  for (std::size_t i = 0; i < solved.size(); ++i) {
    const auto& r = solved[i].result;
    const Vector<double>& totals = r.trace.back().totals;
    const auto pct = [](double now, double was) {
      return was != 0.0 ? 100.0 * (now - was) / std::abs(was) : 0.0;
    };
    summary.push_back(
        {{"perturbation", sweep.perturbations[i]},
         {"converged", r.converged},
         {"iterations", r.iterations},
         {"verified", solved[i].verified},
         {"utilities", VectorJson(r.utilities)},
         {"totals", VectorJson(totals)},
         {"profile", MatrixJson(r.profile.purchases)},
         {"node_total_change_pct", pct(totals(sweep.node), base_totals(sweep.node))},
         {"node_utility_change_pct", pct(r.utilities(sweep.node), base_utils(sweep.node))}});
  }
  table.metadata["summary"] = summary;
  table.metadata["baseline_index"] = baseline;
  table.metadata["costs"] = MatrixJson(base.costs);
  table.metadata["capacities"] = VectorJson(base.capacities);
  return table;
}

ResultTable RunRewardSweep(const ExperimentSpec& spec) {
  const auto& sweep = SweepAs<RewardSweep>(spec, ExperimentKind::kRewardSweep);
  const std::vector<double> rewards = Axis(sweep.r_min, sweep.r_max, sweep.r_step);
  const GameConfig base = MaterializeGame(spec.base, spec.seed);
  const StrategyProfile initial = InitialProfile(spec.base);

  std::vector<SolvedPoint> solved(rewards.size());
  ParallelFor(rewards.size(), spec.threads, [&](std::size_t i) {
    GameConfig config = base;
    config.block_reward = rewards[i];
    solved[i] = SolveAndVerify(config, initial, spec);
  });

  ResultTable table = NewTable(spec);
  table.columns = {{"block_reward", "tokens"}, {"total_purchased", "units"}};
  for (Eigen::Index n = 0; n < base.num_nodes(); ++n) {
    table.columns.push_back({"node" + std::to_string(n) + "_total", "units"});
  }
  table.columns.push_back({"iterations", "sweeps"});
  table.columns.push_back({"converged", "flag"});
  table.columns.push_back({"verified", "flag"});
  std::vector<double> totals;
  json profiles = json::array();
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    const auto& r = solved[i].result;
    const Vector<double>& node_totals = r.trace.back().totals;
    const double total = CompensatedSum(node_totals);
    totals.push_back(total);
    std::vector<double> row{rewards[i], total};
    for (Eigen::Index n = 0; n < node_totals.size(); ++n) row.push_back(node_totals(n));
    row.push_back(r.iterations);
    row.push_back(r.converged ? 1.0 : 0.0);
    row.push_back(solved[i].verified ? 1.0 : 0.0);
    table.AddRow(std::move(row));
    profiles.push_back(MatrixJson(r.profile.purchases));
  }
  const LinearFit fit = FitLine(rewards, totals);
  table.metadata["linear_fit"] = {{"slope", fit.slope},
                                  {"intercept", fit.intercept},
                                  {"r_squared", fit.r_squared}};
  table.metadata["profiles"] = profiles;
  table.metadata["costs"] = MatrixJson(base.costs);
  table.metadata["capacities"] = VectorJson(base.capacities);
  return table;
}

ResultTable RunScaleGrid(const ExperimentSpec& spec) {
  const auto& sweep = SweepAs<ScaleGridSweep>(spec, ExperimentKind::kScaleGrid);
  const std::vector<double> rewards = Axis(sweep.r_min, sweep.r_max, sweep.r_step);
  if (sweep.node_counts.empty()) throw std::invalid_argument("node_counts is empty");
  if (sweep.num_users < 1) throw std::invalid_argument("num_users must be positive");
  std::vector<int> node_counts = sweep.node_counts;
  std::sort(node_counts.begin(), node_counts.end());
  node_counts.erase(std::unique(node_counts.begin(), node_counts.end()), node_counts.end());
  if (node_counts.front() < 1) throw std::invalid_argument("node counts must be positive");

  // One draw for the largest population; smaller populations use its first
  // rows, so the node axis compares nested games.
  GameSetup setup = spec.base;
  setup.num_nodes = node_counts.back();
  setup.num_users = sweep.num_users;
  if (setup.capacities.size() != 1) {
    throw std::invalid_argument("scale grid needs a single broadcast capacity");
  }
  if (setup.costs) throw std::invalid_argument("scale grid draws its own cost matrix");
  const GameConfig largest = MaterializeGame(setup, spec.seed);

  struct Cell {
    double reward;
    int nodes;
    std::optional<SolvedPoint> solved;
    std::string error;
  };
  std::vector<Cell> cells;
  for (double r : rewards) {
    for (int n : node_counts) cells.push_back({r, n, std::nullopt, {}});
  }
  ParallelFor(cells.size(), spec.threads, [&](std::size_t i) {
    Cell& cell = cells[i];
    GameConfig config;
    config.block_reward = cell.reward;
    config.capacities = largest.capacities;
    config.costs = largest.costs.topRows(cell.nodes);
    const StrategyProfile initial =
        StrategyProfile::Constant(cell.nodes, sweep.num_users, setup.initial_purchase);
    try {
      cell.solved = SolveAndVerify(config, initial, spec);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  ResultTable table = NewTable(spec);
  table.columns = {{"block_reward", "tokens"}, {"num_nodes", "count"},
                   {"total_purchased", "units"}, {"iterations", "sweeps"},
                   {"converged", "flag"}, {"verified", "flag"}, {"failed", "flag"}};
  json failures = json::array();
  for (const Cell& cell : cells) {
    if (!cell.solved) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      table.AddRow({cell.reward, static_cast<double>(cell.nodes), nan, nan, 0.0, 0.0, 1.0});
      failures.push_back({{"block_reward", cell.reward}, {"num_nodes", cell.nodes},
                          {"error", cell.error}});
      continue;
    }
    const auto& r = cell.solved->result;
    table.AddRow({cell.reward, static_cast<double>(cell.nodes),
                  CompensatedSum(r.trace.back().totals), static_cast<double>(r.iterations),
                  r.converged ? 1.0 : 0.0, cell.solved->verified ? 1.0 : 0.0, 0.0});
  }
  table.metadata["failures"] = failures;
  table.metadata["costs"] = MatrixJson(largest.costs);
  table.metadata["capacities"] = VectorJson(largest.capacities);
  return table;
}

ResultTable RunExperiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::kSurface: return RunSurface(spec);
    case ExperimentKind::kConvergence: return RunConvergence(spec);
    case ExperimentKind::kRewardSweep: return RunRewardSweep(spec);
    case ExperimentKind::kScaleGrid: return RunScaleGrid(spec);
  }
  throw std::invalid_argument("unknown experiment kind");
}

}  // namespace sbw
