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

// Best responses and iterated best-response dynamics for the purchasing game.
//
// A node's reward depends on its purchases only through the row total x, so
// for a given x the cheapest way to buy it is to fill users in ascending
// cost order. That makes the spend c(x) piecewise linear and convex, and the
// node maximizes the scalar concave function
//
//   f(x) = R x / (T + x) - c(x)
//
// piece by piece. On a piece with unit cost C the stationary point is
// x* = sqrt(R T / C) - T.

#ifndef SBW_SOLVER_HPP_
#define SBW_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sbw/game.hpp"

namespace sbw {

template <typename Scalar>
struct BasicBestResponse {
  Vector<Scalar> allocation;  // b_n, one entry per user
  Scalar achieved_utility{0};
};

template <typename Scalar>
struct TraceEntry {
  Vector<Scalar> utilities;
  Vector<Scalar> totals;
};

template <typename Scalar>
struct BasicEquilibriumResult {
  BasicStrategyProfile<Scalar> profile;
  Vector<Scalar> utilities;
  int iterations = 0;  // completed full sweeps
  bool converged = false;
  // Entry 0 is the initial profile, entry k the state after sweep k.
  std::vector<TraceEntry<Scalar>> trace;
};

using BestResponse = BasicBestResponse<double>;
using EquilibriumResult = BasicEquilibriumResult<double>;

struct SolverOptions {
  double eps_strategy = 0.0;  // <= 0 selects DefaultStrategyTolerance
  int max_iters = 1000;
};

// Headroom I_m - sum_{i != n} s[i,m], clamped at zero. Unlimited users stay
// unlimited.
template <typename Scalar>
Vector<Scalar> ResidualCapacities(const BasicGameConfig<Scalar>& config,
                                  const BasicStrategyProfile<Scalar>& profile,
                                  Eigen::Index node) {
  CheckDimensions(config, profile);
  CheckNodeIndex(node, config.num_nodes());
  Vector<Scalar> residual(config.num_users());
  for (Eigen::Index m = 0; m < config.num_users(); ++m) {
    const Scalar cap = config.capacities(m);
    if (std::isinf(double(cap))) {
      residual(m) = cap;
      continue;
    }
    Scalar others(0);
    Scalar carry(0);
    for (Eigen::Index i = 0; i < config.num_nodes(); ++i) {
      if (i == node) continue;
      // Kahan; all terms are non-negative.
      const Scalar y = profile.purchases(i, m) - carry;
      const Scalar t = others + y;
      carry = (t - others) - y;
      others = t;
    }
    residual(m) = std::max(Scalar(0), cap - others);
  }
  return residual;
}

// Total bought by everyone except `node` (T).
template <typename Scalar>
Scalar OpponentTotal(const BasicStrategyProfile<Scalar>& profile,
                     Eigen::Index node) {
  const Vector<Scalar> totals = CompensatedRowSums(profile.purchases);
  Vector<Scalar> others = totals;
  others(node) = Scalar(0);
  return CompensatedSum(others);
}

template <typename Scalar>
BasicBestResponse<Scalar> BestResponseTo(const BasicGameConfig<Scalar>& config,
                                         const BasicStrategyProfile<Scalar>& profile,
                                         Eigen::Index node) {
  CheckDimensions(config, profile);
  CheckNodeIndex(node, config.num_nodes());
  const Scalar opponents = OpponentTotal(profile, node);
  if (!(opponents > Scalar(0))) {
    throw std::domain_error(
        "undefined best response: reward share is constant in own total");
  }
  const Scalar reward = config.block_reward;
  const Eigen::Index users = config.num_users();
  const Vector<Scalar> residual = ResidualCapacities(config, profile, node);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(users));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return config.costs(node, a) < config.costs(node, b);
                   });

  // Walk the cost pieces in ascending order. f is concave, so the first
  // piece whose stationary point does not lie beyond it holds the maximum.
  Scalar total(0);
  Scalar piece_start(0);
  bool settled = false;
  for (Eigen::Index k : order) {
    const Scalar width = residual(k);
    if (!(width > Scalar(0))) continue;
    const Scalar unit_cost = config.costs(node, k);
    const Scalar stationary =
        std::sqrt(reward * opponents / unit_cost) - opponents;
    if (stationary <= piece_start) {
      total = piece_start;
      settled = true;
      break;
    }
    const Scalar piece_end = piece_start + width;
    if (stationary <= piece_end) {
      total = stationary;
      settled = true;
      break;
    }
    piece_start = piece_end;
  }
  if (!settled) total = piece_start;  // every user exhausted

  BasicBestResponse<Scalar> out;
  out.allocation = Vector<Scalar>::Zero(users);
  Scalar remaining = total;
  Scalar spend(0);
  for (Eigen::Index k : order) {
    if (!(remaining > Scalar(0))) break;
    const Scalar take = std::min(remaining, residual(k));
    if (!(take > Scalar(0))) continue;
    out.allocation(k) = take;
    spend += config.costs(node, k) * take;
    remaining -= take;
  }
  out.achieved_utility = reward * total / (opponents + total) - spend;
  return out;
}

// Exhaustive grid search over the node's own allocation, used only as an
// oracle. Each user axis is {0, step, 2 step, ...} plus the residual itself.
template <typename Scalar>
BasicBestResponse<Scalar> BruteForceBestResponse(
    const BasicGameConfig<Scalar>& config,
    const BasicStrategyProfile<Scalar>& profile, Eigen::Index node,
    Scalar step, std::int64_t max_grid_points = 10'000'000) {
  CheckDimensions(config, profile);
  CheckNodeIndex(node, config.num_nodes());
  if (!(step > Scalar(0))) throw std::invalid_argument("step must be positive");
  const Eigen::Index users = config.num_users();
  if (users > 3) {
    throw std::invalid_argument("brute force limited to at most 3 users");
  }
  const Vector<Scalar> residual = ResidualCapacities(config, profile, node);
  std::vector<std::vector<Scalar>> axes(static_cast<std::size_t>(users));
  double points = 1.0;
  for (Eigen::Index m = 0; m < users; ++m) {
    if (!std::isfinite(double(residual(m)))) {
      throw std::invalid_argument("brute force needs finite residuals");
    }
    const double count = std::floor(double(residual(m) / step)) + 2.0;
    points *= count;
    if (points > double(max_grid_points)) {
      throw std::invalid_argument("brute force grid too large");
    }
    auto& axis = axes[static_cast<std::size_t>(m)];
    for (std::int64_t k = 0;; ++k) {
      const Scalar v = Scalar(k) * step;
      if (v >= residual(m)) break;
      axis.push_back(v);
    }
    axis.push_back(residual(m));
  }

  Scalar opponents(0);
  for (Eigen::Index i = 0; i < config.num_nodes(); ++i) {
    if (i != node) opponents += profile.purchases.row(i).sum();
  }
  const Scalar reward = config.block_reward;
  auto evaluate = [&](const Vector<Scalar>& a) {
    const Scalar own = a.sum();
    const Scalar grand = own + opponents;
    const Scalar share = grand > Scalar(0) ? own / grand : Scalar(0);
    return share * reward - config.costs.row(node).dot(a.transpose());
  };

  BasicBestResponse<Scalar> best;
  best.allocation = Vector<Scalar>::Zero(users);
  best.achieved_utility = evaluate(best.allocation);
  Vector<Scalar> point = Vector<Scalar>::Zero(users);
  std::vector<std::size_t> index(static_cast<std::size_t>(users), 0);
  while (true) {
    for (Eigen::Index m = 0; m < users; ++m) {
      point(m) = axes[static_cast<std::size_t>(m)][index[static_cast<std::size_t>(m)]];
    }
    const Scalar u = evaluate(point);
    if (u > best.achieved_utility) {
      best.achieved_utility = u;
      best.allocation = point;
    }
    Eigen::Index m = 0;
    for (; m < users; ++m) {
      auto& i = index[static_cast<std::size_t>(m)];
      if (++i < axes[static_cast<std::size_t>(m)].size()) break;
      i = 0;
    }
    if (m == users) break;
  }
  return best;
}

// 1e-6 of the largest finite capacity. Without any finite capacity, 1e-6 of
// the largest purchase a node could rationally make (R / min cost).
template <typename Scalar>
Scalar DefaultStrategyTolerance(const BasicGameConfig<Scalar>& config) {
  Scalar largest(0);
  for (Eigen::Index m = 0; m < config.num_users(); ++m) {
    const Scalar cap = config.capacities(m);
    if (std::isfinite(double(cap))) largest = std::max(largest, cap);
  }
  if (!(largest > Scalar(0))) {
    largest = config.block_reward / config.costs.minCoeff();
  }
  return Scalar(1e-6) * largest;
}

// One Gauss-Seidel pass of best responses in node order. Returns the largest
// absolute change of any entry.
template <typename Scalar>
Scalar BestResponseSweep(const BasicGameConfig<Scalar>& config,
                         BasicStrategyProfile<Scalar>& profile) {
  Scalar max_change(0);
  for (Eigen::Index n = 0; n < config.num_nodes(); ++n) {
    const BasicBestResponse<Scalar> br = BestResponseTo(config, profile, n);
    const Scalar change =
        (br.allocation.transpose() - profile.purchases.row(n)).cwiseAbs().maxCoeff();
    max_change = std::max(max_change, change);
    profile.purchases.row(n) = br.allocation.transpose();
  }
  return max_change;
}

template <typename Scalar>
BasicEquilibriumResult<Scalar> SolveEquilibrium(
    const BasicGameConfig<Scalar>& config,
    const BasicStrategyProfile<Scalar>& initial,
    const SolverOptions& options = {}) {
  config.Validate();
  CheckDimensions(config, initial);
  if (!IsFeasible(config, initial)) {
    throw std::invalid_argument("initial profile is infeasible");
  }
  if (options.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  const Scalar tolerance = options.eps_strategy > 0
                               ? Scalar(options.eps_strategy)
                               : DefaultStrategyTolerance(config);

  BasicEquilibriumResult<Scalar> result;
  result.profile = initial;
  auto record = [&]() {
    const BasicUtilityReport<Scalar> report = Utility(config, result.profile);
    result.trace.push_back({report.utilities, report.totals});
    result.utilities = report.utilities;
  };
  record();
  while (result.iterations < options.max_iters) {
    const Scalar change = BestResponseSweep(config, result.profile);
    ++result.iterations;
    record();
    if (change < tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

// True iff no node gains more than eps_dev by deviating alone. A node facing
// an empty opponent profile has no attainable best response (any smaller
// positive purchase is strictly better), so such a profile is never an
// equilibrium.
template <typename Scalar>
bool VerifyEquilibrium(const BasicGameConfig<Scalar>& config,
                       const BasicStrategyProfile<Scalar>& profile,
                       Scalar eps_dev) {
  CheckDimensions(config, profile);
  const Vector<Scalar> current = Utility(config, profile).utilities;
  for (Eigen::Index n = 0; n < config.num_nodes(); ++n) {
    if (!(OpponentTotal(profile, n) > Scalar(0))) return false;
    const BasicBestResponse<Scalar> br = BestResponseTo(config, profile, n);
    if (br.achieved_utility > current(n) + eps_dev) return false;
  }
  return true;
}

}  // namespace sbw

#endif  // SBW_SOLVER_HPP_
