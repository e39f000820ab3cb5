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

// Information-purchasing game between mining nodes.
//
// N nodes buy information units from M users. A node's stake is the total
// amount it bought, it leads a block with probability proportional to that
// stake, and its utility is its expected share of the block reward minus
// what it paid:
//
//   U_n = (x_n / X) * R - sum_m C[n,m] * s[n,m],   x_n = sum_m s[n,m],
//                                                  X   = sum_n x_n.
//
// Everything here is a pure function of its arguments. Types are templated
// on the scalar so the finite-difference oracles in the tests can run in
// long double.

#ifndef SBW_GAME_HPP_
#define SBW_GAME_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace sbw {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Neumaier-compensated sum. Keeps the 1e-9 relative invariants intact for
// profiles with thousands of entries of very different magnitude.
template <typename Derived>
typename Derived::Scalar CompensatedSum(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Scalar sum(0);
  Scalar carry(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const Scalar x = v.derived().coeff(i);
    const Scalar t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

template <typename Derived>
Vector<typename Derived::Scalar> CompensatedRowSums(
    const Eigen::MatrixBase<Derived>& m) {
  Vector<typename Derived::Scalar> out(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) out(r) = CompensatedSum(m.row(r));
  return out;
}

template <typename Derived>
Vector<typename Derived::Scalar> CompensatedColSums(
    const Eigen::MatrixBase<Derived>& m) {
  Vector<typename Derived::Scalar> out(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) out(c) = CompensatedSum(m.col(c));
  return out;
}

// A full game instance. Capacities may be +infinity (unlimited supply).
template <typename Scalar>
struct BasicGameConfig {
  Scalar block_reward = Scalar(0);
  Vector<Scalar> capacities;  // I_m, one per user
  Matrix<Scalar> costs;       // C[n,m], nodes x users

  Eigen::Index num_nodes() const { return costs.rows(); }
  Eigen::Index num_users() const { return costs.cols(); }

  // Throws std::invalid_argument naming the first violated invariant.
  void Validate() const {
    if (costs.rows() < 1 || costs.cols() < 1) {
      throw std::invalid_argument("game needs at least one node and one user");
    }
    if (!(block_reward > Scalar(0)) || !std::isfinite(double(block_reward))) {
      throw std::invalid_argument("block_reward must be positive and finite");
    }
    if (capacities.size() != costs.cols()) {
      throw std::invalid_argument("capacities length " +
                                  std::to_string(capacities.size()) +
                                  " does not match user count " +
                                  std::to_string(costs.cols()));
    }
    for (Eigen::Index m = 0; m < capacities.size(); ++m) {
      if (!(capacities(m) >= Scalar(0))) {
        throw std::invalid_argument("capacity of user " + std::to_string(m) +
                                    " must be non-negative");
      }
    }
    for (Eigen::Index n = 0; n < costs.rows(); ++n) {
      for (Eigen::Index m = 0; m < costs.cols(); ++m) {
        if (!(costs(n, m) > Scalar(0)) || !std::isfinite(double(costs(n, m)))) {
          throw std::invalid_argument("cost[" + std::to_string(n) + "][" +
                                      std::to_string(m) +
                                      "] must be positive and finite");
        }
      }
    }
  }

  template <typename Other>
  BasicGameConfig<Other> cast() const {
    return {Other(block_reward), capacities.template cast<Other>(),
            costs.template cast<Other>()};
  }
};

// Joint purchase matrix s[n,m].
template <typename Scalar>
struct BasicStrategyProfile {
  Matrix<Scalar> purchases;

  static BasicStrategyProfile Zero(Eigen::Index nodes, Eigen::Index users) {
    return {Matrix<Scalar>::Zero(nodes, users)};
  }
  static BasicStrategyProfile Constant(Eigen::Index nodes, Eigen::Index users,
                                       Scalar value) {
    return {Matrix<Scalar>::Constant(nodes, users, value)};
  }

  Eigen::Index num_nodes() const { return purchases.rows(); }
  Eigen::Index num_users() const { return purchases.cols(); }

  template <typename Other>
  BasicStrategyProfile<Other> cast() const {
    return {purchases.template cast<Other>()};
  }
};

template <typename Scalar>
struct BasicUtilityReport {
  Vector<Scalar> utilities;  // U_n
  Vector<Scalar> totals;     // x_n
  Scalar grand_total{0};     // X
};

using GameConfig = BasicGameConfig<double>;
using StrategyProfile = BasicStrategyProfile<double>;
using UtilityReport = BasicUtilityReport<double>;

template <typename Scalar>
void CheckDimensions(const BasicGameConfig<Scalar>& config,
                     const BasicStrategyProfile<Scalar>& profile) {
  if (profile.num_nodes() != config.num_nodes() ||
      profile.num_users() != config.num_users()) {
    throw std::invalid_argument(
        "profile is " + std::to_string(profile.num_nodes()) + "x" +
        std::to_string(profile.num_users()) + " but game is " +
        std::to_string(config.num_nodes()) + "x" +
        std::to_string(config.num_users()));
  }
}

inline void CheckNodeIndex(Eigen::Index node, Eigen::Index num_nodes) {
  if (node < 0 || node >= num_nodes) {
    throw std::out_of_range("node index " + std::to_string(node) +
                            " out of range");
  }
}

// Non-negativity plus the shared per-user supply limit sum_n s[n,m] <= I_m.
// `slack` absorbs round-off from solvers filling a user exactly.
template <typename Scalar>
bool IsFeasible(const BasicGameConfig<Scalar>& config,
                const BasicStrategyProfile<Scalar>& profile,
                Scalar slack = Scalar(1e-9)) {
  if (profile.num_nodes() != config.num_nodes() ||
      profile.num_users() != config.num_users()) {
    return false;
  }
  if (!profile.purchases.allFinite() || (profile.purchases.array() < 0).any()) {
    return false;
  }
  const Vector<Scalar> used = CompensatedColSums(profile.purchases);
  for (Eigen::Index m = 0; m < used.size(); ++m) {
    const Scalar cap = config.capacities(m);
    if (std::isinf(double(cap))) continue;
    if (used(m) > cap + slack * std::max(Scalar(1), cap)) return false;
  }
  return true;
}

// S_n: a node's information contribution.
template <typename Scalar>
Scalar ContributionOf(const BasicStrategyProfile<Scalar>& profile,
                      Eigen::Index node) {
  CheckNodeIndex(node, profile.num_nodes());
  return CompensatedSum(profile.purchases.row(node));
}

// Pr_n = S_n / sum_i S_i.
template <typename Derived>
Vector<typename Derived::Scalar> LeaderProbability(
    const Eigen::MatrixBase<Derived>& contributions) {
  using Scalar = typename Derived::Scalar;
  if ((contributions.array() < Scalar(0)).any() ||
      !contributions.allFinite()) {
    throw std::invalid_argument("contributions must be finite and non-negative");
  }
  const Scalar total = CompensatedSum(contributions);
  if (!(total > Scalar(0))) {
    throw std::domain_error("degenerate stake vector");
  }
  return contributions / total;
}

template <typename Scalar>
BasicUtilityReport<Scalar> Utility(const BasicGameConfig<Scalar>& config,
                                   const BasicStrategyProfile<Scalar>& profile) {
  CheckDimensions(config, profile);
  BasicUtilityReport<Scalar> report;
  report.totals = CompensatedRowSums(profile.purchases);
  report.grand_total = CompensatedSum(report.totals);
  const Eigen::Index n_nodes = config.num_nodes();
  report.utilities = Vector<Scalar>::Zero(n_nodes);
  // 0/0 at the empty profile: nobody plays, nobody earns.
  if (report.grand_total == Scalar(0)) return report;
  for (Eigen::Index n = 0; n < n_nodes; ++n) {
    const Scalar share = report.totals(n) / report.grand_total;
    const Scalar spend = CompensatedSum(
        config.costs.row(n).cwiseProduct(profile.purchases.row(n)));
    report.utilities(n) = share * config.block_reward - spend;
  }
  return report;
}

// dU_n / ds[n,m] = R (X - x_n) / X^2 - C[n,m].
template <typename Scalar>
Vector<Scalar> UtilityGradient(const BasicGameConfig<Scalar>& config,
                               const BasicStrategyProfile<Scalar>& profile,
                               Eigen::Index node) {
  CheckDimensions(config, profile);
  CheckNodeIndex(node, config.num_nodes());
  const Vector<Scalar> totals = CompensatedRowSums(profile.purchases);
  const Scalar grand = CompensatedSum(totals);
  if (!(grand > Scalar(0))) {
    throw std::domain_error("gradient undefined at zero profile");
  }
  const Scalar others = grand - totals(node);
  const Scalar reward_slope = config.block_reward * others / (grand * grand);
  return (-config.costs.row(node).transpose()).array() + reward_slope;
}

// d2U_n / ds[n,m]^2 = -2 R T / X^3 with T = X - x_n. Strictly negative
// whenever defined; the cost term is linear and drops out, so the value is
// the same for every user.
template <typename Scalar>
Scalar UtilitySecondDerivative(const BasicGameConfig<Scalar>& config,
                               const BasicStrategyProfile<Scalar>& profile,
                               Eigen::Index node, Eigen::Index user) {
  CheckDimensions(config, profile);
  CheckNodeIndex(node, config.num_nodes());
  if (user < 0 || user >= config.num_users()) {
    throw std::out_of_range("user index " + std::to_string(user) +
                            " out of range");
  }
  const Vector<Scalar> totals = CompensatedRowSums(profile.purchases);
  const Scalar grand = CompensatedSum(totals);
  const Scalar others = grand - totals(node);
  if (!(others > Scalar(0))) {
    throw std::domain_error("degenerate opponent profile");
  }
  return Scalar(-2) * config.block_reward * others / (grand * grand * grand);
}

}  // namespace sbw

#endif  // SBW_GAME_HPP_
