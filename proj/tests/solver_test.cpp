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
#include "sbw/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "sbw/experiment.hpp"
#include "test_util.hpp"

namespace sbw {
namespace {

using testing::GridGap;
using testing::OracleInstance;
using testing::RandomInstance;
using testing::SymmetricUnlimited;

// Node 0 alone against one opponent holding `opponents` units of a single
// user with `capacity` units in total.
struct SingleUser {
  GameConfig config;
  StrategyProfile profile;
};

SingleUser SingleUserGame(double reward, double cost, double opponents, double capacity) {
  SingleUser g;
  g.config.block_reward = reward;
  g.config.capacities = Vector<double>::Constant(1, capacity);
  g.config.costs = Matrix<double>::Constant(2, 1, cost);
  g.profile = StrategyProfile::Zero(2, 1);
  g.profile.purchases(1, 0) = opponents;
  return g;
}

TEST(ResidualCapacitiesTest, Examples) {
  GameConfig c;
  c.block_reward = 1000.0;
  c.capacities = Vector<double>::Constant(6, 150.0);
  c.costs = Matrix<double>::Constant(4, 6, 1.5);
  const StrategyProfile p = StrategyProfile::Constant(4, 6, 2.0);
  for (Eigen::Index n = 0; n < 4; ++n) {
    EXPECT_TRUE(ResidualCapacities(c, p, n).isApprox(Vector<double>::Constant(6, 144.0)));
  }
  EXPECT_TRUE(ResidualCapacities(c, StrategyProfile::Zero(4, 6), 2).isApprox(c.capacities));

  StrategyProfile full = StrategyProfile::Zero(4, 6);
  full.purchases.row(1).setConstant(150.0);
  EXPECT_TRUE(ResidualCapacities(c, full, 0).isZero(0.0));
  EXPECT_TRUE(ResidualCapacities(c, full, 1).isApprox(c.capacities));
}

TEST(BestResponseTest, InteriorStationaryPoint) {
  const SingleUser g = SingleUserGame(1000.0, 1.0, 100.0, 10100.0);
  const BestResponse br = BestResponseTo(g.config, g.profile, 0);
  const double expected = std::sqrt(1000.0 * 100.0) - 100.0;  // 216.2277...
  EXPECT_NEAR(br.allocation(0), expected, 1e-9);
  EXPECT_NEAR(br.allocation(0), 216.228, 1e-3);

  // Grid search at step 0.01 over the full residual agrees.
  const BestResponse grid = BruteForceBestResponse(g.config, g.profile, 0, 0.01);
  EXPECT_NEAR(grid.allocation(0), br.allocation(0), 0.01);
  EXPECT_GE(br.achieved_utility, grid.achieved_utility - 1e-9);
}

TEST(BestResponseTest, CapacityClamped) {
  const SingleUser g = SingleUserGame(1000.0, 1.0, 100.0, 150.0);
  const BestResponse br = BestResponseTo(g.config, g.profile, 0);
  EXPECT_DOUBLE_EQ(br.allocation(0), 50.0);
  const BestResponse grid = BruteForceBestResponse(g.config, g.profile, 0, 0.01);
  EXPECT_DOUBLE_EQ(grid.allocation(0), 50.0);
}

TEST(BestResponseTest, CheaperUserFillsFirst) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    GameConfig c;
    c.block_reward = rng.Uniform(10.0, 5000.0);
    c.capacities.resize(2);
    c.capacities << rng.Uniform(1.0, 150.0), rng.Uniform(1.0, 150.0);
    c.costs.resize(2, 2);
    c.costs << 1.0, 2.0, 1.5, 1.5;
    StrategyProfile p = StrategyProfile::Zero(2, 2);
    p.purchases(1, 0) = rng.Uniform(0.0, c.capacities(0));
    p.purchases(1, 1) = rng.Uniform(0.0, c.capacities(1));
    if (p.purchases.row(1).sum() <= 0.0) continue;
    const BestResponse br = BestResponseTo(c, p, 0);
    const Vector<double> residual = ResidualCapacities(c, p, 0);
    if (br.allocation(1) > 0.0) EXPECT_DOUBLE_EQ(br.allocation(0), residual(0));
  }
}

TEST(BestResponseTest, EmptyOpponentsIsUndefined) {
  const SingleUser g = SingleUserGame(1000.0, 1.0, 0.0, 150.0);
  try {
    BestResponseTo(g.config, g.profile, 0);
    FAIL();
  } catch (const std::domain_error& e) {
    EXPECT_STREQ(e.what(), "undefined best response: reward share is constant in own total");
  }
}

TEST(BestResponseTest, EqualCostsBreakTiesByLowestIndex) {
  GameConfig c;
  c.block_reward = 1000.0;
  c.capacities = Vector<double>::Constant(3, 20.0);
  c.costs = Matrix<double>::Constant(2, 3, 1.0);
  StrategyProfile p = StrategyProfile::Zero(2, 3);
  p.purchases(1, 2) = 100.0;
  const BestResponse br = BestResponseTo(c, p, 0);
  // Wants far more than the 20 + 20 + 0 available; fills in index order.
  EXPECT_DOUBLE_EQ(br.allocation(0), 20.0);
  EXPECT_DOUBLE_EQ(br.allocation(1), 20.0);
  EXPECT_DOUBLE_EQ(br.allocation(2), 0.0);

  c.block_reward = 300.0;  // x* = sqrt(300 * 100) - 100 = 73.2 > 40 still
  c.capacities.setConstant(100.0);
  const BestResponse interior = BestResponseTo(c, p, 0);
  EXPECT_NEAR(interior.allocation(0), std::sqrt(300.0 * 100.0) - 100.0, 1e-9);
  EXPECT_EQ(interior.allocation(1), 0.0);
}

TEST(BestResponseTest, GreedyConsistent) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(4));
    const int m = 1 + static_cast<int>(rng.Below(8));
    auto inst = RandomInstance(rng, n, m, rng.Uniform(100.0, 3000.0));
    const auto node = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(n)));
    const BestResponse br = BestResponseTo(inst.config, inst.profile, node);
    const Vector<double> residual = ResidualCapacities(inst.config, inst.profile, node);
    EXPECT_GE(br.allocation.minCoeff(), 0.0);
    for (Eigen::Index a = 0; a < m; ++a) {
      EXPECT_LE(br.allocation(a), residual(a));
      if (!(br.allocation(a) > 0.0)) continue;
      for (Eigen::Index k = 0; k < m; ++k) {
        if (inst.config.costs(node, k) < inst.config.costs(node, a)) {
          EXPECT_DOUBLE_EQ(br.allocation(k), residual(k));
        }
      }
    }
  }
}

TEST(BestResponseTest, AgreesWithGridOracle) {
  Rng rng(20240601);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = OracleInstance(rng);
    const double step = 0.01;
    const BestResponse br = BestResponseTo(inst.config, inst.profile, 0);
    const BestResponse grid = BruteForceBestResponse(inst.config, inst.profile, 0, step);
    const double gap = GridGap(inst.config, inst.profile, 0, step);
    EXPECT_GE(br.achieved_utility, grid.achieved_utility - gap) << "trial " << trial;
    EXPECT_LE(br.achieved_utility - grid.achieved_utility, gap) << "trial " << trial;
  }
}

TEST(BruteForceTest, DegenerateGrids) {
  const SingleUser g = SingleUserGame(1000.0, 1.0, 100.0, 150.0);
  // step == residual: only {0, residual} is evaluated.
  const BestResponse coarse = BruteForceBestResponse(g.config, g.profile, 0, 50.0);
  EXPECT_DOUBLE_EQ(coarse.allocation(0), 50.0);

  const SingleUser full = SingleUserGame(1000.0, 1.0, 150.0, 150.0);
  const BestResponse none = BruteForceBestResponse(full.config, full.profile, 0, 0.5);
  EXPECT_EQ(none.allocation(0), 0.0);
  EXPECT_EQ(none.achieved_utility, 0.0);
}

TEST(BruteForceTest, RejectsOversizedGrids) {
  const SingleUser g = SingleUserGame(1000.0, 1.0, 100.0, 1e9);
  EXPECT_THROW(BruteForceBestResponse(g.config, g.profile, 0, 0.01), std::invalid_argument);
  GameConfig c;
  c.block_reward = 10.0;
  c.capacities = Vector<double>::Constant(4, 1.0);
  c.costs = Matrix<double>::Constant(2, 4, 1.0);
  EXPECT_THROW(BruteForceBestResponse(c, StrategyProfile::Constant(2, 4, 0.1), 0, 0.5),
               std::invalid_argument);
}

TEST(SolveEquilibriumTest, SymmetricClosedForm) {
  for (int n : {2, 3, 4, 8, 16}) {
    for (double cost : {1.0, 1.7}) {
      for (int m : {1, 3}) {
        const GameConfig c = SymmetricUnlimited(n, m, 1000.0, cost);
        const EquilibriumResult r =
            SolveEquilibrium(c, StrategyProfile::Constant(n, m, 2.0), SolverOptions{});
        ASSERT_TRUE(r.converged) << "n=" << n;
        const double expected = 1000.0 * (n - 1) / (n * n * cost);
        for (Eigen::Index i = 0; i < n; ++i) {
          EXPECT_LE(testing::RelativeError(r.trace.back().totals(i), expected), 1e-3)
              << "n=" << n << " cost=" << cost;
        }
        EXPECT_TRUE(VerifyEquilibrium(c, r.profile, 1e-4 * c.block_reward));
      }
    }
  }
}

TEST(SolveEquilibriumTest, TwoAndFourNodeValues) {
  EquilibriumResult r = SolveEquilibrium(SymmetricUnlimited(2, 1, 1000.0, 1.0),
                                         StrategyProfile::Constant(2, 1, 2.0));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.profile.purchases(0, 0), 250.0, 0.25);
  EXPECT_NEAR(r.utilities(0), 250.0, 0.25);
  r = SolveEquilibrium(SymmetricUnlimited(4, 1, 1000.0, 1.0),
                       StrategyProfile::Constant(4, 1, 2.0));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.profile.purchases(3, 0), 187.5, 0.1875);
}

TEST(SolveEquilibriumTest, PaperDefaultConvergesQuickly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GameSetup setup;  // N=4, M=6, R=1000, I=150, costs [1,2], all-2s
    const GameConfig c = MaterializeGame(setup, seed);
    const EquilibriumResult r = SolveEquilibrium(c, InitialProfile(setup));
    EXPECT_TRUE(r.converged) << "seed " << seed;
    EXPECT_LE(r.iterations, 20) << "seed " << seed;
    EXPECT_TRUE(IsFeasible(c, r.profile));
    EXPECT_TRUE(VerifyEquilibrium(c, r.profile, 1e-4 * c.block_reward)) << "seed " << seed;
    ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations) + 1);
  }
}

TEST(SolveEquilibriumTest, UpdatesNeverLowerTheMoversUtility) {
  Rng rng(5150);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(5));
    const int m = 1 + static_cast<int>(rng.Below(6));
    auto inst = RandomInstance(rng, n, m, rng.Uniform(200.0, 2000.0));
    StrategyProfile p = inst.profile;
    for (int sweep = 0; sweep < 10; ++sweep) {
      for (Eigen::Index node = 0; node < n; ++node) {
        const double before = Utility(inst.config, p).utilities(node);
        const BestResponse br = BestResponseTo(inst.config, p, node);
        p.purchases.row(node) = br.allocation.transpose();
        const double after = Utility(inst.config, p).utilities(node);
        EXPECT_GE(after, before - 1e-9 * inst.config.block_reward);
        EXPECT_NEAR(after, br.achieved_utility, 1e-9 * inst.config.block_reward);
      }
      ASSERT_TRUE(IsFeasible(inst.config, p));
    }
  }
}

TEST(SolveEquilibriumTest, ReportsNonConvergence) {
  const GameSetup setup;
  const GameConfig c = MaterializeGame(setup, 1);
  const EquilibriumResult r = SolveEquilibrium(c, InitialProfile(setup), {0.0, 1});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(SolveEquilibriumTest, RejectsInfeasibleStart) {
  const GameSetup setup;
  const GameConfig c = MaterializeGame(setup, 1);
  EXPECT_THROW(SolveEquilibrium(c, StrategyProfile::Constant(4, 6, 40.0)),
               std::invalid_argument);
}

TEST(SolveEquilibriumTest, SingleNodeIsDegenerate) {
  const GameConfig c = SymmetricUnlimited(1, 2, 1000.0, 1.0);
  EXPECT_THROW(SolveEquilibrium(c, StrategyProfile::Constant(1, 2, 2.0)), std::domain_error);
  EXPECT_FALSE(VerifyEquilibrium(c, StrategyProfile::Constant(1, 2, 2.0), 1e-1));
}

TEST(VerifyEquilibriumTest, SelfConsistentOnSeededInstances) {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(6));
    const int m = 1 + static_cast<int>(rng.Below(8));
    GameSetup setup;
    setup.num_nodes = n;
    setup.num_users = m;
    setup.block_reward = rng.Uniform(500.0, 2000.0);
    setup.capacities = {rng.Uniform(20.0, 200.0)};
    setup.initial_purchase = 1.0;
    const GameConfig c = MaterializeGame(setup, rng.NextU64());
    const EquilibriumResult r = SolveEquilibrium(c, InitialProfile(setup));
    ASSERT_TRUE(r.converged);
    EXPECT_TRUE(VerifyEquilibrium(c, r.profile, 1e-4 * c.block_reward)) << "trial " << trial;
  }
}

TEST(VerifyEquilibriumTest, PerturbedOptimumFails) {
  const GameConfig c = SymmetricUnlimited(2, 1, 1000.0, 1.0);
  StrategyProfile p = StrategyProfile::Constant(2, 1, 250.0);
  EXPECT_TRUE(VerifyEquilibrium(c, p, 1e-4 * 1000.0));
  p.purchases(0, 0) += 10.0;
  EXPECT_FALSE(VerifyEquilibrium(c, p, 1e-4 * 1000.0));
}

}  // namespace
}  // namespace sbw
