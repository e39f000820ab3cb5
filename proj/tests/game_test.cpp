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
#include "sbw/game.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace sbw {
namespace {

using testing::RandomInstance;

Vector<double> Vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

GameConfig TwoNodeOneUser(double c0, double c1) {
  GameConfig c;
  c.block_reward = 100.0;
  c.capacities = Vec({1000.0});
  c.costs.resize(2, 1);
  c.costs << c0, c1;
  return c;
}

StrategyProfile Column(double a, double b) {
  StrategyProfile p;
  p.purchases.resize(2, 1);
  p.purchases << a, b;
  return p;
}

TEST(LeaderProbabilityTest, Examples) {
  EXPECT_TRUE(LeaderProbability(Vec({1, 1, 1, 1})).isApprox(Vec({0.25, 0.25, 0.25, 0.25})));
  EXPECT_TRUE(LeaderProbability(Vec({2, 1, 1})).isApprox(Vec({0.5, 0.25, 0.25})));
  const Vector<double> p = LeaderProbability(Vec({0, 5}));
  EXPECT_EQ(p(0), 0.0);
  EXPECT_EQ(p(1), 1.0);
}

TEST(LeaderProbabilityTest, AllZeroIsDegenerate) {
  try {
    LeaderProbability(Vec({0, 0, 0}));
    FAIL() << "expected an error";
  } catch (const std::domain_error& e) {
    EXPECT_STREQ(e.what(), "degenerate stake vector");
  }
  EXPECT_THROW(LeaderProbability(Vec({1, -1})), std::invalid_argument);
}

TEST(LeaderProbabilityTest, SimplexAndScaleInvariance) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.Below(20));
    Vector<double> s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = rng.Uniform(0.01, 500.0);
    const Vector<double> p = LeaderProbability(s);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);

    const double k = rng.Uniform(1e-3, 1e3);
    const Vector<double> q = LeaderProbability(Vector<double>(s * k));
    Eigen::Index arg_p, arg_q;
    p.maxCoeff(&arg_p);
    q.maxCoeff(&arg_q);
    EXPECT_EQ(arg_p, arg_q);
    for (Eigen::Index i = 0; i < n; ++i) EXPECT_NEAR(p(i), q(i), 1e-12);
  }
}

TEST(UtilityTest, Examples) {
  UtilityReport r = Utility(TwoNodeOneUser(1, 1), Column(10, 10));
  EXPECT_DOUBLE_EQ(r.utilities(0), 40.0);
  EXPECT_DOUBLE_EQ(r.utilities(1), 40.0);
  EXPECT_DOUBLE_EQ(r.grand_total, 20.0);

  r = Utility(TwoNodeOneUser(1, 2), Column(30, 10));
  EXPECT_DOUBLE_EQ(r.utilities(0), 45.0);
  EXPECT_DOUBLE_EQ(r.utilities(1), 5.0);
  EXPECT_DOUBLE_EQ(r.totals(0), 30.0);
  EXPECT_DOUBLE_EQ(r.totals(1), 10.0);
}

TEST(UtilityTest, ZeroProfileEarnsNothing) {
  Rng rng(3);
  const auto inst = RandomInstance(rng, 5, 4, 700.0);
  const UtilityReport r = Utility(inst.config, StrategyProfile::Zero(5, 4));
  EXPECT_TRUE(r.utilities.isZero(0.0));
  EXPECT_EQ(r.grand_total, 0.0);
}

TEST(UtilityTest, DimensionMismatchThrows) {
  EXPECT_THROW(Utility(TwoNodeOneUser(1, 1), StrategyProfile::Zero(3, 1)),
               std::invalid_argument);
  EXPECT_THROW(Utility(TwoNodeOneUser(1, 1), StrategyProfile::Zero(2, 2)),
               std::invalid_argument);
}

TEST(UtilityTest, RewardSharesSumToReward) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(10));
    const int m = 1 + static_cast<int>(rng.Below(10));
    const auto inst = RandomInstance(rng, n, m, rng.Uniform(100, 2000));
    const UtilityReport r = Utility(inst.config, inst.profile);
    double spend = 0.0;
    for (int i = 0; i < n; ++i) spend += inst.config.costs.row(i).dot(inst.profile.purchases.row(i));
    EXPECT_NEAR(r.utilities.sum(), inst.config.block_reward - spend,
                1e-9 * (inst.config.block_reward + spend));
    EXPECT_NEAR(r.grand_total, r.totals.sum(), 1e-9 * r.grand_total);
  }
}

TEST(UtilityTest, DoublingPurchasesKeepsSharesAndDoublesCosts) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = RandomInstance(rng, 4, 6, 1000.0);
    StrategyProfile doubled{inst.profile.purchases * 2.0};
    const UtilityReport a = Utility(inst.config, inst.profile);
    const UtilityReport b = Utility(inst.config, doubled);
    for (int n = 0; n < 4; ++n) {
      const double spend = inst.config.costs.row(n).dot(inst.profile.purchases.row(n));
      const double share_a = (a.utilities(n) + spend) / inst.config.block_reward;
      const double share_b = (b.utilities(n) + 2 * spend) / inst.config.block_reward;
      EXPECT_NEAR(share_a, a.totals(n) / a.grand_total, 1e-12);
      EXPECT_NEAR(share_a, share_b, 1e-12);
    }
  }
}

TEST(UtilityTest, CompensatedTotalsAtScale) {
  // 75 x 100 profile mixing tiny and large entries.
  Rng rng(21);
  StrategyProfile p = StrategyProfile::Zero(75, 100);
  for (Eigen::Index n = 0; n < 75; ++n) {
    for (Eigen::Index m = 0; m < 100; ++m) {
      p.purchases(n, m) = (m % 7 == 0) ? rng.Uniform(1e5, 1e6) : rng.Uniform(1e-6, 1e-3);
    }
  }
  GameConfig c;
  c.block_reward = 1000.0;
  c.capacities = Vector<double>::Constant(100, 1e9);
  c.costs = Matrix<double>::Constant(75, 100, 1.5);
  const UtilityReport r = Utility(c, p);
  long double exact = 0.0L;
  for (Eigen::Index n = 0; n < 75; ++n) {
    for (Eigen::Index m = 0; m < 100; ++m) exact += p.purchases(n, m);
  }
  EXPECT_LE(std::abs(r.grand_total - static_cast<double>(exact)), 1e-12 * r.grand_total);
}

TEST(UtilityGradientTest, Examples) {
  const Vector<double> g = UtilityGradient(TwoNodeOneUser(1, 1), Column(10, 10), 0);
  ASSERT_EQ(g.size(), 1);
  EXPECT_DOUBLE_EQ(g(0), 1.5);
}

TEST(UtilityGradientTest, ComponentsDifferOnlyByCost) {
  Rng rng(4);
  const auto inst = RandomInstance(rng, 3, 5, 900.0);
  const Vector<double> g = UtilityGradient(inst.config, inst.profile, 1);
  for (Eigen::Index a = 0; a < 5; ++a) {
    for (Eigen::Index b = 0; b < 5; ++b) {
      EXPECT_NEAR(g(a) - g(b), inst.config.costs(1, b) - inst.config.costs(1, a), 1e-12);
    }
  }
}

TEST(UtilityGradientTest, UndefinedAtZeroProfile) {
  try {
    UtilityGradient(TwoNodeOneUser(1, 1), Column(0, 0), 0);
    FAIL();
  } catch (const std::domain_error& e) {
    EXPECT_STREQ(e.what(), "gradient undefined at zero profile");
  }
}

TEST(UtilityGradientTest, MatchesCentralDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(5));
    const int m = 1 + static_cast<int>(rng.Below(5));
    const auto inst = RandomInstance(rng, n, m, rng.Uniform(100, 2000));
    const auto node = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(n)));
    const Vector<double> g = UtilityGradient(inst.config, inst.profile, node);
    for (Eigen::Index u = 0; u < m; ++u) {
      const double fd = static_cast<double>(
          testing::CentralDifference(inst.config, inst.profile, node, u, 1e-5L));
      EXPECT_LE(testing::RelativeError(g(u), fd), 1e-4) << "trial " << trial;
    }
  }
}

TEST(UtilitySecondDerivativeTest, Examples) {
  EXPECT_DOUBLE_EQ(UtilitySecondDerivative(TwoNodeOneUser(1, 1), Column(10, 10), 0, 0), -0.25);
}

TEST(UtilitySecondDerivativeTest, DegenerateOpponents) {
  try {
    UtilitySecondDerivative(TwoNodeOneUser(1, 1), Column(10, 0), 0, 0);
    FAIL();
  } catch (const std::domain_error& e) {
    EXPECT_STREQ(e.what(), "degenerate opponent profile");
  }
}

TEST(UtilitySecondDerivativeTest, NegativeAndMatchesSecondDifferences) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(5));
    const int m = 1 + static_cast<int>(rng.Below(5));
    const auto inst = RandomInstance(rng, n, m, rng.Uniform(100, 2000));
    const auto node = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(n)));
    const auto user = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(m)));
    const double d2 = UtilitySecondDerivative(inst.config, inst.profile, node, user);
    EXPECT_LT(d2, 0.0);
    const double fd = static_cast<double>(
        testing::SecondDifference(inst.config, inst.profile, node, user, 1e-2L));
    EXPECT_LE(testing::RelativeError(d2, fd), 1e-3) << "trial " << trial;
  }
}

TEST(ContributionTest, RowSums) {
  StrategyProfile p;
  p.purchases.resize(2, 3);
  p.purchases << 1, 2, 3, 0, 0, 0;
  EXPECT_EQ(ContributionOf(p, 0), 6.0);
  EXPECT_EQ(ContributionOf(p, 1), 0.0);
  EXPECT_THROW(ContributionOf(p, 2), std::out_of_range);

  const StrategyProfile initial = StrategyProfile::Constant(4, 6, 2.0);
  for (Eigen::Index n = 0; n < 4; ++n) EXPECT_EQ(ContributionOf(initial, n), 12.0);
}

TEST(GameConfigTest, Validation) {
  GameConfig c = TwoNodeOneUser(1, 1);
  EXPECT_NO_THROW(c.Validate());
  c.costs(1, 0) = 0.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TwoNodeOneUser(1, 1);
  c.capacities(0) = -1.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TwoNodeOneUser(1, 1);
  c.block_reward = 0.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TwoNodeOneUser(1, 1);
  c.capacities = Vec({1.0, 2.0});
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

TEST(FeasibilityTest, SharedColumnConstraint) {
  GameConfig c = TwoNodeOneUser(1, 1);
  c.capacities(0) = 20.0;
  EXPECT_TRUE(IsFeasible(c, Column(10, 10)));
  EXPECT_FALSE(IsFeasible(c, Column(10, 10.5)));
  EXPECT_FALSE(IsFeasible(c, Column(-1, 5)));
}

TEST(TemplatedScalarTest, LongDoubleAgreesWithDouble) {
  Rng rng(9);
  const auto inst = RandomInstance(rng, 3, 4, 1000.0);
  const auto wide = Utility(inst.config.cast<long double>(), inst.profile.cast<long double>());
  const auto narrow = Utility(inst.config, inst.profile);
  for (int n = 0; n < 3; ++n) {
    EXPECT_NEAR(static_cast<double>(wide.utilities(n)), narrow.utilities(n), 1e-9);
  }
}

}  // namespace
}  // namespace sbw
