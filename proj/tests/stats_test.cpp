/*
 * Copyright 2026 The sosbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sosbias/stats.hpp"
#include "test_util.hpp"

namespace sosbias {
namespace {

struct TTestFixture {
  std::vector<double> a, b;
  double t_pooled, df_pooled, p_pooled, t_welch, df_welch, p_welch;
};

const std::vector<TTestFixture> kOracle = {
#include "oracles/ttest_oracle.inc"
};

TEST(PearsonTest, Example) {
  const std::vector<double> x = {1, 2, 3, 4}, y = {1, 3, 2, 5};
  EXPECT_NEAR(pearson(x, y), 5.5 / std::sqrt(43.75), 1e-15);
}

TEST(PearsonTest, SymmetricAndAffineInvariant) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = testing::draw(rng, 2, 20);
    std::vector<double> x(n), y(n), x2(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = testing::unit(rng);
      y[i] = testing::unit(rng);
    }
    const double a = 0.5 + 3 * testing::unit(rng), b = testing::unit(rng) - 0.5;
    for (std::size_t i = 0; i < n; ++i) x2[i] = a * x[i] + b;
    EXPECT_NEAR(pearson(x, y), pearson(y, x), 1e-14);
    EXPECT_NEAR(pearson(x2, y), pearson(x, y), 1e-12);
    EXPECT_NEAR(pearson(x, x), 1.0, 1e-14);
  }
}

TEST(PearsonTest, Errors) {
  const std::vector<double> x = {1, 2, 3}, y = {1, 2}, flat = {2, 2, 2};
  EXPECT_THROW(pearson(x, y), InvariantError);
  EXPECT_THROW(pearson(x, flat), UndefinedStatisticError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), InvariantError);
  EXPECT_THROW(pearson(std::vector<double>{1, NAN}, std::vector<double>{1, 2}), InvariantError);
}

TEST(TTestTest, ClosedFormSmallDf) {
  // df = 2: p = 1 - |t| / sqrt(2 + t^2).
  const std::vector<double> a = {1, 2}, b = {3, 5};
  const auto r = ttest_independent(a, b);
  EXPECT_DOUBLE_EQ(r.df, 2.0);
  EXPECT_NEAR(r.t, -2.5 / std::sqrt(1.25), 1e-14);
  EXPECT_NEAR(r.p, 1.0 - std::abs(r.t) / std::sqrt(2.0 + r.t * r.t), 1e-14);
  // df = 1: p = 1 - 2 atan(|t|) / pi.
  for (double t : {0.3, 1.0, 4.0, 25.0}) {
    EXPECT_NEAR(t_two_sided_p(t, 1.0), 1.0 - 2.0 * std::atan(t) / std::numbers::pi, 1e-14);
  }
  EXPECT_EQ(t_two_sided_p(0.0, 5.0), 1.0);
}

TEST(TTestTest, MatchesHighPrecisionOracle) {
  for (const auto& f : kOracle) {
    const auto p = ttest_independent(f.a, f.b, TTestVariant::kPooled);
    EXPECT_NEAR(p.t, f.t_pooled, 1e-9 * std::max(1.0, std::abs(f.t_pooled)));
    EXPECT_EQ(p.df, f.df_pooled);
    EXPECT_NEAR(p.p, f.p_pooled, 1e-9);
    const auto w = ttest_independent(f.a, f.b, TTestVariant::kWelch);
    EXPECT_NEAR(w.t, f.t_welch, 1e-9 * std::max(1.0, std::abs(f.t_welch)));
    EXPECT_NEAR(w.df, f.df_welch, 1e-9 * f.df_welch);
    EXPECT_NEAR(w.p, f.p_welch, 1e-9);
  }
}

TEST(TTestTest, Antisymmetric) {
  for (const auto& f : kOracle) {
    const auto ab = ttest_independent(f.a, f.b), ba = ttest_independent(f.b, f.a);
    EXPECT_NEAR(ab.t, -ba.t, 1e-12);
    EXPECT_NEAR(ab.p, ba.p, 1e-14);
  }
}

TEST(TTestTest, Degenerate) {
  const std::vector<double> flat = {1, 1, 1}, flat2 = {2, 2};
  EXPECT_THROW(ttest_independent(flat, flat2), UndefinedStatisticError);
  EXPECT_THROW(ttest_independent(std::vector<double>{1}, flat), InvariantError);
  const auto r = ttest_independent(flat, std::vector<double>{1, 2, 3});
  EXPECT_TRUE(std::isfinite(r.p));
  EXPECT_THROW(t_two_sided_p(1.0, 0.0), InvariantError);
}

TEST(TTestTest, Significance) {
  const auto& f = kOracle.front();
  const auto r = ttest_independent(f.a, f.b);
  EXPECT_TRUE(r.significant());
  EXPECT_FALSE(r.significant(0.001));
}

}  // namespace
}  // namespace sosbias
