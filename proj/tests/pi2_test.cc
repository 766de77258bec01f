// Copyright 2026 The ADGPS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "adgps/errors.h"
#include "adgps/pi2.h"
#include "test_util.h"

namespace adgps {
namespace {

Pi2Batch RandomBatch(int n, int horizon, RandomStream& rng) {
  Pi2Batch b;
  for (int i = 0; i < n; ++i) {
    std::vector<double> c;
    std::vector<Vector> xs, us;
    for (int t = 0; t < horizon; ++t) {
      c.push_back(rng.Uniform(0, 3));
      xs.push_back(rng.StandardNormal(2));
      us.push_back(rng.StandardNormal(1));
    }
    b.costs.push_back(c);
    b.states.push_back(xs);
    b.actions.push_back(us);
  }
  return b;
}

TEST(CostToGo, ZeroCosts) {
  RandomStream rng(1);
  Pi2Batch b = RandomBatch(3, 4, rng);
  for (auto& c : b.costs) std::fill(c.begin(), c.end(), 0.0);
  EXPECT_EQ(CostToGo(b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(CostToGo, MatchesSuffixSumOracle) {
  RandomStream rng(2);
  const Pi2Batch b = RandomBatch(5, 7, rng);
  const Matrix s = CostToGo(b);
  for (int i = 0; i < 5; ++i) {
    for (int t = 0; t < 7; ++t) {
      double expected = 0.0;
      for (int j = t; j < 7; ++j) expected += b.costs[i][j];
      EXPECT_NEAR(s(i, t), expected, 1e-12);
    }
  }
}

TEST(Pi2Batch, RejectsRaggedAndSmall) {
  RandomStream rng(3);
  Pi2Batch b = RandomBatch(3, 4, rng);
  b.costs[1].pop_back();
  EXPECT_THROW(b.Validate(), DataError);
  EXPECT_THROW(Pi2Update(TimeVaryingLinGaussPolicy::Constant(4, 2, 1, 1.0), b, 0.5),
               DataError);
  EXPECT_THROW(RandomBatch(1, 4, rng).Validate(), DataError);
}

// Grid search over log eta for the dual minimum, independent of the solver.
double GridKl(const Vector& costs, double kl_bound) {
  double best_eta = 0.0, best = std::numeric_limits<double>::infinity();
  for (double le = -6.0; le <= 8.0; le += 1e-4) {
    const double eta = std::pow(10.0, le);
    const double m = costs.minCoeff();
    double acc = 0.0;
    for (int i = 0; i < costs.size(); ++i) acc += std::exp(-(costs(i) - m) / eta);
    const double g = eta * kl_bound - m + eta * std::log(acc / costs.size());
    if (g < best) {
      best = g;
      best_eta = eta;
    }
  }
  return KlFromUniform(SoftmaxWeights(costs, best_eta));
}

TEST(RepsTemperature, TwoSampleDualOracle) {
  Vector c(2);
  c << 0.0, 10.0;
  const double kl = KlFromUniform(SoftmaxWeights(c, RepsTemperature(c, 0.1)));
  EXPECT_GE(kl, 0.097);
  EXPECT_LE(kl, 0.1);
  EXPECT_NEAR(kl, GridKl(c, 0.1), 2e-3);
}

TEST(RepsTemperature, EqualCostsGiveMaxTemperature) {
  const Vector c = Vector::Constant(5, 2.0);
  EXPECT_EQ(RepsTemperature(c, 0.5), kTemperatureMax);
  const Vector w = SoftmaxWeights(c, kTemperatureMax);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(w(i), 0.2, 1e-15);
}

TEST(RepsTemperatureProperty, WeightsRespectBoundAndOrdering) {
  RandomStream rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 30;
    Vector c(n);
    for (int i = 0; i < n; ++i) c(i) = rng.Uniform(0, 100) * (trial % 3 + 1);
    const double bound = 0.05 + 0.1 * (trial % 10);
    const Vector w = SoftmaxWeights(c, RepsTemperature(c, bound));
    EXPECT_LE(KlFromUniform(w), bound + 1e-3);
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    EXPECT_GE(w.minCoeff(), 0.0);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (c(a) < c(b)) {
          EXPECT_GE(w(a), w(b));
        }
      }
    }
  }
}

TEST(SoftmaxWeightsProperty, ShiftInvariant) {
  RandomStream rng(5);
  Vector c(6);
  for (int i = 0; i < 6; ++i) c(i) = rng.Uniform(0, 5);
  const Vector w = SoftmaxWeights(c, 0.7);
  const Vector shifted = SoftmaxWeights((c.array() + 1234.5).matrix(), 0.7);
  EXPECT_LT((w - shifted).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pi2Update, OneDimensionalTaskConverges) {
  auto policy = TimeVaryingLinGaussPolicy::Constant(1, 1, 1, 1.0);
  RandomStream rng(6);
  for (int iter = 0; iter < 10; ++iter) {
    Pi2Batch b;
    for (int i = 0; i < 64; ++i) {
      const Vector x = Vector::Zero(1);
      const Vector u = PolicySample(policy, 0, x, rng);
      b.costs.push_back({(u(0) - 3.0) * (u(0) - 3.0)});
      b.states.push_back({x});
      b.actions.push_back({u});
    }
    policy = Pi2Update(policy, b, 1.0);
  }
  EXPECT_NEAR(policy.offsets[0](0), 3.0, 0.2);
}

TEST(Pi2Update, KeepsGainsAndFloorsCovariance) {
  RandomStream rng(7);
  auto prev = testing::RandomPolicy(4, 2, 1, rng);
  Pi2Batch b = RandomBatch(8, 4, rng);
  // Identical actions collapse the weighted covariance.
  for (auto& us : b.actions)
    for (auto& u : us) u = Vector::Constant(1, 0.3);
  const auto next = Pi2Update(prev, b, 0.5);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(next.gains[t], prev.gains[t]);
    EXPECT_GE(next.covariances[t](0, 0), 1e-3 * prev.covariances[t](0, 0) - 1e-15);
  }
}

TEST(Pi2Update, EqualCostsGiveUniformMean) {
  RandomStream rng(8);
  const auto prev = TimeVaryingLinGaussPolicy::Constant(3, 2, 1, 1.0);
  Pi2Batch b = RandomBatch(6, 3, rng);
  for (auto& c : b.costs) std::fill(c.begin(), c.end(), 1.0);
  const auto next = Pi2Update(prev, b, 0.5);
  for (int t = 0; t < 3; ++t) {
    double mean = 0.0;
    for (int i = 0; i < 6; ++i) mean += b.actions[i][t](0) / 6.0;
    EXPECT_NEAR(next.offsets[t](0), mean, 1e-9);
  }
}

}  // namespace
}  // namespace adgps
