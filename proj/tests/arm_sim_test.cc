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

#include <chrono>
#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "adgps/arm_sim.h"
#include "adgps/errors.h"
#include "adgps/types.h"

namespace adgps {
namespace {

ActionFunction ConstantTorque(double a, double b) {
  return [a, b](int, const Vector&, const Vector&, RandomStream&) {
    Vector u(2);
    u << a, b;
    return u;
  };
}

// Manipulator equations assembled from link Jacobians; Coriolis terms come
// from numerical derivatives of M(q).
struct ReferenceArm {
  double l1 = 0.5, l2 = 0.5, m1 = 1.0, m2 = 1.0, b = 1.0;

  Eigen::Matrix2d Mass(const Eigen::Vector2d& q) const {
    const double s1 = std::sin(q(0)), c1 = std::cos(q(0));
    const double s12 = std::sin(q(0) + q(1)), c12 = std::cos(q(0) + q(1));
    Eigen::Matrix2d jc1, jc2;
    jc1 << -0.5 * l1 * s1, 0, 0.5 * l1 * c1, 0;
    jc2 << -l1 * s1 - 0.5 * l2 * s12, -0.5 * l2 * s12,
        l1 * c1 + 0.5 * l2 * c12, 0.5 * l2 * c12;
    Eigen::RowVector2d w1(1, 0), w2(1, 1);
    return m1 * jc1.transpose() * jc1 + m2 * jc2.transpose() * jc2 +
           (m1 * l1 * l1 / 12.0) * w1.transpose() * w1 +
           (m2 * l2 * l2 / 12.0) * w2.transpose() * w2;
  }

  Eigen::Vector2d Accel(const Eigen::Vector2d& q, const Eigen::Vector2d& qd,
                        const Eigen::Vector2d& tau) const {
    const double h = 1e-6;
    Eigen::Matrix2d mdot = Eigen::Matrix2d::Zero();
    Eigen::Vector2d dke;
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e(k) = h;
      const Eigen::Matrix2d dm = (Mass(q + e) - Mass(q - e)) / (2 * h);
      mdot += dm * qd(k);
      dke(k) = 0.5 * qd.dot(dm * qd);
    }
    const Eigen::Vector2d c = mdot * qd - dke;
    return Mass(q).ldlt().solve(tau - c - b * qd);
  }
};

TEST(ArmSim, ForwardKinematics) {
  ArmModel m;
  const Vector ee = ForwardKinematics(m, 0.3, 0.4);
  EXPECT_NEAR(ee(0), 0.5 * std::cos(0.3) + 0.5 * std::cos(0.7), 1e-12);
  EXPECT_NEAR(ee(1), 0.5 * std::sin(0.3) + 0.5 * std::sin(0.7), 1e-12);
  const Vector straight = ForwardKinematics(m, 0.0, 0.0);
  EXPECT_NEAR(straight(0), 1.0, 1e-12);
  EXPECT_NEAR(straight(1), 0.0, 1e-12);
}

TEST(ArmSim, EquilibriumWithoutTorque) {
  ArmModel m;
  const Vector x = MakeState(m, 0.2, 1.1);
  EXPECT_EQ(Step(m, x, Vector::Zero(2)), x);
}

TEST(ArmSim, FrictionDissipates) {
  ArmModel m;
  Vector x = MakeState(m, 0.2, 1.1, 1.5, -2.0);
  double energy = KineticEnergy(m, x);
  for (int t = 0; t < 50; ++t) {
    x = Step(m, x, Vector::Zero(2));
    const double next = KineticEnergy(m, x);
    EXPECT_LT(next, energy);
    energy = next;
  }
}

TEST(ArmSim, EeAlwaysMatchesKinematics) {
  ArmModel m;
  Vector x = MakeState(m, 0.0, std::numbers::pi / 2);
  RandomStream rng(1);
  for (int t = 0; t < 100; ++t) {
    x = Step(m, x, 3.0 * rng.StandardNormal(2));
    const Vector ee = ForwardKinematics(m, x(0), x(1));
    EXPECT_LT((x.segment(4, 2) - ee).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ArmSim, TorqueClamped) {
  ArmModel m;
  const Vector x = MakeState(m, 0.1, 0.9);
  Vector big(2), limit(2);
  big << 100, -100;
  limit << 3, -3;
  EXPECT_EQ(Step(m, x, big), Step(m, x, limit));
}

TEST(ArmSim, NonFiniteInputFaults) {
  ArmModel m;
  Vector x = MakeState(m, 0.1, 0.9);
  x(2) = std::nan("");
  EXPECT_THROW(Step(m, x, Vector::Zero(2)), SimulationFault);
  EXPECT_THROW(Step(m, MakeState(m, 0, 0), Vector::Zero(3)), SimulationFault);
}

class RefinedIntegrator : public ::testing::TestWithParam<double> {};

TEST_P(RefinedIntegrator, MatchesCoarseStep) {
  ArmModel m;
  const ReferenceArm ref;
  const Eigen::Vector2d tau(0.05, -0.03);
  const double elbow = GetParam();
  Vector x = MakeState(m, 0.0, elbow);
  Eigen::Vector2d q(0.0, elbow), qd(0.0, 0.0);
  const double h = m.dt / 100.0;
  const int steps = static_cast<int>(std::round(1.0 / m.dt));
  Vector u(2);
  u << tau(0), tau(1);
  for (int k = 0; k < steps; ++k) {
    x = Step(m, x, u);
    for (int j = 0; j < 100; ++j) {
      // classical RK4 on (q, qd)
      auto f = [&](const Eigen::Vector2d& qq, const Eigen::Vector2d& vv) {
        return ref.Accel(qq, vv, tau);
      };
      const Eigen::Vector2d k1q = qd, k1v = f(q, qd);
      const Eigen::Vector2d k2q = qd + 0.5 * h * k1v, k2v = f(q + 0.5 * h * k1q, k2q);
      const Eigen::Vector2d k3q = qd + 0.5 * h * k2v, k3v = f(q + 0.5 * h * k2q, k3q);
      const Eigen::Vector2d k4q = qd + h * k3v, k4v = f(q + h * k3q, k4q);
      q += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
      qd += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
  }
  EXPECT_NEAR(x(0), q(0), 1e-3);
  EXPECT_NEAR(x(1), q(1), 1e-3);
  EXPECT_NEAR(x(2), qd(0), 1e-3);
  EXPECT_NEAR(x(3), qd(1), 1e-3);
  EXPECT_GT(std::abs(q(0)) + std::abs(q(1)), 1e-3);  // the arm actually moved
}

// near-straight elbow (smallest inertia) and right angle
INSTANTIATE_TEST_SUITE_P(ArmSim, RefinedIntegrator,
                         ::testing::Values(0.1, std::numbers::pi / 2));

TEST(ArmSim, PointMassIsDoubleIntegrator) {
  ArmModel m;
  m.kind = PlantKind::kPointMass;
  m.friction = 0.0;
  Vector x = MakeState(m, 0.0, 0.0);
  Vector u(2);
  u << 1.0, -2.0;
  x = Step(m, x, u);
  EXPECT_NEAR(x(2), 0.05, 1e-15);
  EXPECT_NEAR(x(3), -0.1, 1e-15);
  EXPECT_NEAR(x(4), 0.05 * 0.05, 1e-15);
}

TaskInstance AtTarget(const ArmModel& m) {
  TaskInstance inst;
  inst.initial_state = MakeState(m, 0.3, 1.2);
  inst.goal = inst.initial_state.segment(4, 2);
  inst.cost.target = inst.goal;
  inst.cost.w_x = 1.0;
  inst.cost.w_u = 1e-3;
  inst.cost.w_vel = 1e-2;
  return inst;
}

TEST(Rollout, ZeroTorqueAtTargetCostsNothing) {
  ArmModel m;
  const Trajectory tr = Rollout(m, AtTarget(m), ConstantTorque(0, 0), 100, 1);
  ASSERT_EQ(tr.horizon(), 100);
  for (double c : tr.costs) EXPECT_EQ(c, 0.0);
}

TEST(Rollout, CostRecomputesFromStates) {
  ArmModel m;
  TaskInstance inst = AtTarget(m);
  inst.cost.target << 0.1, 0.6;
  auto noisy = [](int, const Vector&, const Vector&, RandomStream& rng) {
    return Vector(rng.StandardNormal(2));
  };
  const Trajectory tr = Rollout(m, inst, noisy, 50, 7);
  double total = 0.0;
  for (int t = 0; t < 50; ++t) total += ReachCost(inst.cost, tr.states[t], tr.actions[t]);
  EXPECT_NEAR(TrajectoryCost(tr), total, 1e-12);
  const QuadraticCost q = MakeReachCost(inst.cost, 50);
  for (int t = 0; t < 50; ++t) {
    EXPECT_NEAR(q.Evaluate(t, tr.states[t], tr.actions[t]), tr.costs[t], 1e-10);
  }
}

TEST(Rollout, SeedDeterminesNoise) {
  ArmModel m;
  auto noisy = [](int, const Vector&, const Vector&, RandomStream& rng) {
    return Vector(rng.StandardNormal(2));
  };
  const auto a = Rollout(m, AtTarget(m), noisy, 20, 3);
  const auto b = Rollout(m, AtTarget(m), noisy, 20, 3);
  const auto c = Rollout(m, AtTarget(m), noisy, 20, 4);
  EXPECT_EQ(a.states.back(), b.states.back());
  EXPECT_NE(a.states.back(), c.states.back());
}

TEST(Rollout, PacingBlocks) {
  ArmModel m;
  const auto start = std::chrono::steady_clock::now();
  Rollout(m, AtTarget(m), ConstantTorque(0, 0), 10, 1, 0.5);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_GE(elapsed, 0.5);
}

TEST(Rollout, NonFiniteActionFaults) {
  ArmModel m;
  auto bad = [](int t, const Vector&, const Vector&, RandomStream&) {
    return Vector(Vector::Constant(2, t == 3 ? std::nan("") : 0.0));
  };
  EXPECT_THROW(Rollout(m, AtTarget(m), bad, 10, 1), SimulationFault);
}

GoalRegion DefaultRegion() {
  GoalRegion r;
  r.lower = Vector(2);
  r.upper = Vector(2);
  r.lower << -0.2, 0.3;
  r.upper << 0.3, 0.7;
  return r;
}

TEST(Instances, SplitIsDisjointAndSized) {
  ArmModel m;
  ReachTask task;
  task.target = Vector::Zero(2);
  const auto split = MakeInstanceSplit(m, 8, 4, 4, DefaultRegion(),
                                       MakeState(m, 0, std::numbers::pi / 2), task, 1);
  EXPECT_EQ(split.train.size(), 8u);
  EXPECT_EQ(split.validation.size(), 4u);
  EXPECT_EQ(split.test.size(), 4u);
  std::set<int> ids;
  std::set<std::pair<double, double>> goals;
  for (const auto* group : {&split.train, &split.validation, &split.test}) {
    for (const auto& inst : *group) {
      ids.insert(inst.instance_id);
      goals.insert({inst.goal(0), inst.goal(1)});
      EXPECT_GE(inst.goal(0), -0.2);
      EXPECT_LE(inst.goal(0), 0.3);
      EXPECT_GE(inst.goal(1), 0.3);
      EXPECT_LE(inst.goal(1), 0.7);
      EXPECT_EQ(inst.cost.target, inst.goal);
    }
  }
  EXPECT_EQ(ids.size(), 16u);
  EXPECT_EQ(goals.size(), 16u);
}

TEST(Instances, UnreachableRegionRejected) {
  ArmModel m;
  GoalRegion far = DefaultRegion();
  far.upper << 1.2, 0.7;
  EXPECT_THROW(CheckReachable(m, far), ConfigError);
  GoalRegion base;
  base.lower = Vector::Constant(2, -0.01);
  base.upper = Vector::Constant(2, 0.01);
  ArmModel uneven;
  uneven.link_lengths = {0.6, 0.2};
  EXPECT_THROW(CheckReachable(uneven, base), ConfigError);
  EXPECT_NO_THROW(CheckReachable(m, DefaultRegion()));
}

TEST(Instances, ZeroPerturbationIsIdentity) {
  ArmModel m;
  const TaskInstance inst = AtTarget(m);
  const TaskInstance same = PerturbInstance(m, inst, 0.0, 9);
  EXPECT_EQ(same.goal, inst.goal);
  EXPECT_EQ(same.cost.target, inst.cost.target);
  const TaskInstance moved = PerturbInstance(m, inst, 0.05, 9);
  EXPECT_LE((moved.goal - inst.goal).cwiseAbs().maxCoeff(), 0.05 + 1e-12);
  EXPECT_EQ(moved.cost.target, moved.goal);
}

}  // namespace
}  // namespace adgps
