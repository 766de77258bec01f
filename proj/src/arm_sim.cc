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

#include "adgps/arm_sim.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "adgps/errors.h"

namespace adgps {
namespace {

struct Dynamics2 {
  Eigen::Matrix2d mass;
  Eigen::Vector2d bias;  // coriolis + gravity
};

Dynamics2 Terms(const ArmModel& m, double q1, double q2, double qd1, double qd2) {
  Dynamics2 d;
  if (m.kind == PlantKind::kPointMass) {
    const double mass = m.masses[0];
    d.mass = mass * Eigen::Matrix2d::Identity();
    d.bias = Eigen::Vector2d(0.0, m.gravity ? mass * m.gravity_accel : 0.0);
    return d;
  }
  // uniform rods, centre of mass at mid-link
  const double l1 = m.link_lengths[0], l2 = m.link_lengths[1];
  const double m1 = m.masses[0], m2 = m.masses[1];
  const double lc1 = 0.5 * l1, lc2 = 0.5 * l2;
  const double i1 = m1 * l1 * l1 / 12.0, i2 = m2 * l2 * l2 / 12.0;
  const double c2 = std::cos(q2), s2 = std::sin(q2);
  const double m11 = i1 + i2 + m1 * lc1 * lc1 +
                     m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2);
  const double m12 = i2 + m2 * (lc2 * lc2 + l1 * lc2 * c2);
  const double m22 = i2 + m2 * lc2 * lc2;
  d.mass << m11, m12, m12, m22;
  const double h = m2 * l1 * lc2 * s2;
  d.bias << -h * (2.0 * qd1 * qd2 + qd2 * qd2), h * qd1 * qd1;
  if (m.gravity) {
    const double g = m.gravity_accel;
    const double c1 = std::cos(q1), c12 = std::cos(q1 + q2);
    d.bias(0) += (m1 * lc1 + m2 * l1) * g * c1 + m2 * lc2 * g * c12;
    d.bias(1) += m2 * lc2 * g * c12;
  }
  return d;
}

bool AllFinite(const Vector& v) { return v.allFinite(); }

}  // namespace

Vector ForwardKinematics(const ArmModel& model, double q1, double q2) {
  Vector ee(2);
  if (model.kind == PlantKind::kPointMass) {
    ee << q1, q2;
    return ee;
  }
  const double l1 = model.link_lengths[0], l2 = model.link_lengths[1];
  ee << l1 * std::cos(q1) + l2 * std::cos(q1 + q2),
      l1 * std::sin(q1) + l2 * std::sin(q1 + q2);
  return ee;
}

Vector MakeState(const ArmModel& model, double q1, double q2, double qd1,
                 double qd2) {
  Vector x(kStateDim);
  const Vector ee = ForwardKinematics(model, q1, q2);
  x << q1, q2, qd1, qd2, ee(0), ee(1);
  return x;
}

Vector StepWithDt(const ArmModel& model, const Vector& state,
                  const Vector& action, double dt) {
  if (state.size() != kStateDim || action.size() != kActionDim) {
    throw SimulationFault("state/action dimension mismatch");
  }
  if (!AllFinite(state) || !AllFinite(action)) {
    throw SimulationFault("non-finite state or action");
  }
  const double lim = model.torque_limit;
  const Eigen::Vector2d tau(std::clamp(action(0), -lim, lim),
                            std::clamp(action(1), -lim, lim));
  const Eigen::Vector2d qd(state(2), state(3));
  const Dynamics2 d = Terms(model, state(0), state(1), qd(0), qd(1));
  // viscous friction taken at the new velocity; explicit damping blows up
  // near the straight arm where the inertia is small
  const Eigen::Matrix2d lhs =
      d.mass + dt * model.friction * Eigen::Matrix2d::Identity();
  const Eigen::Vector2d qd_next =
      lhs.ldlt().solve(d.mass * qd + dt * (tau - d.bias));
  const double q1 = state(0) + dt * qd_next(0);
  const double q2 = state(1) + dt * qd_next(1);
  Vector next = MakeState(model, q1, q2, qd_next(0), qd_next(1));
  if (!AllFinite(next)) throw SimulationFault("integration diverged");
  return next;
}

Vector Step(const ArmModel& model, const Vector& state, const Vector& action) {
  return StepWithDt(model, state, action, model.dt);
}

double KineticEnergy(const ArmModel& model, const Vector& state) {
  const Eigen::Vector2d qd(state(2), state(3));
  const Dynamics2 d = Terms(model, state(0), state(1), qd(0), qd(1));
  return 0.5 * qd.dot(d.mass * qd);
}

double ReachCost(const ReachTask& task, const Vector& state,
                 const Vector& action) {
  const Vector err = state.segment(4, 2) - task.target;
  return task.w_x * err.squaredNorm() +
         task.w_vel * state.segment(2, 2).squaredNorm() +
         task.w_u * action.squaredNorm();
}

QuadraticCost MakeReachCost(const ReachTask& task, int horizon) {
  if (horizon < 1) throw DataError("horizon must be >= 1");
  if (task.target.size() != kGoalDim) throw DataError("target must be 2-D");
  const int dz = kStateDim + kActionDim;
  Matrix h = Matrix::Zero(dz, dz);
  Vector g = Vector::Zero(dz);
  h.block(4, 4, 2, 2).diagonal().setConstant(2.0 * task.w_x);
  h.block(2, 2, 2, 2).diagonal().setConstant(2.0 * task.w_vel);
  h.block(kStateDim, kStateDim, 2, 2).diagonal().setConstant(2.0 * task.w_u);
  g.segment(4, 2) = -2.0 * task.w_x * task.target;
  const double c = task.w_x * task.target.squaredNorm();
  QuadraticCost cost;
  cost.state_dim = kStateDim;
  cost.action_dim = kActionDim;
  cost.hessians.assign(horizon, h);
  cost.gradients.assign(horizon, g);
  cost.constants.assign(horizon, c);
  cost.source = task;
  return cost;
}

Vector Observation(const Vector& state, const Vector& goal) {
  Vector obs(state.size() + goal.size());
  obs << state, goal;
  return obs;
}

Trajectory Rollout(const ArmModel& model, const TaskInstance& instance,
                   const ActionFunction& policy, int horizon, std::uint64_t seed,
                   double pacing_seconds) {
  if (horizon < 1) throw DataError("horizon must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  RandomStream noise(seed);
  Trajectory traj;
  traj.instance_id = instance.instance_id;
  traj.states.reserve(horizon);
  traj.actions.reserve(horizon);
  traj.costs.reserve(horizon);
  Vector x = instance.initial_state;
  for (int t = 0; t < horizon; ++t) {
    Vector u = policy(t, x, Observation(x, instance.goal), noise);
    if (u.size() != kActionDim || !u.allFinite()) {
      throw SimulationFault("policy produced an invalid action");
    }
    const double cost = ReachCost(instance.cost, x, u);
    if (!std::isfinite(cost)) throw SimulationFault("non-finite cost");
    traj.costs.push_back(cost);
    traj.states.push_back(x);
    traj.actions.push_back(u);
    if (t + 1 < horizon) x = Step(model, x, u);
  }
  if (pacing_seconds > 0.0) {
    std::this_thread::sleep_until(
        start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(pacing_seconds)));
  }
  return traj;
}

void CheckReachable(const ArmModel& model, const GoalRegion& region) {
  if (region.lower.size() != 2 || region.upper.size() != 2 ||
      (region.upper.array() < region.lower.array()).any()) {
    throw ConfigError("goal region must be a 2-D box with lower <= upper");
  }
  const double outer = 0.95 * model.reach();
  const double inner =
      std::abs(model.link_lengths[0] - model.link_lengths[1]) + 0.05 * model.reach();
  // farthest point of the box from the origin is a corner
  double far = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double x = (i & 1) ? region.upper(0) : region.lower(0);
    const double y = (i & 2) ? region.upper(1) : region.lower(1);
    far = std::max(far, std::hypot(x, y));
  }
  const double cx = std::clamp(0.0, region.lower(0), region.upper(0));
  const double cy = std::clamp(0.0, region.lower(1), region.upper(1));
  const double near = std::hypot(cx, cy);
  if (far > outer) throw ConfigError("goal region exceeds the arm's reach");
  if (model.kind == PlantKind::kTwoLinkArm && near < inner) {
    throw ConfigError("goal region enters the arm's inner dead zone");
  }
}

std::vector<TaskInstance> MakeInstances(const ArmModel& model, int count,
                                        const GoalRegion& region,
                                        const Vector& initial_state,
                                        const ReachTask& cost_template,
                                        std::uint64_t seed, int first_id) {
  CheckReachable(model, region);
  if (count < 0) throw ConfigError("instance count must be >= 0");
  if (initial_state.size() != kStateDim) {
    throw ConfigError("initial state must have 6 entries");
  }
  RandomStream stream(StreamSeed(seed, StreamTag::kInstances, {}));
  std::vector<TaskInstance> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    TaskInstance inst;
    inst.instance_id = first_id + i;
    inst.initial_state = initial_state;
    inst.goal = Vector(2);
    inst.goal << stream.Uniform(region.lower(0), region.upper(0)),
        stream.Uniform(region.lower(1), region.upper(1));
    inst.cost = cost_template;
    inst.cost.target = inst.goal;
    out.push_back(std::move(inst));
  }
  return out;
}

InstanceSplit MakeInstanceSplit(const ArmModel& model, int train, int validation,
                                int test, const GoalRegion& region,
                                const Vector& initial_state,
                                const ReachTask& cost_template, std::uint64_t seed) {
  std::vector<TaskInstance> all =
      MakeInstances(model, train + validation + test, region, initial_state,
                    cost_template, seed, 0);
  InstanceSplit split;
  split.train.assign(all.begin(), all.begin() + train);
  split.validation.assign(all.begin() + train, all.begin() + train + validation);
  split.test.assign(all.begin() + train + validation, all.end());
  return split;
}

TaskInstance PerturbInstance(const ArmModel& model, const TaskInstance& instance,
                             double perturb_scale, std::uint64_t seed) {
  if (perturb_scale <= 0.0) return instance;
  RandomStream stream(seed);
  TaskInstance out = instance;
  out.goal(0) += stream.Uniform(-perturb_scale, perturb_scale);
  out.goal(1) += stream.Uniform(-perturb_scale, perturb_scale);
  const double r = out.goal.norm();
  const double outer = 0.95 * model.reach();
  if (r > outer) out.goal *= outer / r;
  out.cost.target = out.goal;
  return out;
}

}  // namespace adgps
