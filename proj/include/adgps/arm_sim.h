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

#ifndef ADGPS_ARM_SIM_H_
#define ADGPS_ARM_SIM_H_

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "adgps/types.h"

namespace adgps {

// State layout shared by both plants: (q1, q2, qdot1, qdot2, ee_x, ee_y).
// For the point mass q is the position and ee == q.
inline constexpr int kStateDim = 6;
inline constexpr int kActionDim = 2;
inline constexpr int kGoalDim = 2;
inline constexpr int kObsDim = kStateDim + kGoalDim;

enum class PlantKind { kTwoLinkArm, kPointMass };

struct ArmModel {
  PlantKind kind = PlantKind::kTwoLinkArm;
  std::array<double, 2> link_lengths = {0.5, 0.5};
  std::array<double, 2> masses = {1.0, 1.0};
  double friction = 1.0;  // viscous, per joint
  bool gravity = false;
  double gravity_accel = 9.81;
  double dt = 0.05;
  int horizon = 100;
  double torque_limit = 3.0;

  double reach() const { return link_lengths[0] + link_lengths[1]; }
};

using ReachTask = ReachCostParams;

Vector ForwardKinematics(const ArmModel& model, double q1, double q2);
Vector MakeState(const ArmModel& model, double q1, double q2, double qd1 = 0.0,
                 double qd2 = 0.0);

// Semi-implicit Euler step of M(q) qdd + c(q, qd) + b qd + g(q) = tau with
// tau clamped to +-torque_limit; ee recomputed from q. Throws SimulationFault
// on a non-finite result.
Vector Step(const ArmModel& model, const Vector& state, const Vector& action);
// As Step, with a different integration step (for refinement checks).
Vector StepWithDt(const ArmModel& model, const Vector& state,
                  const Vector& action, double dt);

double KineticEnergy(const ArmModel& model, const Vector& state);

// w_x |ee - g|^2 + w_vel |qdot|^2 + w_u |u|^2.
double ReachCost(const ReachTask& task, const Vector& state, const Vector& action);
// Exact quadratic form of ReachCost in (x, u), repeated over the horizon.
QuadraticCost MakeReachCost(const ReachTask& task, int horizon);

Vector Observation(const Vector& state, const Vector& goal);

// Action for step t given the state and observation (state + goal).
using ActionFunction =
    std::function<Vector(int t, const Vector& state, const Vector& obs,
                         RandomStream& noise)>;

// Executes `policy` for `horizon` steps from the instance's initial state.
// If pacing_seconds > 0 the call lasts at least that long. A simulation fault
// discards the partial rollout and propagates.
Trajectory Rollout(const ArmModel& model, const TaskInstance& instance,
                   const ActionFunction& policy, int horizon, std::uint64_t seed,
                   double pacing_seconds = 0.0);

struct GoalRegion {
  Vector lower;  // 2-D box corners
  Vector upper;
};

// Throws ConfigError unless every point of the box lies in
// [|l1 - l2| + margin, 0.95 * (l1 + l2)] from the base.
void CheckReachable(const ArmModel& model, const GoalRegion& region);

// `count` instances with ids first_id..first_id+count-1 and goals drawn
// uniformly from the region.
std::vector<TaskInstance> MakeInstances(const ArmModel& model, int count,
                                        const GoalRegion& region,
                                        const Vector& initial_state,
                                        const ReachTask& cost_template,
                                        std::uint64_t seed, int first_id = 0);

struct InstanceSplit {
  std::vector<TaskInstance> train;
  std::vector<TaskInstance> validation;
  std::vector<TaskInstance> test;
};

// train/validation/test drawn from one stream with disjoint ids.
InstanceSplit MakeInstanceSplit(const ArmModel& model, int train, int validation,
                                int test, const GoalRegion& region,
                                const Vector& initial_state,
                                const ReachTask& cost_template, std::uint64_t seed);

// Goal moved uniformly within +-perturb_scale per axis, then pulled back
// inside the reachable annulus. perturb_scale == 0 returns the instance as is.
TaskInstance PerturbInstance(const ArmModel& model, const TaskInstance& instance,
                             double perturb_scale, std::uint64_t seed);

}  // namespace adgps

#endif  // ADGPS_ARM_SIM_H_
