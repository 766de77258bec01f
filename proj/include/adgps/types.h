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

#ifndef ADGPS_TYPES_H_
#define ADGPS_TYPES_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "adgps/gaussian.h"
#include "adgps/rng.h"

namespace adgps {

// One rollout: aligned states, actions and per-step costs.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> actions;
  std::vector<double> costs;
  int instance_id = 0;
  int iteration_born = 0;

  int horizon() const { return static_cast<int>(states.size()); }
  int state_dim() const {
    return states.empty() ? 0 : static_cast<int>(states.front().size());
  }
  int action_dim() const {
    return actions.empty() ? 0 : static_cast<int>(actions.front().size());
  }

  // Throws DataError unless lengths agree, T >= 1, dimensions are uniform and
  // every entry is finite.
  void Validate() const;
};

// Sum of per-step costs.
double TrajectoryCost(const Trajectory& trajectory);

// p(u | x, t) = N(K_t x + k_t, C_t).
struct TimeVaryingLinGaussPolicy {
  std::vector<Matrix> gains;        // K_t, d_u x d_x
  std::vector<Vector> offsets;      // k_t, d_u
  std::vector<Matrix> covariances;  // C_t, d_u x d_u, SPD

  int horizon() const { return static_cast<int>(gains.size()); }
  int state_dim() const {
    return gains.empty() ? 0 : static_cast<int>(gains.front().cols());
  }
  int action_dim() const {
    return gains.empty() ? 0 : static_cast<int>(gains.front().rows());
  }

  Vector Mean(int t, const Vector& x) const {
    return gains[t] * x + offsets[t];
  }

  // Shape checks plus a Cholesky of every C_t.
  void Validate() const;

  // K = 0, k = 0, C = variance * I.
  static TimeVaryingLinGaussPolicy Constant(int horizon, int state_dim,
                                            int action_dim, double variance);
};

// Draws u = K_t x + k_t + noise_scale * L_t z, z ~ N(0, I) from `stream`.
// noise_scale == 0 returns the mean without factorizing C_t.
Vector PolicySample(const TimeVaryingLinGaussPolicy& policy, int t,
                    const Vector& x, RandomStream& stream,
                    double noise_scale = 1.0);
Vector PolicySample(const TimeVaryingLinGaussPolicy& policy, int t,
                    const Vector& x, std::uint64_t seed,
                    double noise_scale = 1.0);

// log p(u | x) under the policy at step t.
double PolicyLogDensity(const TimeVaryingLinGaussPolicy& policy, int t,
                        const Vector& x, const Vector& u);

// x_{t+1} ~ N(Fx_t x_t + Fu_t u_t + f_t, N_t) for t = 0..T-2, plus the
// initial-state distribution the model was fit from.
struct LinGaussDynamics {
  std::vector<Matrix> state_jacobians;   // Fx_t
  std::vector<Matrix> action_jacobians;  // Fu_t
  std::vector<Vector> biases;            // f_t
  std::vector<Matrix> noise;             // N_t, symmetric PSD
  Vector initial_mean;
  Matrix initial_covariance;

  // Number of states in the modeled trajectory (transitions + 1).
  int horizon() const { return static_cast<int>(state_jacobians.size()) + 1; }
  int state_dim() const { return static_cast<int>(initial_mean.size()); }
  int action_dim() const {
    return action_jacobians.empty()
               ? 0
               : static_cast<int>(action_jacobians.front().cols());
  }
  void Validate() const;
};

// Analytic reaching cost the quadratic expansion was generated from:
// w_x |ee - target|^2 + w_vel |qdot|^2 + w_u |u|^2.
struct ReachCostParams {
  Vector target;
  double w_x = 1.0;
  double w_u = 0.0;
  double w_vel = 0.0;
};

// l_t(x, u) = 1/2 z^T H_t z + g_t^T z + c_t with z = [x; u].
struct QuadraticCost {
  std::vector<Matrix> hessians;
  std::vector<Vector> gradients;
  std::vector<double> constants;
  int state_dim = 0;
  int action_dim = 0;
  std::optional<ReachCostParams> source;

  int horizon() const { return static_cast<int>(hessians.size()); }
  double Evaluate(int t, const Vector& x, const Vector& u) const;
  void Validate() const;

  // Time-invariant x^T Q x + u^T R u (no 1/2 factor).
  static QuadraticCost FromWeights(int horizon, const Matrix& state_weight,
                                   const Matrix& action_weight);
};

struct TaskInstance {
  int instance_id = 0;
  Vector initial_state;
  Vector goal;
  ReachCostParams cost;
};

}  // namespace adgps

#endif  // ADGPS_TYPES_H_
