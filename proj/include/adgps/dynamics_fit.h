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

#ifndef ADGPS_DYNAMICS_FIT_H_
#define ADGPS_DYNAMICS_FIT_H_

#include <span>
#include <vector>

#include "adgps/types.h"

namespace adgps {

struct AffineFit {
  Matrix weights;               // d_y x d_z
  Vector bias;                  // d_y
  Matrix residual_covariance;   // d_y x d_y, (1/N) sum r r^T
  double squared_error = 0.0;   // sum |r|^2
};

// Solves min_W,b sum_j |y_j - W z_j - b|^2 + ridge |W|_F^2 with samples as
// columns of `inputs` (d_z x N) and `outputs` (d_y x N). The bias is not
// penalized.
AffineFit RidgeAffineFit(const Matrix& inputs, const Matrix& outputs,
                         double ridge);

// ridge = relative * trace(S) / d_z where S is the centered scatter of inputs.
double RelativeRidge(const Matrix& inputs, double relative);

// Per-timestep least squares for [Fx Fu f]; N_t is the residual covariance
// plus ridge * I. Requires >= 2 trajectories with equal T >= 2.
LinGaussDynamics FitDynamics(std::span<const Trajectory> trajectories,
                             double ridge);

// As above, ridge chosen per timestep by RelativeRidge(., relative_ridge).
LinGaussDynamics FitDynamicsRelative(std::span<const Trajectory> trajectories,
                                     double relative_ridge = 1e-6);

// Affine model u ~ K_t x + k_t fit to (state, mean action) pairs at each step;
// C_t = covariance for every t. Used to linearize the global policy.
TimeVaryingLinGaussPolicy FitLinearPolicy(
    const std::vector<std::vector<Vector>>& states_by_step,
    const std::vector<std::vector<Vector>>& actions_by_step,
    const Matrix& covariance, double relative_ridge = 1e-6);

}  // namespace adgps

#endif  // ADGPS_DYNAMICS_FIT_H_
