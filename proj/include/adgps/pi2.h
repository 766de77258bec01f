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

#ifndef ADGPS_PI2_H_
#define ADGPS_PI2_H_

#include <vector>

#include "adgps/types.h"

namespace adgps {

// N rollouts of one local policy: costs[i][t], and the executed states and
// actions of each rollout.
struct Pi2Batch {
  std::vector<std::vector<double>> costs;
  std::vector<std::vector<Vector>> states;
  std::vector<std::vector<Vector>> actions;

  int samples() const { return static_cast<int>(costs.size()); }
  int horizon() const { return costs.empty() ? 0 : static_cast<int>(costs.front().size()); }
  // N >= 2, rectangular, and states/actions aligned with costs.
  void Validate() const;

  static Pi2Batch FromTrajectories(const std::vector<Trajectory>& trajectories);
};

inline constexpr double kTemperatureMin = 1e-6;
inline constexpr double kTemperatureMax = 1e8;

// S[i][t] = sum_{j >= t} costs[i][j].
Matrix CostToGo(const Pi2Batch& batch);

// REPS dual g(eta) = eta * kl_bound + eta * log mean_i exp(-S_i / eta).
double RepsDual(const Vector& costs, double kl_bound, double eta);

// Soft-max weights P_i proportional to exp(-S_i / eta).
Vector SoftmaxWeights(const Vector& costs, double eta);

// KL(P || uniform) = log N + sum_i P_i log P_i.
double KlFromUniform(const Vector& weights);

// Minimizes RepsDual over [kTemperatureMin, kTemperatureMax] by golden-section
// search on log eta, then nudges eta upward if needed so the induced weights
// respect the bound. Equal costs return kTemperatureMax.
double RepsTemperature(const Vector& costs_at_t, double kl_bound);

struct Pi2Options {
  double covariance_regularization = 1e-6;  // times trace / d_u
  double covariance_floor = 1e-3;           // times previous C_t
};

// Reweights feedforward residuals u - K_t x by the per-step REPS soft-max:
// k_t is their weighted mean, C_t their weighted covariance (regularized and
// floored); K_t is kept.
TimeVaryingLinGaussPolicy Pi2Update(const TimeVaryingLinGaussPolicy& previous,
                                    const Pi2Batch& batch, double kl_bound,
                                    const Pi2Options& options = {});

}  // namespace adgps

#endif  // ADGPS_PI2_H_
