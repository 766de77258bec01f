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

#ifndef ADGPS_GLOBAL_POLICY_H_
#define ADGPS_GLOBAL_POLICY_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "adgps/types.h"

namespace adgps {

// Fully connected network with softplus hidden units and a linear output.
struct NetworkArchitecture {
  int input_dim = 0;
  std::vector<int> hidden;  // empty: a single affine layer
  int output_dim = 0;

  int ParameterCount() const;
  // Layer widths input, hidden..., output.
  std::vector<int> Widths() const;
};

// Parameter layout per layer: weights (out x in, column-major), then bias.
struct GlobalPolicyParams {
  NetworkArchitecture architecture;
  Vector theta;
  std::uint64_t version = 0;
  Vector action_variance;  // diagonal of the fixed action covariance

  void Validate() const;
  Matrix ActionCovariance() const { return action_variance.asDiagonal(); }
};

// Scaled uniform fan-in initialization, U(-s/sqrt(fan_in), s/sqrt(fan_in))
// with s = 1 for hidden layers and s = output_scale for the output layer.
GlobalPolicyParams InitializePolicy(const NetworkArchitecture& architecture,
                                    std::uint64_t seed, double action_variance,
                                    double output_scale = 1.0);

// Mean action for one observation.
Vector PolicyForward(const GlobalPolicyParams& params, const Vector& obs);
// Columns of `observations` are inputs; columns of the result are means.
Matrix PolicyForwardBatch(const NetworkArchitecture& architecture,
                          const Vector& theta, const Matrix& observations);

struct SupervisedSample {
  Vector obs;
  Vector local_mean;
  Matrix local_precision;
  int instance_id = 0;
  int timestep = 0;
  double weight = 1.0;
};

// lambda_{i,t} per instance and step; step size alpha.
struct BadmmDualState {
  std::map<int, std::vector<Vector>> multipliers;
  double step_size = 0.1;

  const Vector* Find(int instance_id, int timestep) const;
};

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;
};

// loss = (1/B) sum_j w_j [1/2 (mu(o_j) - m_j)^T P_j (mu(o_j) - m_j)
//                         + lambda_j^T mu(o_j)]
// The dual term is present only when `duals` is given. Gradient by backprop.
LossAndGradient KlLossAndGrad(const GlobalPolicyParams& params,
                              std::span<const SupervisedSample> batch,
                              const BadmmDualState* duals = nullptr);

struct SgdState {
  Vector velocity;
};

// v <- momentum * v - lr * grad; returns v (the parameter delta). Throws
// RejectedUpdateError on non-finite gradients without touching `state`.
Vector MomentumDelta(const Vector& gradient, double learning_rate,
                     double momentum, SgdState& state);

// theta' = theta + MomentumDelta(...), version + 1.
GlobalPolicyParams SgdStep(const GlobalPolicyParams& params,
                           const Vector& gradient, double learning_rate,
                           double momentum, SgdState& state);

// One instance's samples for the dual step: states, their observations, and
// the local policy that labels them.
struct DualUpdateBatch {
  int instance_id = 0;
  std::vector<std::vector<Vector>> states;        // [sample][t]
  std::vector<std::vector<Vector>> observations;  // [sample][t]
  const TimeVaryingLinGaussPolicy* local_policy = nullptr;
};

// lambda_{i,t} += alpha * C_{i,t}^-1 * mean_samples(mu_theta(o) - mu_i(x)).
BadmmDualState BadmmDualUpdate(const BadmmDualState& duals,
                               std::span<const DualUpdateBatch> batches,
                               const GlobalPolicyParams& params);

}  // namespace adgps

#endif  // ADGPS_GLOBAL_POLICY_H_
