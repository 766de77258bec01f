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

#include "adgps/types.h"

#include <cmath>
#include <string>

namespace adgps {
namespace {

void Require(bool condition, const std::string& message) {
  if (!condition) throw DataError(message);
}

}  // namespace

void Trajectory::Validate() const {
  const int T = horizon();
  Require(T >= 1, "trajectory is empty");
  Require(static_cast<int>(actions.size()) == T &&
              static_cast<int>(costs.size()) == T,
          "trajectory states/actions/costs lengths differ");
  const Eigen::Index dx = states.front().size();
  const Eigen::Index du = actions.front().size();
  for (int t = 0; t < T; ++t) {
    Require(states[t].size() == dx, "trajectory state dimension varies");
    Require(actions[t].size() == du, "trajectory action dimension varies");
    Require(states[t].allFinite() && actions[t].allFinite() &&
                std::isfinite(costs[t]),
            "trajectory contains non-finite values");
  }
}

double TrajectoryCost(const Trajectory& trajectory) {
  double total = 0.0;
  for (double c : trajectory.costs) total += c;
  return total;
}

void TimeVaryingLinGaussPolicy::Validate() const {
  const int T = horizon();
  Require(T >= 1, "policy has zero horizon");
  Require(static_cast<int>(offsets.size()) == T &&
              static_cast<int>(covariances.size()) == T,
          "policy per-timestep arrays differ in length");
  const Eigen::Index du = gains.front().rows();
  const Eigen::Index dx = gains.front().cols();
  for (int t = 0; t < T; ++t) {
    Require(gains[t].rows() == du && gains[t].cols() == dx,
            "policy gain shape varies");
    Require(offsets[t].size() == du, "policy offset shape varies");
    Require(covariances[t].rows() == du && covariances[t].cols() == du,
            "policy covariance shape varies");
    CholeskyOrThrow(covariances[t], "policy covariance");
  }
}

TimeVaryingLinGaussPolicy TimeVaryingLinGaussPolicy::Constant(
    int horizon, int state_dim, int action_dim, double variance) {
  TimeVaryingLinGaussPolicy p;
  p.gains.assign(horizon, Matrix::Zero(action_dim, state_dim));
  p.offsets.assign(horizon, Vector::Zero(action_dim));
  p.covariances.assign(horizon,
                       variance * Matrix::Identity(action_dim, action_dim));
  return p;
}

Vector PolicySample(const TimeVaryingLinGaussPolicy& policy, int t,
                    const Vector& x, RandomStream& stream, double noise_scale) {
  if (t < 0 || t >= policy.horizon()) throw DataError("PolicySample: t out of range");
  if (x.size() != policy.state_dim()) {
    throw DataError("PolicySample: state dimension mismatch");
  }
  Vector u = policy.Mean(t, x);
  if (noise_scale == 0.0) return u;
  const auto llt = CholeskyOrThrow(policy.covariances[t], "policy covariance");
  const Vector z = stream.StandardNormal(u.size());
  u += noise_scale * Vector(llt.matrixL() * z);
  return u;
}

Vector PolicySample(const TimeVaryingLinGaussPolicy& policy, int t,
                    const Vector& x, std::uint64_t seed, double noise_scale) {
  RandomStream stream(seed);
  return PolicySample(policy, t, x, stream, noise_scale);
}

double PolicyLogDensity(const TimeVaryingLinGaussPolicy& policy, int t,
                        const Vector& x, const Vector& u) {
  return GaussianLogDensity(u, policy.Mean(t, x), policy.covariances[t]);
}

void LinGaussDynamics::Validate() const {
  const int transitions = static_cast<int>(state_jacobians.size());
  Require(static_cast<int>(action_jacobians.size()) == transitions &&
              static_cast<int>(biases.size()) == transitions &&
              static_cast<int>(noise.size()) == transitions,
          "dynamics per-timestep arrays differ in length");
  const Eigen::Index dx = initial_mean.size();
  Require(initial_covariance.rows() == dx && initial_covariance.cols() == dx,
          "dynamics initial covariance shape");
  for (int t = 0; t < transitions; ++t) {
    Require(state_jacobians[t].rows() == dx && state_jacobians[t].cols() == dx,
            "dynamics Fx shape");
    Require(action_jacobians[t].rows() == dx, "dynamics Fu shape");
    Require(action_jacobians[t].cols() == action_jacobians.front().cols(),
            "dynamics Fu shape varies");
    Require(biases[t].size() == dx, "dynamics bias shape");
    Require(noise[t].rows() == dx && noise[t].cols() == dx,
            "dynamics noise shape");
  }
}

double QuadraticCost::Evaluate(int t, const Vector& x, const Vector& u) const {
  Vector z(state_dim + action_dim);
  z << x, u;
  return 0.5 * z.dot(hessians[t] * z) + gradients[t].dot(z) + constants[t];
}

void QuadraticCost::Validate() const {
  const int T = horizon();
  const int n = state_dim + action_dim;
  Require(T >= 1, "cost has zero horizon");
  Require(static_cast<int>(gradients.size()) == T &&
              static_cast<int>(constants.size()) == T,
          "cost per-timestep arrays differ in length");
  for (int t = 0; t < T; ++t) {
    Require(hessians[t].rows() == n && hessians[t].cols() == n,
            "cost Hessian shape");
    Require(gradients[t].size() == n, "cost gradient shape");
    Require((hessians[t] - hessians[t].transpose()).cwiseAbs().maxCoeff() <=
                1e-9 * (1.0 + hessians[t].cwiseAbs().maxCoeff()),
            "cost Hessian not symmetric");
  }
}

QuadraticCost QuadraticCost::FromWeights(int horizon, const Matrix& state_weight,
                                         const Matrix& action_weight) {
  const int dx = static_cast<int>(state_weight.rows());
  const int du = static_cast<int>(action_weight.rows());
  Matrix h = Matrix::Zero(dx + du, dx + du);
  h.topLeftCorner(dx, dx) = 2.0 * Symmetrized(state_weight);
  h.bottomRightCorner(du, du) = 2.0 * Symmetrized(action_weight);
  QuadraticCost cost;
  cost.state_dim = dx;
  cost.action_dim = du;
  cost.hessians.assign(horizon, h);
  cost.gradients.assign(horizon, Vector::Zero(dx + du));
  cost.constants.assign(horizon, 0.0);
  return cost;
}

}  // namespace adgps
