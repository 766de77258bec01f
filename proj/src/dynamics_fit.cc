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

#include "adgps/dynamics_fit.h"

#include <string>

namespace adgps {
namespace {

Matrix CenteredScatter(const Matrix& samples, const Vector& mean) {
  const Matrix centered = samples.colwise() - mean;
  return centered * centered.transpose();
}

void CheckFinite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw DataError(std::string(what) + " contains NaN/Inf");
}

}  // namespace

AffineFit RidgeAffineFit(const Matrix& inputs, const Matrix& outputs,
                         double ridge) {
  if (inputs.cols() != outputs.cols() || inputs.cols() == 0) {
    throw DataError("RidgeAffineFit: sample counts differ or are zero");
  }
  if (!(ridge >= 0.0)) throw DataError("RidgeAffineFit: ridge must be >= 0");
  CheckFinite(inputs, "regression inputs");
  CheckFinite(outputs, "regression targets");

  const Eigen::Index n = inputs.cols();
  const Eigen::Index dz = inputs.rows();
  if (ridge == 0.0 && n < dz + 1) {
    throw UnderdeterminedFitError(
        "RidgeAffineFit: " + std::to_string(n) + " samples for " +
        std::to_string(dz + 1) + " unknowns with ridge = 0");
  }

  const Vector z_mean = inputs.rowwise().mean();
  const Vector y_mean = outputs.rowwise().mean();
  const Matrix zc = inputs.colwise() - z_mean;
  const Matrix yc = outputs.colwise() - y_mean;

  Matrix gram = zc * zc.transpose();
  gram.diagonal().array() += ridge;
  const Matrix cross = zc * yc.transpose();  // d_z x d_y

  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ridge == 0.0 &&
       ldlt.vectorD().cwiseAbs().minCoeff() <=
           1e-14 * (1.0 + ldlt.vectorD().cwiseAbs().maxCoeff()))) {
    throw UnderdeterminedFitError("RidgeAffineFit: singular normal equations");
  }

  AffineFit fit;
  fit.weights = ldlt.solve(cross).transpose();
  fit.bias = y_mean - fit.weights * z_mean;
  const Matrix residual =
      (outputs - fit.weights * inputs).colwise() - fit.bias;
  fit.residual_covariance =
      Symmetrized(residual * residual.transpose()) / static_cast<double>(n);
  fit.squared_error = residual.squaredNorm();
  return fit;
}

double RelativeRidge(const Matrix& inputs, double relative) {
  const Vector mean = inputs.rowwise().mean();
  return relative * CenteredScatter(inputs, mean).trace() /
         static_cast<double>(inputs.rows());
}

namespace {

LinGaussDynamics FitDynamicsImpl(std::span<const Trajectory> trajectories,
                                 double ridge, bool relative) {
  if (trajectories.size() < 2) {
    throw UnderdeterminedFitError("FitDynamics: need at least 2 trajectories");
  }
  if (!(ridge >= 0.0)) throw DataError("FitDynamics: ridge must be >= 0");
  for (const auto& traj : trajectories) traj.Validate();
  const Trajectory& first = trajectories.front();
  const int T = first.horizon();
  const int dx = first.state_dim();
  const int du = first.action_dim();
  for (const auto& traj : trajectories) {
    if (traj.horizon() != T || traj.state_dim() != dx ||
        traj.action_dim() != du) {
      throw DataError("FitDynamics: trajectories disagree in shape");
    }
  }
  if (T < 2) throw DataError("FitDynamics: T = 1 has no transitions to fit");

  const auto n = static_cast<Eigen::Index>(trajectories.size());
  LinGaussDynamics dyn;
  dyn.state_jacobians.resize(T - 1);
  dyn.action_jacobians.resize(T - 1);
  dyn.biases.resize(T - 1);
  dyn.noise.resize(T - 1);

  Matrix inputs(dx + du, n);
  Matrix targets(dx, n);
  for (int t = 0; t + 1 < T; ++t) {
    for (Eigen::Index j = 0; j < n; ++j) {
      inputs.col(j) << trajectories[j].states[t], trajectories[j].actions[t];
      targets.col(j) = trajectories[j].states[t + 1];
    }
    double lambda = relative ? RelativeRidge(inputs, ridge) : ridge;
    if (relative && lambda <= 0.0) lambda = 1e-12;
    AffineFit fit = RidgeAffineFit(inputs, targets, lambda);
    dyn.state_jacobians[t] = fit.weights.leftCols(dx);
    dyn.action_jacobians[t] = fit.weights.rightCols(du);
    dyn.biases[t] = fit.bias;
    dyn.noise[t] = fit.residual_covariance;
    dyn.noise[t].diagonal().array() += lambda;
  }

  Matrix x0(dx, n);
  for (Eigen::Index j = 0; j < n; ++j) x0.col(j) = trajectories[j].states[0];
  dyn.initial_mean = x0.rowwise().mean();
  dyn.initial_covariance =
      CenteredScatter(x0, dyn.initial_mean) / static_cast<double>(n);
  const double x0_ridge = relative ? RelativeRidge(x0, ridge) : ridge;
  dyn.initial_covariance.diagonal().array() += x0_ridge;
  return dyn;
}

}  // namespace

LinGaussDynamics FitDynamics(std::span<const Trajectory> trajectories,
                             double ridge) {
  return FitDynamicsImpl(trajectories, ridge, /*relative=*/false);
}

LinGaussDynamics FitDynamicsRelative(std::span<const Trajectory> trajectories,
                                     double relative_ridge) {
  return FitDynamicsImpl(trajectories, relative_ridge, /*relative=*/true);
}

TimeVaryingLinGaussPolicy FitLinearPolicy(
    const std::vector<std::vector<Vector>>& states_by_step,
    const std::vector<std::vector<Vector>>& actions_by_step,
    const Matrix& covariance, double relative_ridge) {
  const int T = static_cast<int>(states_by_step.size());
  if (T == 0 || static_cast<int>(actions_by_step.size()) != T) {
    throw DataError("FitLinearPolicy: mismatched horizons");
  }
  TimeVaryingLinGaussPolicy policy;
  policy.gains.resize(T);
  policy.offsets.resize(T);
  policy.covariances.assign(T, covariance);
  for (int t = 0; t < T; ++t) {
    const auto& xs = states_by_step[t];
    const auto& us = actions_by_step[t];
    if (xs.empty() || xs.size() != us.size()) {
      throw DataError("FitLinearPolicy: mismatched sample counts");
    }
    Matrix inputs(xs.front().size(), static_cast<Eigen::Index>(xs.size()));
    Matrix targets(us.front().size(), static_cast<Eigen::Index>(us.size()));
    for (std::size_t j = 0; j < xs.size(); ++j) {
      inputs.col(j) = xs[j];
      targets.col(j) = us[j];
    }
    double lambda = RelativeRidge(inputs, relative_ridge);
    // Identical states (e.g. the fixed initial state) carry no slope
    // information; fall back to a tiny absolute ridge.
    if (lambda <= 0.0) lambda = 1e-12;
    const AffineFit fit = RidgeAffineFit(inputs, targets, lambda);
    policy.gains[t] = fit.weights;
    policy.offsets[t] = fit.bias;
  }
  return policy;
}

}  // namespace adgps
