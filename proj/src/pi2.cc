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

#include "adgps/pi2.h"

#include <cmath>

namespace adgps {
namespace {

// log mean_i exp(-S_i / eta), shifted by the minimum for stability.
double LogMeanExp(const Vector& costs, double eta) {
  const double min_cost = costs.minCoeff();
  const double sum = (-(costs.array() - min_cost) / eta).exp().sum();
  return -min_cost / eta + std::log(sum / static_cast<double>(costs.size()));
}

// Lifts `cov` so that cov >= floor in the Loewner order.
Matrix ApplyFloor(const Matrix& cov, const Matrix& floor) {
  const auto llt = CholeskyOrThrow(floor, "covariance floor");
  const Matrix L = llt.matrixL();
  const Matrix inner =
      L.triangularView<Eigen::Lower>().solve(
          L.triangularView<Eigen::Lower>().solve(cov).transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Symmetrized(inner));
  const Vector lifted = eig.eigenvalues().cwiseMax(1.0);
  const Matrix whitened =
      eig.eigenvectors() * lifted.asDiagonal() * eig.eigenvectors().transpose();
  return Symmetrized(L * whitened * L.transpose());
}

}  // namespace

void Pi2Batch::Validate() const {
  const int n = samples();
  if (n < 2) throw DataError("Pi2Batch: need at least 2 samples");
  const int T = horizon();
  if (T < 1) throw DataError("Pi2Batch: empty horizon");
  if (static_cast<int>(states.size()) != n || static_cast<int>(actions.size()) != n) {
    throw DataError("Pi2Batch: states/actions sample count differs from costs");
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(costs[i].size()) != T ||
        static_cast<int>(states[i].size()) != T ||
        static_cast<int>(actions[i].size()) != T) {
      throw DataError("Pi2Batch: batch is not rectangular");
    }
    for (double c : costs[i]) {
      if (!std::isfinite(c)) throw DataError("Pi2Batch: non-finite cost");
    }
  }
}

Pi2Batch Pi2Batch::FromTrajectories(const std::vector<Trajectory>& trajectories) {
  Pi2Batch batch;
  for (const auto& traj : trajectories) {
    batch.costs.push_back(traj.costs);
    batch.states.push_back(traj.states);
    batch.actions.push_back(traj.actions);
  }
  return batch;
}

Matrix CostToGo(const Pi2Batch& batch) {
  const int n = batch.samples();
  const int T = batch.horizon();
  Matrix S(n, T);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(batch.costs[i].size()) != T) {
      throw DataError("CostToGo: batch is not rectangular");
    }
    double running = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      running += batch.costs[i][t];
      S(i, t) = running;
    }
  }
  return S;
}

double RepsDual(const Vector& costs, double kl_bound, double eta) {
  return eta * kl_bound + eta * LogMeanExp(costs, eta);
}

Vector SoftmaxWeights(const Vector& costs, double eta) {
  Vector w = (-(costs.array() - costs.minCoeff()) / eta).exp().matrix();
  return w / w.sum();
}

double KlFromUniform(const Vector& weights) {
  double kl = std::log(static_cast<double>(weights.size()));
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) kl += weights[i] * std::log(weights[i]);
  }
  return kl < 0.0 ? 0.0 : kl;
}

double RepsTemperature(const Vector& costs_at_t, double kl_bound) {
  if (costs_at_t.size() < 2) throw DataError("RepsTemperature: need N >= 2");
  if (!(kl_bound > 0.0)) throw DataError("RepsTemperature: kl_bound must be > 0");
  if (!costs_at_t.allFinite()) throw DataError("RepsTemperature: non-finite cost");
  if (costs_at_t.maxCoeff() == costs_at_t.minCoeff()) return kTemperatureMax;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(kTemperatureMin);
  double b = std::log(kTemperatureMax);
  auto g = [&](double log_eta) {
    return RepsDual(costs_at_t, kl_bound, std::exp(log_eta));
  };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double gc = g(c);
  double gd = g(d);
  for (int iter = 0; iter < 200 && (b - a) > 1e-12; ++iter) {
    if (gc < gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - inv_phi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + inv_phi * (b - a);
      gd = g(d);
    }
  }
  double log_eta = 0.5 * (a + b);

  // KL(P || uniform) decreases in eta; enforce the bound exactly.
  auto kl_at = [&](double le) {
    return KlFromUniform(SoftmaxWeights(costs_at_t, std::exp(le)));
  };
  if (kl_at(log_eta) > kl_bound) {
    double lo = log_eta;
    double hi = std::log(kTemperatureMax);
    for (int iter = 0; iter < 100; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (kl_at(mid) > kl_bound) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    log_eta = hi;
  }
  return std::exp(log_eta);
}

TimeVaryingLinGaussPolicy Pi2Update(const TimeVaryingLinGaussPolicy& previous,
                                    const Pi2Batch& batch, double kl_bound,
                                    const Pi2Options& options) {
  batch.Validate();
  previous.Validate();
  const int T = batch.horizon();
  if (previous.horizon() != T) {
    throw DataError("Pi2Update: policy horizon differs from batch");
  }
  const int n = batch.samples();
  const Eigen::Index du = previous.action_dim();
  const Matrix S = CostToGo(batch);

  TimeVaryingLinGaussPolicy next = previous;
  Matrix residuals(du, n);
  for (int t = 0; t < T; ++t) {
    const Vector weights = SoftmaxWeights(S.col(t), RepsTemperature(S.col(t), kl_bound));
    for (int i = 0; i < n; ++i) {
      residuals.col(i) =
          batch.actions[i][t] - previous.gains[t] * batch.states[i][t];
    }
    const Vector mean = residuals * weights;
    const Matrix centered = residuals.colwise() - mean;
    Matrix cov = Symmetrized(centered * weights.asDiagonal() * centered.transpose());
    const double scale = cov.trace() / static_cast<double>(du);
    cov.diagonal().array() += options.covariance_regularization * scale;
    next.offsets[t] = mean;
    next.covariances[t] =
        ApplyFloor(cov, options.covariance_floor * previous.covariances[t]);
  }
  return next;
}

}  // namespace adgps
