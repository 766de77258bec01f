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

#include "adgps/lqr.h"

#include <cmath>
#include <limits>
#include <string>

namespace adgps {
namespace {

constexpr double kMuStart = 1e-6;
constexpr double kMuMax = 1e2;

void CheckShapes(const LinGaussDynamics& dynamics, const QuadraticCost& cost) {
  dynamics.Validate();
  cost.Validate();
  if (dynamics.horizon() != cost.horizon() ||
      dynamics.state_dim() != cost.state_dim ||
      (cost.horizon() > 1 && dynamics.action_dim() != cost.action_dim)) {
    throw DataError("dynamics and cost disagree in horizon or dimensions");
  }
}

QuadraticCost WithActionOffset(const QuadraticCost& cost,
                               std::span<const Vector> action_cost_offset) {
  if (action_cost_offset.empty()) return cost;
  if (static_cast<int>(action_cost_offset.size()) != cost.horizon()) {
    throw DataError("action cost offset length differs from horizon");
  }
  QuadraticCost shifted = cost;
  for (int t = 0; t < cost.horizon(); ++t) {
    shifted.gradients[t].tail(cost.action_dim) += action_cost_offset[t];
  }
  return shifted;
}

// cost / eta - log anchor(u | x), constant terms dropped.
QuadraticCost Surrogate(const TimeVaryingLinGaussPolicy& anchor,
                        const QuadraticCost& cost, double eta) {
  const int dx = cost.state_dim;
  const int du = cost.action_dim;
  QuadraticCost out = cost;
  for (int t = 0; t < cost.horizon(); ++t) {
    const auto llt = CholeskyOrThrow(anchor.covariances[t], "anchor covariance");
    const Matrix precision = llt.solve(Matrix::Identity(du, du));
    const Matrix& K = anchor.gains[t];
    const Vector& k = anchor.offsets[t];
    Matrix& H = out.hessians[t];
    Vector& g = out.gradients[t];
    H /= eta;
    g /= eta;
    out.constants[t] /= eta;
    const Matrix pk = precision * K;
    H.topLeftCorner(dx, dx) += K.transpose() * pk;
    H.topRightCorner(dx, du) -= pk.transpose();
    H.bottomLeftCorner(du, dx) -= pk;
    H.bottomRightCorner(du, du) += precision;
    g.head(dx) += pk.transpose() * k;
    g.tail(du) -= precision * k;
  }
  return out;
}

double PolicyKlAtState(const Matrix& dK, const Vector& dk,
                       const Matrix& cov, const Eigen::LLT<Matrix>& cov_llt,
                       const Eigen::LLT<Matrix>& anchor_llt,
                       const Vector& state_mean, const Matrix& state_cov) {
  const Eigen::Index du = cov.rows();
  const Vector mean_shift = dK * state_mean + dk;
  const double quad = mean_shift.dot(anchor_llt.solve(mean_shift)) +
                      (dK.transpose() * anchor_llt.solve(dK) * state_cov).trace();
  const double trace_term = anchor_llt.solve(cov).trace();
  const double kl = 0.5 * (trace_term - static_cast<double>(du) + quad +
                           LogDetFromCholesky(anchor_llt) -
                           LogDetFromCholesky(cov_llt));
  return kl < 0.0 ? 0.0 : kl;
}

}  // namespace

TimeVaryingLinGaussPolicy LqrBackward(const LinGaussDynamics& dynamics,
                                      const QuadraticCost& cost) {
  CheckShapes(dynamics, cost);
  const int T = cost.horizon();
  const int dx = cost.state_dim;
  const int du = cost.action_dim;
  const Matrix identity_u = Matrix::Identity(du, du);

  TimeVaryingLinGaussPolicy policy;
  policy.gains.resize(T);
  policy.offsets.resize(T);
  policy.covariances.resize(T);

  Matrix V = Matrix::Zero(dx, dx);
  Vector v = Vector::Zero(dx);
  Matrix F(dx, dx + du);
  for (int t = T - 1; t >= 0; --t) {
    Matrix Q = cost.hessians[t];
    Vector q = cost.gradients[t];
    if (t + 1 < T) {
      F << dynamics.state_jacobians[t], dynamics.action_jacobians[t];
      const Matrix VF = V * F;
      Q.noalias() += F.transpose() * VF;
      q.noalias() += F.transpose() * (V * dynamics.biases[t] + v);
    }
    Q = Symmetrized(Q);
    const Matrix Quu = Q.bottomRightCorner(du, du);
    const Matrix Qux = Q.bottomLeftCorner(du, dx);
    const Matrix Qxx = Q.topLeftCorner(dx, dx);
    const Vector qu = q.tail(du);
    const Vector qx = q.head(dx);

    double mu = 0.0;
    Eigen::LLT<Matrix> llt;
    while (true) {
      llt.compute(Quu + mu * identity_u);
      if (llt.info() == Eigen::Success && Quu.allFinite()) break;
      mu = (mu == 0.0) ? kMuStart : 2.0 * mu;
      if (mu > kMuMax || !Quu.allFinite()) {
        throw BackwardPassError("action Hessian not positive definite at t=" +
                                std::to_string(t));
      }
    }

    const Matrix K = -llt.solve(Qux);
    const Vector k = -llt.solve(qu);
    policy.gains[t] = K;
    policy.offsets[t] = k;
    policy.covariances[t] = Symmetrized(llt.solve(identity_u));

    const Matrix KtQuu = K.transpose() * Quu;
    V = Symmetrized(Qxx + KtQuu * K + K.transpose() * Qux +
                    Qux.transpose() * K);
    v = qx + KtQuu * k + K.transpose() * qu + Qux.transpose() * k;
  }
  return policy;
}

StateActionMarginals ForwardMarginals(const TimeVaryingLinGaussPolicy& policy,
                                      const LinGaussDynamics& dynamics) {
  const int T = policy.horizon();
  if (dynamics.horizon() != T) {
    throw DataError("ForwardMarginals: horizon mismatch");
  }
  const Eigen::Index dx = dynamics.state_dim();
  const Eigen::Index du = policy.action_dim();
  StateActionMarginals out;
  out.means.resize(T);
  out.covariances.resize(T);

  Vector mean_x = dynamics.initial_mean;
  Matrix cov_x = dynamics.initial_covariance;
  Matrix F(dx, dx + du);
  for (int t = 0; t < T; ++t) {
    const Matrix& K = policy.gains[t];
    Vector mean(dx + du);
    mean << mean_x, K * mean_x + policy.offsets[t];
    Matrix cov(dx + du, dx + du);
    const Matrix cross = K * cov_x;
    cov.topLeftCorner(dx, dx) = cov_x;
    cov.bottomLeftCorner(du, dx) = cross;
    cov.topRightCorner(dx, du) = cross.transpose();
    cov.bottomRightCorner(du, du) =
        Symmetrized(cross * K.transpose() + policy.covariances[t]);
    out.means[t] = mean;
    out.covariances[t] = cov;
    if (t + 1 < T) {
      F << dynamics.state_jacobians[t], dynamics.action_jacobians[t];
      mean_x = F * mean + dynamics.biases[t];
      cov_x = Symmetrized(F * cov * F.transpose() + dynamics.noise[t]);
    }
  }
  return out;
}

double ExpectedCost(const TimeVaryingLinGaussPolicy& policy,
                    const LinGaussDynamics& dynamics, const QuadraticCost& cost) {
  const StateActionMarginals marginals = ForwardMarginals(policy, dynamics);
  double total = 0.0;
  for (int t = 0; t < cost.horizon(); ++t) {
    const Vector& m = marginals.means[t];
    const Matrix& S = marginals.covariances[t];
    total += 0.5 * (m.dot(cost.hessians[t] * m) +
                    (cost.hessians[t] * S).trace()) +
             cost.gradients[t].dot(m) + cost.constants[t];
  }
  return total;
}

double TrajectoryKl(const TimeVaryingLinGaussPolicy& policy,
                    const TimeVaryingLinGaussPolicy& anchor,
                    const LinGaussDynamics& dynamics) {
  if (policy.horizon() != anchor.horizon()) {
    throw DataError("TrajectoryKl: horizon mismatch");
  }
  const StateActionMarginals marginals = ForwardMarginals(policy, dynamics);
  const Eigen::Index dx = dynamics.state_dim();
  double total = 0.0;
  for (int t = 0; t < policy.horizon(); ++t) {
    const auto cov_llt = CholeskyOrThrow(policy.covariances[t]);
    const auto anchor_llt = CholeskyOrThrow(anchor.covariances[t]);
    total += PolicyKlAtState(policy.gains[t] - anchor.gains[t],
                             policy.offsets[t] - anchor.offsets[t],
                             policy.covariances[t], cov_llt, anchor_llt,
                             marginals.means[t].head(dx),
                             marginals.covariances[t].topLeftCorner(dx, dx));
  }
  return total;
}

TimeVaryingLinGaussPolicy SolveForEta(const TimeVaryingLinGaussPolicy& anchor,
                                      const LinGaussDynamics& dynamics,
                                      const QuadraticCost& cost, double eta,
                                      std::span<const Vector> action_cost_offset) {
  if (!(eta > 0.0)) throw DataError("SolveForEta: eta must be positive");
  if (anchor.horizon() != cost.horizon()) {
    throw DataError("SolveForEta: anchor horizon differs from cost");
  }
  return LqrBackward(dynamics,
                     Surrogate(anchor, WithActionOffset(cost, action_cost_offset),
                               eta));
}

KlUpdateResult KlConstrainedUpdate(const TimeVaryingLinGaussPolicy& previous,
                                   const LinGaussDynamics& dynamics,
                                   const QuadraticCost& cost,
                                   const KlConstraintSpec& spec,
                                   std::span<const Vector> action_cost_offset) {
  if (!(spec.epsilon > 0.0)) {
    throw DataError("KlConstrainedUpdate: epsilon must be positive");
  }
  previous.Validate();
  const double lower = 0.9 * spec.epsilon;
  const double upper = 1.1 * spec.epsilon;

  KlUpdateResult best;
  double best_gap = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  auto evaluate = [&](double eta) {
    KlUpdateResult r;
    r.policy = SolveForEta(previous, dynamics, cost, eta, action_cost_offset);
    r.achieved_kl = TrajectoryKl(r.policy, previous, dynamics);
    r.eta = eta;
    ++evaluations;
    const double gap = std::abs(std::log(std::max(r.achieved_kl, 1e-300) /
                                         spec.epsilon));
    if (gap < best_gap) {
      best_gap = gap;
      best = r;
    }
    return r;
  };
  auto finish = [&](KlUpdateResult r, KlUpdateStatus status) {
    r.status = status;
    r.iterations = evaluations;
    return r;
  };

  KlUpdateResult at_min = evaluate(kEtaMin);
  if (at_min.achieved_kl <= upper) {
    if (at_min.achieved_kl >= lower) {
      return finish(at_min, KlUpdateStatus::kConverged);
    }
    KlUpdateResult free;
    free.policy =
        LqrBackward(dynamics, WithActionOffset(cost, action_cost_offset));
    free.achieved_kl = TrajectoryKl(free.policy, previous, dynamics);
    free.eta = kEtaMin;
    if (free.achieved_kl <= upper) {
      return finish(free, KlUpdateStatus::kInactive);
    }
    return finish(at_min, KlUpdateStatus::kInactive);
  }
  KlUpdateResult at_max = evaluate(kEtaMax);
  if (at_max.achieved_kl > upper) {
    return finish(at_max, KlUpdateStatus::kInfeasible);
  }
  if (at_max.achieved_kl >= lower) {
    return finish(at_max, KlUpdateStatus::kConverged);
  }

  // Invariant: KL(lo) > upper, KL(hi) < lower; KL is non-increasing in eta.
  double log_lo = std::log(kEtaMin);
  double log_hi = std::log(kEtaMax);
  const double log_step = std::log(10.0);

  // Geometric bracketing outward from eta = 1.
  double log_eta = 0.0;
  int direction = 0;
  while (evaluations < kMaxDualIterations) {
    KlUpdateResult r = evaluate(std::exp(log_eta));
    if (r.achieved_kl >= lower && r.achieved_kl <= upper) {
      return finish(r, KlUpdateStatus::kConverged);
    }
    if (r.achieved_kl > upper) {
      log_lo = log_eta;
      if (direction < 0) break;
      direction = 1;
      log_eta += log_step;
    } else {
      log_hi = log_eta;
      if (direction > 0) break;
      direction = -1;
      log_eta -= log_step;
    }
    if (log_eta <= log_lo || log_eta >= log_hi) break;
  }

  while (evaluations < kMaxDualIterations) {
    log_eta = 0.5 * (log_lo + log_hi);
    KlUpdateResult r = evaluate(std::exp(log_eta));
    if (r.achieved_kl >= lower && r.achieved_kl <= upper) {
      return finish(r, KlUpdateStatus::kConverged);
    }
    if (r.achieved_kl > upper) {
      log_lo = log_eta;
    } else {
      log_hi = log_eta;
    }
  }
  return finish(best, KlUpdateStatus::kNotConverged);
}

}  // namespace adgps
