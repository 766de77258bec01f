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

#ifndef ADGPS_LQR_H_
#define ADGPS_LQR_H_

#include <span>
#include <vector>

#include "adgps/types.h"

namespace adgps {

// Which distribution the per-update KL budget is measured against. The
// anchor policy itself is passed to KlConstrainedUpdate; this tag records
// where it came from.
enum class KlAnchor {
  kPreviousLocal,     // BADMM: previous local policy
  kGlobalLinearized,  // MDGPS: global policy linearized along the samples
};

struct KlConstraintSpec {
  double epsilon = 1.0;
  KlAnchor anchor = KlAnchor::kPreviousLocal;
};

enum class KlUpdateStatus {
  kConverged,      // achieved KL within [0.9, 1.1] * epsilon
  kInactive,       // constraint slack at the smallest eta
  kInfeasible,     // KL above 1.1 * epsilon even at the largest eta
  kNotConverged,   // iteration budget spent; closest candidate returned
};

struct KlUpdateResult {
  TimeVaryingLinGaussPolicy policy;
  double achieved_kl = 0.0;
  double eta = 0.0;
  KlUpdateStatus status = KlUpdateStatus::kConverged;
  int iterations = 0;
};

inline constexpr double kEtaMin = 1e-4;
inline constexpr double kEtaMax = 1e6;
inline constexpr int kMaxDualIterations = 40;

// Maximum-entropy LQR: K_t = -Quu^-1 Qux, k_t = -Quu^-1 qu, C_t = Quu^-1.
// Quu is regularized by mu * I, mu doubling from 1e-6 to 1e2, whenever its
// Cholesky fails.
TimeVaryingLinGaussPolicy LqrBackward(const LinGaussDynamics& dynamics,
                                      const QuadraticCost& cost);

// Per-step Gaussian marginals of z_t = [x_t; u_t] under the policy and model.
struct StateActionMarginals {
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
};
StateActionMarginals ForwardMarginals(const TimeVaryingLinGaussPolicy& policy,
                                      const LinGaussDynamics& dynamics);

// E[sum_t l_t(x_t, u_t)] under the policy and model.
double ExpectedCost(const TimeVaryingLinGaussPolicy& policy,
                    const LinGaussDynamics& dynamics, const QuadraticCost& cost);

// sum_t E_{x_t ~ p}[KL(p(u|x_t) || anchor(u|x_t))], state marginals
// propagated through `dynamics` under `policy`.
double TrajectoryKl(const TimeVaryingLinGaussPolicy& policy,
                    const TimeVaryingLinGaussPolicy& anchor,
                    const LinGaussDynamics& dynamics);

// Solves the surrogate problem with cost l / eta - log anchor(u | x) (plus
// an optional per-step linear action term offset_t^T u / eta).
TimeVaryingLinGaussPolicy SolveForEta(
    const TimeVaryingLinGaussPolicy& anchor, const LinGaussDynamics& dynamics,
    const QuadraticCost& cost, double eta,
    std::span<const Vector> action_cost_offset = {});

// Dual search over eta in [kEtaMin, kEtaMax]: geometric bracketing from 1,
// then bisection on log eta, until TrajectoryKl lies in [0.9, 1.1] * epsilon.
// When the constraint is slack at kEtaMin, the unconstrained LqrBackward
// solution is returned if it also satisfies the budget.
KlUpdateResult KlConstrainedUpdate(
    const TimeVaryingLinGaussPolicy& previous, const LinGaussDynamics& dynamics,
    const QuadraticCost& cost, const KlConstraintSpec& spec,
    std::span<const Vector> action_cost_offset = {});

}  // namespace adgps

#endif  // ADGPS_LQR_H_
