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

#ifndef ADGPS_GAUSSIAN_H_
#define ADGPS_GAUSSIAN_H_

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "adgps/errors.h"

namespace adgps {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

// Cholesky factor of an SPD matrix. No eigenvalue repair is attempted.
template <typename Derived>
Eigen::LLT<MatrixX<typename Derived::Scalar>> CholeskyOrThrow(
    const Eigen::MatrixBase<Derived>& spd, const char* what = "covariance") {
  using Scalar = typename Derived::Scalar;
  if (spd.rows() != spd.cols() || spd.rows() == 0) {
    throw DataError(std::string(what) + " must be square and nonempty");
  }
  if (!spd.allFinite()) {
    throw DegenerateCovarianceError(std::string(what) + " is not finite");
  }
  Eigen::LLT<MatrixX<Scalar>> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw DegenerateCovarianceError(std::string(what) +
                                    " is not positive definite");
  }
  // LLT only reads the lower triangle; catch asymmetric input explicitly.
  const Scalar scale = spd.cwiseAbs().maxCoeff();
  if ((spd - spd.transpose()).cwiseAbs().maxCoeff() >
      Scalar(1e-9) * (Scalar(1) + scale)) {
    throw DegenerateCovarianceError(std::string(what) + " is not symmetric");
  }
  return llt;
}

template <typename Scalar>
Scalar LogDetFromCholesky(const Eigen::LLT<MatrixX<Scalar>>& llt) {
  return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

// KL(N(mean_a, cov_a) || N(mean_b, cov_b)) in closed form.
template <typename DerivedA, typename DerivedB, typename DerivedC,
          typename DerivedD>
typename DerivedA::Scalar GaussianKl(const Eigen::MatrixBase<DerivedA>& mean_a,
                                     const Eigen::MatrixBase<DerivedB>& cov_a,
                                     const Eigen::MatrixBase<DerivedC>& mean_b,
                                     const Eigen::MatrixBase<DerivedD>& cov_b) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index n = mean_a.size();
  if (mean_b.size() != n || cov_a.rows() != n || cov_b.rows() != n) {
    throw DataError("GaussianKl: dimension mismatch");
  }
  const auto llt_a = CholeskyOrThrow(cov_a, "cov_a");
  const auto llt_b = CholeskyOrThrow(cov_b, "cov_b");
  const MatrixX<Scalar> prec_b_cov_a = llt_b.solve(cov_a.eval());
  const VectorX<Scalar> diff = (mean_b - mean_a).eval();
  const Scalar mahalanobis = diff.dot(llt_b.solve(diff));
  const Scalar kl =
      Scalar(0.5) * (prec_b_cov_a.trace() - Scalar(n) + mahalanobis +
                     LogDetFromCholesky(llt_b) - LogDetFromCholesky(llt_a));
  // Round-off can push identical distributions a hair below zero.
  return kl < Scalar(0) ? Scalar(0) : kl;
}

// log N(x; mean, cov).
template <typename DerivedX, typename DerivedM, typename DerivedC>
typename DerivedX::Scalar GaussianLogDensity(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedM>& mean,
    const Eigen::MatrixBase<DerivedC>& cov) {
  using Scalar = typename DerivedX::Scalar;
  const auto llt = CholeskyOrThrow(cov);
  const VectorX<Scalar> diff = (x - mean).eval();
  const VectorX<Scalar> white = llt.matrixL().solve(diff);
  return Scalar(-0.5) *
         (white.squaredNorm() + LogDetFromCholesky(llt) +
          Scalar(diff.size()) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>));
}

// Same, with a precomputed factorization of the covariance.
template <typename Scalar>
Scalar GaussianLogDensity(const VectorX<Scalar>& x, const VectorX<Scalar>& mean,
                          const Eigen::LLT<MatrixX<Scalar>>& cov_llt) {
  const VectorX<Scalar> white = cov_llt.matrixL().solve(x - mean);
  return Scalar(-0.5) *
         (white.squaredNorm() + LogDetFromCholesky(cov_llt) +
          Scalar(x.size()) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>));
}

template <typename Derived>
MatrixX<typename Derived::Scalar> Symmetrized(
    const Eigen::MatrixBase<Derived>& m) {
  return (typename Derived::Scalar(0.5) * (m + m.transpose())).eval();
}

}  // namespace adgps

#endif  // ADGPS_GAUSSIAN_H_
