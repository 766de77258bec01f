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

#include "adgps/global_policy.h"

#include <cmath>
#include <string>

namespace adgps {
namespace {

double Softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct LayerView {
  Eigen::Map<const Matrix> weights;
  Eigen::Map<const Vector> bias;
};

LayerView Layer(const Vector& theta, Eigen::Index offset, int in, int out) {
  return {Eigen::Map<const Matrix>(theta.data() + offset, out, in),
          Eigen::Map<const Vector>(theta.data() + offset + in * out, out)};
}

// Forward pass keeping pre-activations for backprop.
struct Activations {
  std::vector<Matrix> inputs;          // input to each layer
  std::vector<Matrix> preactivations;  // z of each layer
  Matrix output;
};

Activations Forward(const NetworkArchitecture& arch, const Vector& theta,
                    const Matrix& observations, bool keep) {
  const std::vector<int> widths = arch.Widths();
  const int layers = static_cast<int>(widths.size()) - 1;
  Activations act;
  Matrix a = observations;
  Eigen::Index offset = 0;
  for (int l = 0; l < layers; ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const LayerView layer = Layer(theta, offset, in, out);
    Matrix z = layer.weights * a;
    z.colwise() += layer.bias;
    if (keep) act.inputs.push_back(a);
    offset += static_cast<Eigen::Index>(in) * out + out;
    if (l + 1 < layers) {
      a = z.unaryExpr([](double v) { return Softplus(v); });
      if (keep) act.preactivations.push_back(std::move(z));
    } else {
      a = std::move(z);
    }
  }
  act.output = std::move(a);
  return act;
}

}  // namespace

std::vector<int> NetworkArchitecture::Widths() const {
  std::vector<int> widths;
  widths.push_back(input_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  return widths;
}

int NetworkArchitecture::ParameterCount() const {
  const std::vector<int> widths = Widths();
  int count = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    count += widths[l] * widths[l + 1] + widths[l + 1];
  }
  return count;
}

void GlobalPolicyParams::Validate() const {
  if (architecture.input_dim <= 0 || architecture.output_dim <= 0) {
    throw DataError("network input/output dimensions must be positive");
  }
  for (int h : architecture.hidden) {
    if (h <= 0) throw DataError("hidden layer width must be positive");
  }
  if (theta.size() != architecture.ParameterCount()) {
    throw DataError("parameter vector length " + std::to_string(theta.size()) +
                    " does not match architecture (" +
                    std::to_string(architecture.ParameterCount()) + ")");
  }
  if (action_variance.size() != architecture.output_dim ||
      !(action_variance.array() > 0.0).all()) {
    throw DataError("action variance must be positive with one entry per output");
  }
}

GlobalPolicyParams InitializePolicy(const NetworkArchitecture& architecture,
                                    std::uint64_t seed, double action_variance,
                                    double output_scale) {
  GlobalPolicyParams params;
  params.architecture = architecture;
  params.theta.resize(architecture.ParameterCount());
  params.action_variance =
      Vector::Constant(architecture.output_dim, action_variance);
  RandomStream stream(seed);
  const std::vector<int> widths = architecture.Widths();
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double scale = l + 2 == widths.size() ? output_scale : 1.0;
    const double bound = scale / std::sqrt(static_cast<double>(widths[l]));
    const Eigen::Index n = static_cast<Eigen::Index>(widths[l]) * widths[l + 1] +
                           widths[l + 1];
    for (Eigen::Index i = 0; i < n; ++i) {
      params.theta[offset + i] = stream.Uniform(-bound, bound);
    }
    offset += n;
  }
  params.Validate();
  return params;
}

Matrix PolicyForwardBatch(const NetworkArchitecture& architecture,
                          const Vector& theta, const Matrix& observations) {
  if (observations.rows() != architecture.input_dim) {
    throw DataError("observation dimension " +
                    std::to_string(observations.rows()) +
                    " does not match network input " +
                    std::to_string(architecture.input_dim));
  }
  if (theta.size() != architecture.ParameterCount()) {
    throw DataError("parameter vector length does not match architecture");
  }
  return Forward(architecture, theta, observations, /*keep=*/false).output;
}

Vector PolicyForward(const GlobalPolicyParams& params, const Vector& obs) {
  return PolicyForwardBatch(params.architecture, params.theta, obs);
}

const Vector* BadmmDualState::Find(int instance_id, int timestep) const {
  auto it = multipliers.find(instance_id);
  if (it == multipliers.end() || timestep < 0 ||
      timestep >= static_cast<int>(it->second.size())) {
    return nullptr;
  }
  return &it->second[timestep];
}

LossAndGradient KlLossAndGrad(const GlobalPolicyParams& params,
                              std::span<const SupervisedSample> batch,
                              const BadmmDualState* duals) {
  if (batch.empty()) throw DataError("KlLossAndGrad: empty batch");
  const NetworkArchitecture& arch = params.architecture;
  const int du = arch.output_dim;
  const auto b = static_cast<Eigen::Index>(batch.size());

  Matrix observations(arch.input_dim, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    if (batch[j].obs.size() != arch.input_dim ||
        batch[j].local_mean.size() != du ||
        batch[j].local_precision.rows() != du ||
        batch[j].local_precision.cols() != du) {
      throw DataError("KlLossAndGrad: sample dimension mismatch");
    }
    observations.col(j) = batch[j].obs;
  }
  const Activations act = Forward(arch, params.theta, observations, /*keep=*/true);

  const double inv_b = 1.0 / static_cast<double>(b);
  double loss = 0.0;
  Matrix delta(du, b);  // d loss / d output
  for (Eigen::Index j = 0; j < b; ++j) {
    const SupervisedSample& s = batch[j];
    try {
      CholeskyOrThrow(s.local_precision, "local precision");
    } catch (const DegenerateCovarianceError& e) {
      throw DataError(e.what());
    }
    const Vector diff = act.output.col(j) - s.local_mean;
    const Vector pdiff = s.local_precision * diff;
    double sample_loss = 0.5 * diff.dot(pdiff);
    Vector grad_out = pdiff;
    if (duals != nullptr) {
      if (const Vector* lambda = duals->Find(s.instance_id, s.timestep)) {
        sample_loss += lambda->dot(act.output.col(j));
        grad_out += *lambda;
      }
    }
    loss += s.weight * sample_loss;
    delta.col(j) = (s.weight * inv_b) * grad_out;
  }

  LossAndGradient result;
  result.loss = loss * inv_b;
  result.gradient = Vector::Zero(params.theta.size());
  const std::vector<int> widths = arch.Widths();
  const int layers = static_cast<int>(widths.size()) - 1;
  std::vector<Eigen::Index> offsets(layers);
  Eigen::Index offset = 0;
  for (int l = 0; l < layers; ++l) {
    offsets[l] = offset;
    offset += static_cast<Eigen::Index>(widths[l]) * widths[l + 1] + widths[l + 1];
  }
  for (int l = layers - 1; l >= 0; --l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    Eigen::Map<Matrix> grad_w(result.gradient.data() + offsets[l], out, in);
    Eigen::Map<Vector> grad_b(result.gradient.data() + offsets[l] + in * out, out);
    grad_w.noalias() = delta * act.inputs[l].transpose();
    grad_b = delta.rowwise().sum();
    if (l > 0) {
      const LayerView layer = Layer(params.theta, offsets[l], in, out);
      Matrix back = layer.weights.transpose() * delta;
      delta = back.cwiseProduct(act.preactivations[l - 1].unaryExpr(
          [](double v) { return Sigmoid(v); }));
    }
  }
  return result;
}

Vector MomentumDelta(const Vector& gradient, double learning_rate,
                     double momentum, SgdState& state) {
  if (!(learning_rate > 0.0)) throw DataError("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw DataError("momentum must lie in [0, 1)");
  }
  if (!gradient.allFinite()) {
    throw RejectedUpdateError("gradient contains NaN or Inf");
  }
  if (state.velocity.size() != gradient.size()) {
    state.velocity = Vector::Zero(gradient.size());
  }
  state.velocity = momentum * state.velocity - learning_rate * gradient;
  return state.velocity;
}

GlobalPolicyParams SgdStep(const GlobalPolicyParams& params,
                           const Vector& gradient, double learning_rate,
                           double momentum, SgdState& state) {
  if (gradient.size() != params.theta.size()) {
    throw DataError("gradient length does not match parameters");
  }
  const Vector delta = MomentumDelta(gradient, learning_rate, momentum, state);
  GlobalPolicyParams next = params;
  next.theta += delta;
  next.version = params.version + 1;
  return next;
}

BadmmDualState BadmmDualUpdate(const BadmmDualState& duals,
                               std::span<const DualUpdateBatch> batches,
                               const GlobalPolicyParams& params) {
  BadmmDualState next = duals;
  for (const DualUpdateBatch& batch : batches) {
    if (batch.local_policy == nullptr || batch.states.empty() ||
        batch.states.size() != batch.observations.size()) {
      throw DataError("BadmmDualUpdate: malformed batch");
    }
    const TimeVaryingLinGaussPolicy& local = *batch.local_policy;
    const int T = local.horizon();
    const int du = local.action_dim();
    auto& lambdas = next.multipliers[batch.instance_id];
    if (lambdas.empty()) lambdas.assign(T, Vector::Zero(du));
    if (static_cast<int>(lambdas.size()) != T) {
      throw DataError("BadmmDualUpdate: dual horizon differs from local policy");
    }
    if (next.step_size == 0.0) continue;
    const auto n = static_cast<Eigen::Index>(batch.states.size());
    for (int t = 0; t < T; ++t) {
      Matrix obs(params.architecture.input_dim, n);
      Vector local_sum = Vector::Zero(du);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (static_cast<int>(batch.states[j].size()) != T ||
            static_cast<int>(batch.observations[j].size()) != T) {
          throw DataError("BadmmDualUpdate: sample horizon mismatch");
        }
        obs.col(j) = batch.observations[j][t];
        local_sum += local.Mean(t, batch.states[j][t]);
      }
      const Matrix global =
          PolicyForwardBatch(params.architecture, params.theta, obs);
      const Vector residual =
          (global.rowwise().sum() - local_sum) / static_cast<double>(n);
      const auto llt = CholeskyOrThrow(local.covariances[t], "local covariance");
      lambdas[t] += next.step_size * llt.solve(residual);
    }
  }
  return next;
}

}  // namespace adgps
