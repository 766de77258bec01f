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

#ifndef ADGPS_RNG_H_
#define ADGPS_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

#include "adgps/gaussian.h"

namespace adgps {

// Stream tags. Every stochastic draw in the library is addressed by
// StreamSeed(experiment_seed, {tag, ids...}) so workers never share a stream
// and results do not depend on which thread performs a draw.
enum class StreamTag : std::uint64_t {
  kRollout = 1,
  kMinibatch = 2,
  kInit = 3,
  kGoalPerturbation = 4,
  kInstances = 5,
  kTest = 99,
};

std::uint64_t SplitMix64(std::uint64_t& state);

// Counter-based derivation: hashes (base, path...) into an independent seed.
std::uint64_t StreamSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> path);
std::uint64_t StreamSeed(std::uint64_t base, StreamTag tag,
                         std::initializer_list<std::uint64_t> path);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double Normal() { return normal_(engine_); }
  Vector StandardNormal(Eigen::Index n);
  double Uniform(double lo, double hi);
  std::uint64_t Next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace adgps

#endif  // ADGPS_RNG_H_
