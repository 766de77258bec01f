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

#include "adgps/rng.h"

namespace adgps {

std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t StreamSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = base;
  std::uint64_t h = SplitMix64(state);
  for (std::uint64_t id : path) {
    state = h ^ (id + 0x632be59bd9b4e019ULL);
    h = SplitMix64(state);
  }
  return h;
}

std::uint64_t StreamSeed(std::uint64_t base, StreamTag tag,
                         std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = StreamSeed(base, {static_cast<std::uint64_t>(tag)});
  return StreamSeed(h, path);
}

Vector RandomStream::StandardNormal(Eigen::Index n) {
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal_(engine_);
  return z;
}

double RandomStream::Uniform(double lo, double hi) {
  // 53 random bits; avoids implementation-defined uniform_real_distribution.
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace adgps
