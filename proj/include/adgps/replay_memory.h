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

#ifndef ADGPS_REPLAY_MEMORY_H_
#define ADGPS_REPLAY_MEMORY_H_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "adgps/global_policy.h"
#include "adgps/types.h"

namespace adgps {

// A rollout, the local policy that labels it, and the policy that generated
// its actions. For rollouts of the global policy the behavior is stored as a
// per-step Gaussian (K = 0, k_t = mu_theta(o_t), C_t = Sigma_pi), which has
// the same density at the recorded states.
struct ReplayRecord {
  Trajectory trajectory;
  Vector goal;  // appended to each state to form the observation
  TimeVaryingLinGaussPolicy labeler;
  TimeVaryingLinGaussPolicy behavior;
  double weight = 1.0;
  int age = 0;
  std::uint64_t sequence = 0;

  // Throws DataError unless trajectory, labeler and behavior agree.
  void Validate() const;
  Vector Observation(int t) const;
};

struct ReplayOptions {
  int capacity_per_instance = 50;
  double rho_max = 10.0;
};

// Importance weight min(rho_max, prod_t current/behavior), with every per-step
// log ratio clamped to [-log rho_max, log rho_max] before summation.
double ImportanceWeight(const ReplayRecord& record,
                        const TimeVaryingLinGaussPolicy& current,
                        double rho_max);

// Thread-safe per-instance FIFO of rollouts. Records are immutable once
// published; reweighting swaps in new copies under an exclusive lock so a
// sampler always sees one consistent set of weights.
class ReplayMemory {
 public:
  explicit ReplayMemory(ReplayOptions options = {});

  // Returns the record's sequence number.
  std::uint64_t Append(ReplayRecord record);

  // Replaces each record's labeler with the current policy for its instance
  // and recomputes its weight. Throws DataError if an instance has no entry.
  void Reweight(const std::map<int, TimeVaryingLinGaussPolicy>& current);

  // Draws (record, t) with probability proportional to record weight and
  // labels it from the record's labeler. Throws EmptyMemoryError when empty.
  std::vector<SupervisedSample> SampleMinibatch(int batch_size,
                                                std::uint64_t seed) const;

  std::size_t size() const;
  // Copies of all records, age filled in, ordered by instance then age.
  std::vector<ReplayRecord> Records() const;
  const ReplayOptions& options() const { return options_; }

 private:
  struct Entry {
    std::shared_ptr<const ReplayRecord> record;
    std::uint64_t ordinal = 0;  // per-instance append index
  };
  struct Queue {
    std::deque<Entry> entries;
    std::uint64_t appended = 0;
  };

  std::vector<Entry> SnapshotEntries() const;

  ReplayOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<int, Queue> queues_;
  std::uint64_t next_sequence_ = 0;
};

// One record per file, little-endian framed. Not used during training.
void SpillRecord(const ReplayRecord& record, const std::filesystem::path& path);
ReplayRecord LoadSpilledRecord(const std::filesystem::path& path);

}  // namespace adgps

#endif  // ADGPS_REPLAY_MEMORY_H_
