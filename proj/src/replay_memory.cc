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

#include "adgps/replay_memory.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <mutex>

#include "adgps/rng.h"
#include "adgps/wire.h"

namespace adgps {

void ReplayRecord::Validate() const {
  trajectory.Validate();
  const int T = trajectory.horizon();
  if (labeler.horizon() != T || behavior.horizon() != T) {
    throw DataError("replay record: policy horizons differ from trajectory");
  }
  if (labeler.state_dim() != trajectory.state_dim() ||
      labeler.action_dim() != trajectory.action_dim() ||
      behavior.state_dim() != trajectory.state_dim() ||
      behavior.action_dim() != trajectory.action_dim()) {
    throw DataError("replay record: policy dimensions differ from trajectory");
  }
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw DataError("replay record: weight must be positive and finite");
  }
}

Vector ReplayRecord::Observation(int t) const {
  Vector obs(trajectory.states[t].size() + goal.size());
  obs << trajectory.states[t], goal;
  return obs;
}

double ImportanceWeight(const ReplayRecord& record,
                        const TimeVaryingLinGaussPolicy& current,
                        double rho_max) {
  const double clamp = std::log(rho_max);
  const Trajectory& traj = record.trajectory;
  double log_weight = 0.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    const double log_ratio =
        PolicyLogDensity(current, t, traj.states[t], traj.actions[t]) -
        PolicyLogDensity(record.behavior, t, traj.states[t], traj.actions[t]);
    log_weight += std::clamp(log_ratio, -clamp, clamp);
  }
  return std::min(rho_max, std::exp(log_weight));
}

ReplayMemory::ReplayMemory(ReplayOptions options) : options_(options) {
  if (options_.capacity_per_instance < 1) {
    throw DataError("replay capacity must be >= 1");
  }
  if (!(options_.rho_max >= 1.0)) throw DataError("rho_max must be >= 1");
}

std::uint64_t ReplayMemory::Append(ReplayRecord record) {
  record.Validate();
  record.weight = std::min(record.weight, options_.rho_max);
  record.age = 0;
  std::unique_lock lock(mutex_);
  record.sequence = next_sequence_++;
  Queue& queue = queues_[record.trajectory.instance_id];
  const std::uint64_t sequence = record.sequence;
  queue.entries.push_back(
      {std::make_shared<const ReplayRecord>(std::move(record)), queue.appended++});
  while (static_cast<int>(queue.entries.size()) > options_.capacity_per_instance) {
    queue.entries.pop_front();
  }
  return sequence;
}

void ReplayMemory::Reweight(
    const std::map<int, TimeVaryingLinGaussPolicy>& current) {
  // Weights are computed outside the lock and swapped in under one exclusive
  // section, so samplers see either the old or the new set.
  const std::vector<Entry> snapshot = SnapshotEntries();
  std::map<std::uint64_t, std::shared_ptr<const ReplayRecord>> updated;
  for (const Entry& entry : snapshot) {
    const ReplayRecord& record = *entry.record;
    auto it = current.find(record.trajectory.instance_id);
    if (it == current.end()) {
      throw DataError("Reweight: no current policy for instance " +
                      std::to_string(record.trajectory.instance_id));
    }
    auto next = std::make_shared<ReplayRecord>(record);
    next->labeler = it->second;
    next->weight = ImportanceWeight(record, it->second, options_.rho_max);
    next->Validate();
    updated.emplace(record.sequence, std::move(next));
  }
  std::unique_lock lock(mutex_);
  for (auto& [instance, queue] : queues_) {
    for (Entry& entry : queue.entries) {
      auto it = updated.find(entry.record->sequence);
      if (it != updated.end()) entry.record = it->second;
    }
  }
}

std::vector<ReplayMemory::Entry> ReplayMemory::SnapshotEntries() const {
  std::shared_lock lock(mutex_);
  std::vector<Entry> out;
  for (const auto& [instance, queue] : queues_) {
    for (const Entry& entry : queue.entries) {
      out.push_back({entry.record, queue.appended - entry.ordinal - 1});
    }
  }
  return out;
}

std::vector<ReplayRecord> ReplayMemory::Records() const {
  std::vector<ReplayRecord> out;
  for (const Entry& entry : SnapshotEntries()) {
    ReplayRecord copy = *entry.record;
    copy.age = static_cast<int>(entry.ordinal);
    out.push_back(std::move(copy));
  }
  return out;
}

std::size_t ReplayMemory::size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [instance, queue] : queues_) n += queue.entries.size();
  return n;
}

std::vector<SupervisedSample> ReplayMemory::SampleMinibatch(
    int batch_size, std::uint64_t seed) const {
  if (batch_size < 1) throw DataError("batch size must be >= 1");
  const std::vector<Entry> records = SnapshotEntries();
  if (records.empty()) throw EmptyMemoryError("replay memory is empty");

  std::vector<double> cumulative(records.size());
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    total += records[i].record->weight;
    cumulative[i] = total;
  }

  RandomStream stream(seed);
  std::vector<SupervisedSample> batch;
  batch.reserve(batch_size);
  for (int b = 0; b < batch_size; ++b) {
    const double draw = stream.Uniform(0.0, total);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), draw);
    const std::size_t index = std::min<std::size_t>(
        static_cast<std::size_t>(std::distance(cumulative.begin(), it)),
        records.size() - 1);
    const ReplayRecord& record = *records[index].record;
    const int T = record.trajectory.horizon();
    const int t = std::min(T - 1, static_cast<int>(stream.Uniform(0.0, T)));
    const Vector& x = record.trajectory.states[t];

    SupervisedSample s;
    s.obs = record.Observation(t);
    s.local_mean = record.labeler.Mean(t, x);
    const auto llt = CholeskyOrThrow(record.labeler.covariances[t]);
    s.local_precision = Symmetrized(
        llt.solve(Matrix::Identity(s.local_mean.size(), s.local_mean.size())));
    s.instance_id = record.trajectory.instance_id;
    s.timestep = t;
    s.weight = record.weight;
    batch.push_back(std::move(s));
  }
  return batch;
}

namespace {

constexpr std::uint32_t kSpillMagic = 0x52474441;  // "ADGR"
constexpr std::uint32_t kSpillVersion = 1;

void PutVector(ByteWriter& w, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.PutF64(v[i]);
}

void PutMatrix(ByteWriter& w, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) w.PutF64(m.data()[i]);
}

Vector GetVector(ByteReader& r, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = r.GetF64();
  return v;
}

Matrix GetMatrix(ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.GetF64();
  return m;
}

void PutPolicy(ByteWriter& w, const TimeVaryingLinGaussPolicy& p) {
  for (int t = 0; t < p.horizon(); ++t) {
    PutMatrix(w, p.gains[t]);
    PutVector(w, p.offsets[t]);
    PutMatrix(w, p.covariances[t]);
  }
}

TimeVaryingLinGaussPolicy GetPolicy(ByteReader& r, int T, int dx, int du) {
  TimeVaryingLinGaussPolicy p;
  for (int t = 0; t < T; ++t) {
    p.gains.push_back(GetMatrix(r, du, dx));
    p.offsets.push_back(GetVector(r, du));
    p.covariances.push_back(GetMatrix(r, du, du));
  }
  return p;
}

}  // namespace

void SpillRecord(const ReplayRecord& record, const std::filesystem::path& path) {
  record.Validate();
  const Trajectory& traj = record.trajectory;
  const int T = traj.horizon();
  const int dx = traj.state_dim();
  const int du = traj.action_dim();
  ByteWriter w;
  w.PutU32(kSpillMagic);
  w.PutU32(kSpillVersion);
  w.PutU32(static_cast<std::uint32_t>(traj.instance_id));
  w.PutU32(static_cast<std::uint32_t>(traj.iteration_born));
  w.PutU32(static_cast<std::uint32_t>(T));
  w.PutU32(static_cast<std::uint32_t>(dx));
  w.PutU32(static_cast<std::uint32_t>(du));
  w.PutU32(static_cast<std::uint32_t>(record.goal.size()));
  w.PutU64(record.sequence);
  w.PutU32(static_cast<std::uint32_t>(record.age));
  w.PutF64(record.weight);
  for (int t = 0; t < T; ++t) {
    PutVector(w, traj.states[t]);
    PutVector(w, traj.actions[t]);
    w.PutF64(traj.costs[t]);
  }
  PutVector(w, record.goal);
  PutPolicy(w, record.labeler);
  PutPolicy(w, record.behavior);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError("failed to write spill file " + path.string());
}

ReplayRecord LoadSpilledRecord(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open spill file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  ByteReader r(bytes);
  if (r.GetU32() != kSpillMagic) throw ProtocolError("spill file: bad magic");
  if (r.GetU32() != kSpillVersion) throw ProtocolError("spill file: bad version");
  ReplayRecord record;
  record.trajectory.instance_id = static_cast<int>(r.GetU32());
  record.trajectory.iteration_born = static_cast<int>(r.GetU32());
  const int T = static_cast<int>(r.GetU32());
  const int dx = static_cast<int>(r.GetU32());
  const int du = static_cast<int>(r.GetU32());
  const int dg = static_cast<int>(r.GetU32());
  record.sequence = r.GetU64();
  record.age = static_cast<int>(r.GetU32());
  record.weight = r.GetF64();
  for (int t = 0; t < T; ++t) {
    record.trajectory.states.push_back(GetVector(r, dx));
    record.trajectory.actions.push_back(GetVector(r, du));
    record.trajectory.costs.push_back(r.GetF64());
  }
  record.goal = GetVector(r, dg);
  record.labeler = GetPolicy(r, T, dx, du);
  record.behavior = GetPolicy(r, T, dx, du);
  if (r.remaining() != 0) throw ProtocolError("spill file: trailing bytes");
  record.Validate();
  return record;
}

}  // namespace adgps
