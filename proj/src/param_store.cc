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

#include "adgps/param_store.h"

#include <string>

#include "adgps/errors.h"

namespace adgps {

double ParamStoreStats::MeanStaleness() const {
  std::uint64_t count = 0;
  double total = 0.0;
  for (const auto& [staleness, n] : staleness_histogram) {
    total += static_cast<double>(staleness) * static_cast<double>(n);
    count += n;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

ParamStore::ParamStore(Vector initial, std::uint64_t initial_version)
    : size_(initial.size()), initial_version_(initial_version) {
  if (size_ == 0) throw DataError("parameter store needs a nonempty vector");
  if (!initial.allFinite()) throw DataError("initial parameters not finite");
  current_.theta = std::make_shared<const Vector>(std::move(initial));
  current_.version = initial_version;
  applier_ = std::thread([this] { ApplierLoop(); });
}

ParamStore::~ParamStore() {
  {
    std::lock_guard lock(queue_mutex_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  applier_.join();
}

ParamSnapshot ParamStore::Get() const {
  std::lock_guard lock(snapshot_mutex_);
  return current_;
}

std::uint64_t ParamStore::Push(const Vector& delta, std::uint64_t basis_version) {
  if (delta.size() != size_) {
    throw ProtocolError("delta length " + std::to_string(delta.size()) +
                        " != parameter length " + std::to_string(size_));
  }
  std::future<std::uint64_t> done;
  {
    std::lock_guard lock(queue_mutex_);
    if (stopping_) throw Error("parameter store is shutting down");
    queue_.push_back(Pending{delta, basis_version, {}});
    done = queue_.back().done.get_future();
  }
  queue_cv_.notify_one();
  return done.get();
}

ParamStoreStats ParamStore::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

void ParamStore::set_observer(ApplyObserver observer) {
  std::lock_guard lock(stats_mutex_);
  observer_ = std::move(observer);
}

void ParamStore::ApplierLoop() {
  while (true) {
    Pending pending;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      pending = std::move(queue_.front());
      queue_.pop_front();
    }
    if (!pending.delta.allFinite()) {
      {
        std::lock_guard lock(stats_mutex_);
        ++stats_.pushed;
        ++stats_.rejected;
      }
      pending.done.set_exception(std::make_exception_ptr(
          RejectedUpdateError("update contains NaN or Inf")));
      continue;
    }
    const ParamSnapshot before = Get();
    auto next = std::make_shared<Vector>(*before.theta + pending.delta);
    const std::uint64_t version = before.version + 1;
    const std::uint64_t staleness =
        before.version >= pending.basis ? before.version - pending.basis : 0;
    {
      std::lock_guard lock(snapshot_mutex_);
      current_.theta = next;
      current_.version = version;
    }
    ApplyObserver observer;
    {
      std::lock_guard lock(stats_mutex_);
      ++stats_.pushed;
      ++stats_.applied;
      ++stats_.staleness_histogram[staleness];
      observer = observer_;
    }
    if (observer) observer(version, *next);
    pending.done.set_value(version);
  }
}

}  // namespace adgps
