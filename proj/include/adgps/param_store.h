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

#ifndef ADGPS_PARAM_STORE_H_
#define ADGPS_PARAM_STORE_H_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "adgps/gaussian.h"

namespace adgps {

// Immutable view of the parameters at one version.
struct ParamSnapshot {
  std::shared_ptr<const Vector> theta;
  std::uint64_t version = 0;
};

struct ParamStoreStats {
  std::uint64_t applied = 0;
  std::uint64_t rejected = 0;
  std::uint64_t pushed = 0;
  std::map<std::uint64_t, std::uint64_t> staleness_histogram;

  double MeanStaleness() const;
};

// Versioned global parameters. Pushes are queued and applied one at a time by
// an internal thread, so theta_v = theta_0 + (sum of the first v applied
// deltas) exactly in application order.
class ParamStore {
 public:
  // Called on the applier thread after every applied update.
  using ApplyObserver =
      std::function<void(std::uint64_t version, const Vector& theta)>;

  explicit ParamStore(Vector initial, std::uint64_t initial_version = 0);
  ~ParamStore();
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  ParamSnapshot Get() const;

  // theta += delta, version + 1, staleness = version before apply - basis.
  // Returns the new version. Non-finite deltas are counted and rethrown as
  // RejectedUpdateError; a wrong length throws ProtocolError.
  std::uint64_t Push(const Vector& delta, std::uint64_t basis_version);

  ParamStoreStats stats() const;
  Eigen::Index size() const { return size_; }
  void set_observer(ApplyObserver observer);

 private:
  struct Pending {
    Vector delta;
    std::uint64_t basis = 0;
    std::promise<std::uint64_t> done;
  };

  void ApplierLoop();

  const Eigen::Index size_;
  const std::uint64_t initial_version_;
  mutable std::mutex snapshot_mutex_;
  ParamSnapshot current_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<Pending> queue_;
  bool stopping_ = false;

  mutable std::mutex stats_mutex_;
  ParamStoreStats stats_;
  ApplyObserver observer_;

  std::thread applier_;
};

// Transport-agnostic access to a parameter store.
class ParamClient {
 public:
  virtual ~ParamClient() = default;
  virtual ParamSnapshot Pull() = 0;
  virtual std::uint64_t Push(const Vector& delta, std::uint64_t basis_version) = 0;
};

class InProcessParamClient : public ParamClient {
 public:
  explicit InProcessParamClient(ParamStore& store) : store_(store) {}
  ParamSnapshot Pull() override { return store_.Get(); }
  std::uint64_t Push(const Vector& delta, std::uint64_t basis) override {
    return store_.Push(delta, basis);
  }

 private:
  ParamStore& store_;
};

}  // namespace adgps

#endif  // ADGPS_PARAM_STORE_H_
