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

#ifndef ADGPS_ORCHESTRATOR_H_
#define ADGPS_ORCHESTRATOR_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include "adgps/config.h"
#include "adgps/global_policy.h"
#include "adgps/metrics.h"
#include "adgps/param_store.h"
#include "adgps/replay_memory.h"

namespace adgps {

// Experiment time. Wall mode reads a steady clock (minus paused spans);
// logical mode advances only by explicit charges, which makes runs with a
// fixed seed reproducible to the byte.
class ExperimentClock {
 public:
  explicit ExperimentClock(ClockKind kind);

  ClockKind kind() const { return kind_; }
  double Now() const;
  // Logical mode only; ignored on the wall clock.
  void Charge(double seconds);
  // Wall mode only: time between Pause and Resume is not counted.
  void Pause();
  void Resume();

 private:
  using Steady = std::chrono::steady_clock;
  ClockKind kind_;
  Steady::time_point start_;
  std::atomic<std::int64_t> logical_ns_{0};
  mutable std::mutex pause_mutex_;
  Steady::duration paused_{};
  Steady::time_point pause_start_{};
  bool paused_now_ = false;
};

// Instances, architecture and initial parameters derived from a config.
struct ExperimentSetup {
  ExperimentConfig config;
  InstanceSplit split;
  GlobalPolicyParams initial;

  static ExperimentSetup Create(const ExperimentConfig& config);
};

// BADMM multipliers shared between one local worker and its global worker.
class DualStore {
 public:
  BadmmDualState Get() const;
  void Set(BadmmDualState state);

 private:
  mutable std::mutex mutex_;
  BadmmDualState state_;
};

struct EvalResult {
  std::vector<double> per_instance;
  double aggregate = 0.0;
};

// Mean-action rollouts of the global policy; pure given its inputs. The
// rollouts are noise free, so rollouts_per_instance > 1 repeats identical runs.
EvalResult EvaluatePolicy(const ArmModel& model, const GlobalPolicyParams& params,
                          const std::vector<TaskInstance>& instances,
                          int rollouts_per_instance = 1, std::uint64_t seed = 0);

// Instances owned by worker w of W (round robin over the train set).
std::vector<TaskInstance> AssignInstances(const std::vector<TaskInstance>& train,
                                          int worker_id, int workers);

// Alg. 2 body for one worker: rollouts, local policy update, replay append.
class LocalWorker {
 public:
  LocalWorker(const ExperimentSetup& setup, int worker_id,
              std::vector<TaskInstance> instances, ReplayMemory& replay,
              ParamClient& client, DualStore* duals, ExperimentClock& clock,
              std::atomic<std::int64_t>& rollout_counter);

  // Pull, BADMM dual step (iteration > 1), collect, update, publish.
  void RunIteration(int iteration);

  // Pieces, used directly by the synchronous loop.
  void PullParams();
  void Collect(int iteration);
  void UpdateLocalPolicies();
  void Publish();
  void UpdateDuals();

  const std::map<int, TimeVaryingLinGaussPolicy>& local_policies() const {
    return local_;
  }
  const GlobalPolicyParams& params() const { return params_; }
  double rollout_seconds() const { return rollout_seconds_.load(); }
  double local_update_seconds() const { return local_update_seconds_.load(); }
  int failed_pulls() const { return failed_pulls_; }
  int optimizer_failures() const { return optimizer_failures_; }

 private:
  struct InstanceBatch {
    TaskInstance instance;  // with this iteration's goal
    std::vector<Trajectory> trajectories;
    std::vector<TimeVaryingLinGaussPolicy> behaviors;
    std::vector<std::vector<Vector>> global_means;  // [sample][t]
  };

  Vector Act(int t, const Vector& x, const Vector& obs,
             const TimeVaryingLinGaussPolicy* local, RandomStream& noise,
             std::vector<Vector>* means) const;
  void UpdateOne(InstanceBatch& batch);

  const ExperimentSetup& setup_;
  const ExperimentConfig& config_;
  int worker_id_;
  std::vector<TaskInstance> instances_;
  ReplayMemory& replay_;
  ParamClient& client_;
  DualStore* duals_;
  ExperimentClock& clock_;
  std::atomic<std::int64_t>& rollout_counter_;

  GlobalPolicyParams params_;
  Vector action_variance_;  // Sigma_pi, from this worker's local policies
  std::map<int, TimeVaryingLinGaussPolicy> local_;
  std::vector<InstanceBatch> batches_;
  int iteration_ = 0;
  std::atomic<double> rollout_seconds_{0.0};
  std::atomic<double> local_update_seconds_{0.0};
  int failed_pulls_ = 0;
  int optimizer_failures_ = 0;
};

// Alg. 3 body: one SGD step per call against the paired replay memories.
class GlobalTrainer {
 public:
  GlobalTrainer(const ExperimentSetup& setup, int trainer_id,
                std::vector<ReplayMemory*> memories, ParamClient& client,
                std::vector<DualStore*> duals, ExperimentClock& clock);

  // Returns false (and pushes nothing) when every memory is empty.
  bool Step();
  std::int64_t steps() const { return steps_; }

 private:
  const ExperimentSetup& setup_;
  int trainer_id_;
  std::vector<ReplayMemory*> memories_;
  ParamClient& client_;
  std::vector<DualStore*> duals_;
  ExperimentClock& clock_;
  SgdState sgd_;
  std::int64_t steps_ = 0;
};

struct GlobalWorkerStats {
  std::int64_t steps = 0;
  std::int64_t empty_polls = 0;
  std::int64_t failures = 0;
};

// Runs `iterations` local iterations with pull retries; `on_iteration` is
// called after each one. Returns early if `stop` is set.
void RunLocalWorker(LocalWorker& worker, int iterations,
                    const std::atomic<bool>& stop,
                    const std::function<void(int)>& on_iteration = {});

// Steps until `stop` is set, backing off 10 ms on an empty memory and
// exponentially on transport failures.
GlobalWorkerStats RunGlobalWorker(GlobalTrainer& trainer,
                                  const std::atomic<bool>& stop);

using RowCallback = std::function<void(const MetricsRow&)>;

struct ExperimentResult {
  MetricsLog metrics;
  ParamSnapshot final_params;
};

// Alg. 1: strictly sequential rollouts, local updates and SGD.
ExperimentResult RunSync(const ExperimentConfig& config,
                         const RowCallback& on_row = {});
// W local/global worker pairs plus an evaluator thread.
ExperimentResult RunAsync(const ExperimentConfig& config,
                          const RowCallback& on_row = {});
// Dispatches on config.mode.
ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const RowCallback& on_row = {});

}  // namespace adgps

#endif  // ADGPS_ORCHESTRATOR_H_
