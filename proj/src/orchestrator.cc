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

#include "adgps/orchestrator.h"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <memory>
#include <optional>
#include <thread>

#include "adgps/arm_sim.h"
#include "adgps/dynamics_fit.h"
#include "adgps/errors.h"
#include "adgps/lqr.h"
#include "adgps/pi2.h"
#include "adgps/transport.h"

namespace adgps {
namespace {

using Seconds = std::chrono::duration<double>;

void SleepFor(double seconds) {
  std::this_thread::sleep_for(Seconds(seconds));
}

BadmmDualState ZeroDuals(const std::vector<TaskInstance>& instances, int horizon,
                         double step_size) {
  BadmmDualState duals;
  duals.step_size = step_size;
  for (const TaskInstance& inst : instances) {
    duals.multipliers[inst.instance_id] =
        std::vector<Vector>(horizon, Vector::Zero(kActionDim));
  }
  return duals;
}

double IdleFraction(double busy, double elapsed) {
  if (elapsed <= 0.0) return 0.0;
  return std::clamp(1.0 - busy / elapsed, 0.0, 1.0);
}

MetricsRow EvaluateRow(const ExperimentSetup& setup, const ParamSnapshot& snap,
                       int iteration, double now, std::int64_t rollouts,
                       double staleness, double idle) {
  GlobalPolicyParams params = setup.initial;
  params.theta = *snap.theta;
  params.version = snap.version;
  const ArmModel& model = setup.config.model;
  MetricsRow row;
  row.iteration = iteration;
  row.wall_clock_s = now;
  row.cumulative_rollouts = rollouts;
  row.train_cost = EvaluatePolicy(model, params, setup.split.train).aggregate;
  row.val_cost = setup.split.validation.empty()
                     ? 0.0
                     : EvaluatePolicy(model, params, setup.split.validation).aggregate;
  row.test_cost = EvaluatePolicy(model, params, setup.split.test).aggregate;
  row.mean_staleness = staleness;
  row.idle_fraction = idle;
  return row;
}

// Orders the three roles of a barrier-forced async run so they interleave
// exactly like the synchronous loop.
class Turnstile {
 public:
  // Blocks until `ticket` is current; false if aborted.
  bool Wait(int ticket) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return aborted_ || current_ == ticket; });
    return !aborted_;
  }
  void Advance() {
    {
      std::lock_guard lock(mutex_);
      ++current_;
    }
    cv_.notify_all();
  }
  void Abort() {
    {
      std::lock_guard lock(mutex_);
      aborted_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int current_ = 0;
  bool aborted_ = false;
};

// First exception raised by any thread of a run.
class FailureSlot {
 public:
  void Capture(std::exception_ptr error) {
    std::lock_guard lock(mutex_);
    if (!error_) error_ = error;
  }
  void RethrowIfAny() {
    std::lock_guard lock(mutex_);
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentClock

ExperimentClock::ExperimentClock(ClockKind kind)
    : kind_(kind), start_(Steady::now()) {}

double ExperimentClock::Now() const {
  if (kind_ == ClockKind::kLogical) {
    return static_cast<double>(logical_ns_.load()) * 1e-9;
  }
  std::lock_guard lock(pause_mutex_);
  const Steady::time_point end = paused_now_ ? pause_start_ : Steady::now();
  return Seconds(end - start_ - paused_).count();
}

void ExperimentClock::Charge(double seconds) {
  if (kind_ != ClockKind::kLogical) return;
  logical_ns_.fetch_add(static_cast<std::int64_t>(std::llround(seconds * 1e9)));
}

void ExperimentClock::Pause() {
  std::lock_guard lock(pause_mutex_);
  if (paused_now_) return;
  paused_now_ = true;
  pause_start_ = Steady::now();
}

void ExperimentClock::Resume() {
  std::lock_guard lock(pause_mutex_);
  if (!paused_now_) return;
  paused_now_ = false;
  paused_ += Steady::now() - pause_start_;
}

// ---------------------------------------------------------------------------

ExperimentSetup ExperimentSetup::Create(const ExperimentConfig& config) {
  config.Validate();
  ExperimentSetup setup;
  setup.config = config;
  setup.split = config.MakeSplit();
  setup.initial =
      InitializePolicy(config.Architecture(),
                       StreamSeed(config.seed, StreamTag::kInit, {}),
                       config.init_action_variance, config.init_output_scale);
  return setup;
}

BadmmDualState DualStore::Get() const {
  std::lock_guard lock(mutex_);
  return state_;
}

void DualStore::Set(BadmmDualState state) {
  std::lock_guard lock(mutex_);
  state_ = std::move(state);
}

EvalResult EvaluatePolicy(const ArmModel& model, const GlobalPolicyParams& params,
                          const std::vector<TaskInstance>& instances,
                          int rollouts_per_instance, std::uint64_t seed) {
  if (instances.empty()) throw DataError("EvaluatePolicy: no instances");
  if (rollouts_per_instance < 1) throw DataError("EvaluatePolicy: need >= 1 rollout");
  const ActionFunction mean_action = [&](int, const Vector&, const Vector& obs,
                                         RandomStream&) {
    return PolicyForward(params, obs);
  };
  EvalResult result;
  for (const TaskInstance& inst : instances) {
    double total = 0.0;
    for (int r = 0; r < rollouts_per_instance; ++r) {
      total += TrajectoryCost(Rollout(model, inst, mean_action, model.horizon,
                                      StreamSeed(seed, {static_cast<std::uint64_t>(r)})));
    }
    result.per_instance.push_back(total / rollouts_per_instance);
  }
  double sum = 0.0;
  for (double c : result.per_instance) sum += c;
  result.aggregate = sum / static_cast<double>(result.per_instance.size());
  return result;
}

std::vector<TaskInstance> AssignInstances(const std::vector<TaskInstance>& train,
                                          int worker_id, int workers) {
  std::vector<TaskInstance> out;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (static_cast<int>(i % workers) == worker_id) out.push_back(train[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LocalWorker

LocalWorker::LocalWorker(const ExperimentSetup& setup, int worker_id,
                         std::vector<TaskInstance> instances, ReplayMemory& replay,
                         ParamClient& client, DualStore* duals,
                         ExperimentClock& clock,
                         std::atomic<std::int64_t>& rollout_counter)
    : setup_(setup),
      config_(setup.config),
      worker_id_(worker_id),
      instances_(std::move(instances)),
      replay_(replay),
      client_(client),
      duals_(duals),
      clock_(clock),
      rollout_counter_(rollout_counter),
      params_(setup.initial) {
  action_variance_ = Vector::Constant(kActionDim, config_.init_action_variance);
  params_.action_variance = action_variance_;
  const int T = config_.model.horizon;
  for (const TaskInstance& inst : instances_) {
    local_[inst.instance_id] = TimeVaryingLinGaussPolicy::Constant(
        T, kStateDim, kActionDim, config_.init_action_variance);
  }
  if (duals_ && config_.algorithm == AlgorithmMode::kBadmm) {
    duals_->Set(ZeroDuals(instances_, T, config_.badmm_dual_step));
  }
}

void LocalWorker::RunIteration(int iteration) {
  PullParams();
  if (config_.algorithm == AlgorithmMode::kBadmm && iteration > 1) UpdateDuals();
  Collect(iteration);
  UpdateLocalPolicies();
  Publish();
}

void LocalWorker::PullParams() {
  double delay = 0.01;
  for (int attempt = 0; attempt < 6; ++attempt) {
    try {
      const ParamSnapshot snap = client_.Pull();
      if (snap.theta->size() != params_.theta.size()) {
        throw ProtocolError("parameter vector has the wrong length");
      }
      params_.theta = *snap.theta;
      params_.version = snap.version;
      return;
    } catch (const TransportError&) {
      ++failed_pulls_;
    } catch (const ProtocolError&) {
      ++failed_pulls_;
    }
    SleepFor(delay);
    delay = std::min(2.0 * delay, 1.0);
  }
  // Server unreachable: keep acting on the last snapshot.
}

Vector LocalWorker::Act(int t, const Vector& x, const Vector& obs,
                        const TimeVaryingLinGaussPolicy* local,
                        RandomStream& noise, std::vector<Vector>* means) const {
  if (local) return PolicySample(*local, t, x, noise);
  Vector mean = PolicyForward(params_, obs);
  means->push_back(mean);
  const Vector z = noise.StandardNormal(kActionDim);
  return mean + action_variance_.cwiseSqrt().cwiseProduct(z);
}

void LocalWorker::Collect(int iteration) {
  iteration_ = iteration;
  batches_.clear();
  const bool mdgps = config_.algorithm == AlgorithmMode::kMdgps;
  const int T = config_.model.horizon;
  for (const TaskInstance& base : instances_) {
    const auto id = static_cast<std::uint64_t>(base.instance_id);
    InstanceBatch batch;
    batch.instance =
        mdgps ? PerturbInstance(config_.model, base, config_.perturb_scale,
                                StreamSeed(config_.seed, StreamTag::kGoalPerturbation,
                                           {id, static_cast<std::uint64_t>(iteration)}))
              : base;
    const TimeVaryingLinGaussPolicy* local = mdgps ? nullptr : &local_.at(base.instance_id);
    for (int r = 0; r < config_.rollouts_per_instance; ++r) {
      const std::uint64_t seed =
          StreamSeed(config_.seed, StreamTag::kRollout,
                     {id, static_cast<std::uint64_t>(iteration),
                      static_cast<std::uint64_t>(r)});
      std::vector<Vector> means;
      means.reserve(T);
      const auto start = std::chrono::steady_clock::now();
      std::optional<Trajectory> traj;
      try {
        traj = Rollout(
            config_.model, batch.instance,
            [&](int t, const Vector& x, const Vector& obs, RandomStream& noise) {
              return Act(t, x, obs, local, noise, &means);
            },
            T, seed, config_.pacing_s);
      } catch (const SimulationFault&) {
        // Partial rollout discarded; the instance updates from the rest.
      }
      const double spent = Seconds(std::chrono::steady_clock::now() - start).count();
      rollout_seconds_.store(rollout_seconds_.load() +
                             (clock_.kind() == ClockKind::kWall ? spent
                                                                : config_.pacing_s));
      clock_.Charge(config_.pacing_s);
      if (!traj) continue;
      rollout_counter_.fetch_add(1);
      traj->iteration_born = iteration;
      if (mdgps) {
        TimeVaryingLinGaussPolicy behavior;
        behavior.gains.assign(T, Matrix::Zero(kActionDim, kStateDim));
        behavior.offsets = means;
        behavior.covariances.assign(T, Matrix(action_variance_.asDiagonal()));
        batch.behaviors.push_back(std::move(behavior));
        batch.global_means.push_back(std::move(means));
      } else {
        batch.behaviors.push_back(*local);
      }
      batch.trajectories.push_back(std::move(*traj));
    }
    batches_.push_back(std::move(batch));
  }
}

void LocalWorker::UpdateOne(InstanceBatch& batch) {
  const int id = batch.instance.instance_id;
  const int T = config_.model.horizon;
  const int n = static_cast<int>(batch.trajectories.size());
  if (n < 2) throw DataError("fewer than two usable rollouts");
  const bool mdgps = config_.algorithm == AlgorithmMode::kMdgps;
  const QuadraticCost cost = MakeReachCost(batch.instance.cost, T);

  TimeVaryingLinGaussPolicy previous = local_.at(id);
  if (mdgps) {
    std::vector<std::vector<Vector>> states(T), means(T);
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < n; ++s) {
        states[t].push_back(batch.trajectories[s].states[t]);
        means[t].push_back(batch.global_means[s][t]);
      }
    }
    previous = FitLinearPolicy(states, means, action_variance_.asDiagonal(),
                               config_.dynamics_ridge);
  }

  if (config_.optimizer == LocalOptimizer::kPi2) {
    local_[id] = Pi2Update(previous, Pi2Batch::FromTrajectories(batch.trajectories),
                           config_.kl_bound);
    return;
  }
  const LinGaussDynamics dynamics =
      FitDynamicsRelative(batch.trajectories, config_.dynamics_ridge);
  std::vector<Vector> offsets;
  if (!mdgps && duals_) {
    const BadmmDualState duals = duals_->Get();
    for (int t = 0; t < T; ++t) {
      const Vector* lambda = duals.Find(id, t);
      offsets.push_back(lambda ? Vector(-*lambda) : Vector::Zero(kActionDim));
    }
  }
  const KlConstraintSpec spec{config_.epsilon, mdgps ? KlAnchor::kGlobalLinearized
                                                     : KlAnchor::kPreviousLocal};
  local_[id] = KlConstrainedUpdate(previous, dynamics, cost, spec, offsets).policy;
}

void LocalWorker::UpdateLocalPolicies() {
  const auto start = std::chrono::steady_clock::now();
  for (InstanceBatch& batch : batches_) {
    try {
      UpdateOne(batch);
    } catch (const Error&) {
      // Keep the previous local policy for this instance.
      ++optimizer_failures_;
    }
  }
  // Sigma_pi: mean of the local covariance diagonals.
  Vector sum = Vector::Zero(kActionDim);
  int count = 0;
  for (const auto& [id, policy] : local_) {
    for (const Matrix& c : policy.covariances) {
      sum += c.diagonal();
      ++count;
    }
  }
  if (count > 0) action_variance_ = sum / count;
  params_.action_variance = action_variance_;
  if (clock_.kind() == ClockKind::kWall) {
    local_update_seconds_.store(
        local_update_seconds_.load() +
        Seconds(std::chrono::steady_clock::now() - start).count());
  }
}

void LocalWorker::Publish() {
  for (const InstanceBatch& batch : batches_) {
    const int id = batch.instance.instance_id;
    for (std::size_t s = 0; s < batch.trajectories.size(); ++s) {
      ReplayRecord record;
      record.trajectory = batch.trajectories[s];
      record.goal = batch.instance.goal;
      record.labeler = local_.at(id);
      record.behavior = batch.behaviors[s];
      replay_.Append(std::move(record));
    }
  }
  replay_.Reweight(local_);
}

void LocalWorker::UpdateDuals() {
  if (!duals_ || batches_.empty()) return;
  std::vector<DualUpdateBatch> updates;
  for (const InstanceBatch& batch : batches_) {
    if (batch.trajectories.empty()) continue;
    DualUpdateBatch u;
    u.instance_id = batch.instance.instance_id;
    u.local_policy = &local_.at(u.instance_id);
    for (const Trajectory& traj : batch.trajectories) {
      std::vector<Vector> obs;
      for (const Vector& x : traj.states) obs.push_back(Observation(x, batch.instance.goal));
      u.states.push_back(traj.states);
      u.observations.push_back(std::move(obs));
    }
    updates.push_back(std::move(u));
  }
  duals_->Set(BadmmDualUpdate(duals_->Get(), updates, params_));
}

// ---------------------------------------------------------------------------
// GlobalTrainer

GlobalTrainer::GlobalTrainer(const ExperimentSetup& setup, int trainer_id,
                             std::vector<ReplayMemory*> memories,
                             ParamClient& client, std::vector<DualStore*> duals,
                             ExperimentClock& clock)
    : setup_(setup),
      trainer_id_(trainer_id),
      memories_(std::move(memories)),
      client_(client),
      duals_(std::move(duals)),
      clock_(clock) {}

bool GlobalTrainer::Step() {
  ReplayMemory* memory = nullptr;
  const std::size_t m = memories_.size();
  for (std::size_t j = 0; j < m; ++j) {
    ReplayMemory* candidate = memories_[(steps_ + j) % m];
    if (candidate->size() > 0) {
      memory = candidate;
      break;
    }
  }
  if (!memory) return false;
  const ExperimentConfig& config = setup_.config;
  const ParamSnapshot snap = client_.Pull();
  GlobalPolicyParams params = setup_.initial;
  params.theta = *snap.theta;
  params.version = snap.version;

  std::vector<SupervisedSample> batch = memory->SampleMinibatch(
      config.batch_size,
      StreamSeed(config.seed, StreamTag::kMinibatch,
                 {static_cast<std::uint64_t>(trainer_id_),
                  static_cast<std::uint64_t>(steps_)}));
  // Records are already drawn in proportion to their importance weight.
  for (SupervisedSample& s : batch) s.weight = 1.0;

  std::optional<BadmmDualState> duals;
  if (config.algorithm == AlgorithmMode::kBadmm && !duals_.empty()) {
    duals.emplace();
    for (DualStore* store : duals_) {
      BadmmDualState part = store->Get();
      duals->step_size = part.step_size;
      duals->multipliers.merge(part.multipliers);
    }
  }
  const LossAndGradient lg = KlLossAndGrad(params, batch, duals ? &*duals : nullptr);
  const Vector delta =
      MomentumDelta(lg.gradient, config.learning_rate, config.momentum, sgd_);
  client_.Push(delta, snap.version);
  ++steps_;
  clock_.Charge(config.logical_sgd_step_s);
  return true;
}

// ---------------------------------------------------------------------------

void RunLocalWorker(LocalWorker& worker, int iterations,
                    const std::atomic<bool>& stop,
                    const std::function<void(int)>& on_iteration) {
  for (int k = 1; k <= iterations && !stop.load(); ++k) {
    worker.RunIteration(k);
    if (on_iteration) on_iteration(k);
  }
}

GlobalWorkerStats RunGlobalWorker(GlobalTrainer& trainer,
                                  const std::atomic<bool>& stop) {
  GlobalWorkerStats stats;
  double backoff = 0.01;
  while (!stop.load()) {
    try {
      if (trainer.Step()) {
        ++stats.steps;
        backoff = 0.01;
      } else {
        ++stats.empty_polls;
        SleepFor(0.01);
      }
    } catch (const TransportError&) {
      ++stats.failures;
      SleepFor(backoff);
      backoff = std::min(2.0 * backoff, 1.0);
    } catch (const ProtocolError&) {
      ++stats.failures;
      SleepFor(backoff);
      backoff = std::min(2.0 * backoff, 1.0);
    } catch (const RejectedUpdateError&) {
      ++stats.failures;
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------

ExperimentResult RunSync(const ExperimentConfig& input, const RowCallback& on_row) {
  ExperimentConfig config = input;
  config.mode = RunMode::kSync;
  const ExperimentSetup setup = ExperimentSetup::Create(config);
  ParamStore store(setup.initial.theta);
  InProcessParamClient client(store);
  ReplayMemory replay({config.replay_capacity, config.rho_max});
  DualStore duals;
  const bool badmm = config.algorithm == AlgorithmMode::kBadmm;
  ExperimentClock clock(config.clock);
  std::atomic<std::int64_t> rollouts{0};
  LocalWorker worker(setup, 0, setup.split.train, replay, client,
                     badmm ? &duals : nullptr, clock, rollouts);
  GlobalTrainer trainer(setup, 0, {&replay}, client,
                        badmm ? std::vector<DualStore*>{&duals}
                              : std::vector<DualStore*>{},
                        clock);

  MetricsLog log;
  auto emit = [&](int k) {
    clock.Pause();
    const double now = clock.Now();
    const MetricsRow row = EvaluateRow(
        setup, store.Get(), k, now, rollouts.load(), store.stats().MeanStaleness(),
        k == 0 ? 0.0
               : IdleFraction(worker.rollout_seconds() + worker.local_update_seconds(),
                              now));
    log.rows.push_back(row);
    if (on_row) on_row(row);
    clock.Resume();
  };
  emit(0);
  const int alternations = config.EffectiveAlternations();
  for (int k = 1; k <= config.iterations; ++k) {
    worker.RunIteration(k);
    for (int a = 0; a < alternations; ++a) {
      if (a > 0) {
        worker.PullParams();
        worker.UpdateDuals();
        worker.UpdateLocalPolicies();
        replay.Reweight(worker.local_policies());
      }
      const int steps = config.sgd_steps / alternations +
                        (a < config.sgd_steps % alternations ? 1 : 0);
      for (int n = 0; n < steps; ++n) trainer.Step();
    }
    emit(k);
  }
  return {log, store.Get()};
}

ExperimentResult RunAsync(const ExperimentConfig& input, const RowCallback& on_row) {
  ExperimentConfig config = input;
  config.mode = RunMode::kAsync;
  const ExperimentSetup setup = ExperimentSetup::Create(config);
  const int W = config.workers;
  const bool badmm = config.algorithm == AlgorithmMode::kBadmm;
  const ReplayOptions replay_options{config.replay_capacity, config.rho_max};

  ParamStore store(setup.initial.theta);
  std::unique_ptr<ParamServer> server;
  int port = 0;
  if (config.transport == TransportKind::kTcp) {
    server = std::make_unique<ParamServer>(store);
    port = server->Start("127.0.0.1", 0);
  }
  auto make_client = [&]() -> std::unique_ptr<ParamClient> {
    if (server) return std::make_unique<TcpParamClient>("127.0.0.1", port);
    return std::make_unique<InProcessParamClient>(store);
  };

  std::vector<std::unique_ptr<ReplayMemory>> replays;
  std::vector<std::unique_ptr<DualStore>> dual_stores;
  std::vector<std::unique_ptr<ParamClient>> clients;
  for (int w = 0; w < W; ++w) {
    replays.push_back(std::make_unique<ReplayMemory>(replay_options));
    dual_stores.push_back(std::make_unique<DualStore>());
  }

  MetricsLog log;
  MetricsRow row0 = EvaluateRow(setup, store.Get(), 0, 0.0, 0, 0.0, 0.0);
  log.rows.push_back(row0);
  if (on_row) on_row(row0);

  ExperimentClock clock(config.clock);
  std::atomic<std::int64_t> rollouts{0};
  std::vector<std::unique_ptr<LocalWorker>> workers;
  for (int w = 0; w < W; ++w) {
    clients.push_back(make_client());
    workers.push_back(std::make_unique<LocalWorker>(
        setup, w, AssignInstances(setup.split.train, w, W), *replays[w],
        *clients.back(), badmm ? dual_stores[w].get() : nullptr, clock, rollouts));
  }
  std::vector<std::unique_ptr<GlobalTrainer>> trainers;
  auto duals_for = [&](int w) {
    std::vector<DualStore*> out;
    if (!badmm) return out;
    if (w < 0) {
      for (auto& d : dual_stores) out.push_back(d.get());
    } else {
      out.push_back(dual_stores[w].get());
    }
    return out;
  };
  if (config.shared_global_worker) {
    std::vector<ReplayMemory*> all;
    for (auto& r : replays) all.push_back(r.get());
    clients.push_back(make_client());
    trainers.push_back(std::make_unique<GlobalTrainer>(setup, 0, all, *clients.back(),
                                                       duals_for(-1), clock));
  } else {
    for (int w = 0; w < W; ++w) {
      clients.push_back(make_client());
      trainers.push_back(std::make_unique<GlobalTrainer>(
          setup, w, std::vector<ReplayMemory*>{replays[w].get()}, *clients.back(),
          duals_for(w), clock));
    }
  }

  std::atomic<bool> stop_all{false};
  std::atomic<bool> stop_globals{false};
  FailureSlot failure;
  Turnstile turnstile;
  std::mutex progress_mutex;
  std::condition_variable progress_cv;
  std::vector<int> completed(W, 0);

  auto abort_run = [&](std::exception_ptr error) {
    failure.Capture(error);
    stop_all = true;
    stop_globals = true;
    turnstile.Abort();
    progress_cv.notify_all();
  };

  auto make_row = [&](int k) {
    const double now = clock.Now();
    double idle = 0.0;
    for (const auto& w : workers) {
      idle = std::max(idle, IdleFraction(w->rollout_seconds() + w->local_update_seconds(),
                                         now));
    }
    const MetricsRow row = EvaluateRow(setup, store.Get(), k, now, rollouts.load(),
                                       store.stats().MeanStaleness(), idle);
    log.rows.push_back(row);
    if (on_row) on_row(row);
  };

  const int K = config.iterations;
  std::vector<std::thread> threads;
  if (config.barrier) {
    threads.emplace_back([&] {
      try {
        for (int k = 1; k <= K; ++k) {
          if (!turnstile.Wait(3 * (k - 1))) return;
          workers[0]->RunIteration(k);
          turnstile.Advance();
        }
      } catch (...) {
        abort_run(std::current_exception());
      }
    });
    threads.emplace_back([&] {
      try {
        for (int k = 1; k <= K; ++k) {
          if (!turnstile.Wait(3 * (k - 1) + 1)) return;
          for (int n = 0; n < config.sgd_steps; ++n) trainers[0]->Step();
          turnstile.Advance();
        }
      } catch (...) {
        abort_run(std::current_exception());
      }
    });
    threads.emplace_back([&] {
      try {
        for (int k = 1; k <= K; ++k) {
          if (!turnstile.Wait(3 * (k - 1) + 2)) return;
          make_row(k);
          turnstile.Advance();
        }
      } catch (...) {
        abort_run(std::current_exception());
      }
    });
    for (auto& t : threads) t.join();
  } else {
    std::vector<std::thread> globals;
    for (auto& trainer : trainers) {
      globals.emplace_back([&, t = trainer.get()] {
        try {
          RunGlobalWorker(*t, stop_globals);
        } catch (...) {
          abort_run(std::current_exception());
        }
      });
    }
    for (int w = 0; w < W; ++w) {
      threads.emplace_back([&, w] {
        try {
          RunLocalWorker(*workers[w], K, stop_all, [&](int k) {
            {
              std::lock_guard lock(progress_mutex);
              completed[w] = k;
            }
            progress_cv.notify_all();
          });
        } catch (...) {
          abort_run(std::current_exception());
        }
      });
    }
    std::thread evaluator([&] {
      try {
        for (int k = 1; k <= K; ++k) {
          {
            std::unique_lock lock(progress_mutex);
            progress_cv.wait(lock, [&] {
              return stop_all.load() ||
                     *std::min_element(completed.begin(), completed.end()) >= k;
            });
          }
          if (stop_all.load()) return;
          make_row(k);
        }
      } catch (...) {
        abort_run(std::current_exception());
      }
    });
    for (auto& t : threads) t.join();
    evaluator.join();
    stop_globals = true;
    for (auto& t : globals) t.join();
  }
  if (server) server->Stop();
  failure.RethrowIfAny();
  return {log, store.Get()};
}

ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const RowCallback& on_row) {
  return config.mode == RunMode::kSync ? RunSync(config, on_row)
                                       : RunAsync(config, on_row);
}

}  // namespace adgps
