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

// Acceptance suite: one PASS/FAIL line per headline criterion. Tolerances
// and budgets are fixed here; the exit code is nonzero if any line fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adgps/bench.h"
#include "adgps/config.h"
#include "adgps/errors.h"
#include "adgps/global_policy.h"
#include "adgps/lqr.h"
#include "adgps/metrics.h"
#include "adgps/orchestrator.h"
#include "adgps/param_store.h"
#include "adgps/pi2.h"
#include "adgps/wire.h"
#include "test_util.h"

namespace adgps {
namespace {

namespace fs = std::filesystem;
using Steady = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Steady::time_point since) {
  return std::chrono::duration<double>(Steady::now() - since).count();
}

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

const fs::path kConfigDir = ADGPS_CONFIG_DIR;
const fs::path kOutDir = "acceptance_out";

// ---------------------------------------------------------------- LQR

constexpr double kLqrRelTol = 1e-8;
constexpr double kLqrBudgetS = 5.0;

std::vector<Matrix> RiccatiGains(const testing::LqInstance& inst, int horizon) {
  std::vector<Matrix> gains(horizon);
  gains[horizon - 1] = Matrix::Zero(inst.b.cols(), inst.a.rows());
  Matrix p = 2.0 * inst.q;
  for (int t = horizon - 2; t >= 0; --t) {
    const Matrix quu = 2.0 * inst.r + inst.b.transpose() * p * inst.b;
    const Matrix qux = inst.b.transpose() * p * inst.a;
    gains[t] = -quu.inverse() * qux;
    p = 2.0 * inst.q + inst.a.transpose() * p * inst.a - qux.transpose() * quu.inverse() * qux;
    p = 0.5 * (p + p.transpose());
  }
  return gains;
}

Outcome LqrOracle() {
  const auto start = Steady::now();
  RandomStream rng(StreamSeed(1, StreamTag::kTest, {1}));
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int dx = 1 + i % 4, du = 1 + i % 3, T = 10 + (i * 7) % 41;
    const auto inst = testing::RandomLq(dx, du, T, rng);
    const auto policy = LqrBackward(inst.dynamics, inst.cost);
    const auto oracle = RiccatiGains(inst, T);
    for (int t = 0; t < T; ++t) {
      const double scale = std::max(1e-12, oracle[t].norm());
      worst = std::max(worst, (policy.gains[t] - oracle[t]).norm() / std::max(scale, 1.0));
    }
  }
  const double took = Seconds(start);
  return {worst <= kLqrRelTol && took < kLqrBudgetS,
          Fmt("20 instances, max relative gain error %.2e (tol %.0e), %.2f s (budget %.0f s)",
              worst, kLqrRelTol, took, kLqrBudgetS)};
}

// ---------------------------------------------------------------- KL

constexpr double kKlBudgetS = 30.0;

Outcome KlConstraint() {
  const auto start = Steady::now();
  RandomStream rng(StreamSeed(1, StreamTag::kTest, {2}));
  int within = 0;
  double worst_ratio = 1.0;
  for (int i = 0; i < 20; ++i) {
    const int dx = 1 + i % 4, du = 1 + i % 2, T = 10 + (i * 3) % 31;
    const auto inst = testing::RandomLq(dx, du, T, rng, true);
    const auto prev = testing::RandomPolicy(T, dx, du, rng);
    const double full =
        TrajectoryKl(LqrBackward(inst.dynamics, inst.cost), prev, inst.dynamics);
    const double eps = 0.3 * full;
    const auto res = KlConstrainedUpdate(prev, inst.dynamics, inst.cost,
                                         {eps, KlAnchor::kPreviousLocal});
    const double ratio = TrajectoryKl(res.policy, prev, inst.dynamics) / eps;
    if (ratio >= 0.9 && ratio <= 1.1) ++within;
    if (std::abs(ratio - 1.0) > std::abs(worst_ratio - 1.0)) worst_ratio = ratio;
  }
  // Limits on one more instance.
  const auto inst = testing::RandomLq(3, 2, 20, rng, true);
  const auto prev = testing::RandomPolicy(20, 3, 2, rng);
  const auto lqr = LqrBackward(inst.dynamics, inst.cost);
  const auto wide = KlConstrainedUpdate(prev, inst.dynamics, inst.cost,
                                        {1e9, KlAnchor::kPreviousLocal});
  const auto tight = KlConstrainedUpdate(prev, inst.dynamics, inst.cost,
                                         {1e-8, KlAnchor::kPreviousLocal});
  double wide_err = 0.0, tight_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    wide_err = std::max({wide_err, testing::MaxAbsDiff(wide.policy.gains[t], lqr.gains[t]),
                         testing::MaxAbsDiff(wide.policy.offsets[t], lqr.offsets[t])});
    tight_err = std::max({tight_err, testing::MaxAbsDiff(tight.policy.gains[t], prev.gains[t]),
                          testing::MaxAbsDiff(tight.policy.offsets[t], prev.offsets[t])});
  }
  const double took = Seconds(start);
  return {within == 20 && wide_err <= 1e-6 && tight_err <= 1e-3 && took < kKlBudgetS,
          Fmt("%d/20 within +-10%% (worst KL/eps %.3f); eps=1e9 vs LQR %.1e (tol 1e-6); "
              "eps=1e-8 vs prev %.1e (tol 1e-3); %.2f s",
              within, worst_ratio, wide_err, tight_err, took)};
}

// ---------------------------------------------------------------- PI2

Outcome Pi2Reps() {
  const auto start = Steady::now();
  RandomStream rng(StreamSeed(1, StreamTag::kTest, {3}));
  double worst_excess = -1.0;
  bool monotone = true;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 40;
    Vector c(n);
    for (int i = 0; i < n; ++i) c(i) = rng.Uniform(0, 50) * (1 + trial % 4);
    const double bound = 0.05 + 0.05 * (trial % 20);
    const Vector w = SoftmaxWeights(c, RepsTemperature(c, bound));
    worst_excess = std::max(worst_excess, KlFromUniform(w) - bound);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (c(a) < c(b) && w(a) < w(b)) monotone = false;
  }
  const Vector equal = Vector::Constant(10, 4.0);
  const Vector we = SoftmaxWeights(equal, RepsTemperature(equal, 0.5));
  const double uniform_err = (we.array() - 0.1).abs().maxCoeff();

  auto policy = TimeVaryingLinGaussPolicy::Constant(1, 1, 1, 1.0);
  RandomStream draws(StreamSeed(1, StreamTag::kTest, {4}));
  for (int iter = 0; iter < 10; ++iter) {
    Pi2Batch b;
    for (int i = 0; i < 64; ++i) {
      const Vector x = Vector::Zero(1);
      const Vector u = PolicySample(policy, 0, x, draws);
      b.costs.push_back({(u(0) - 3.0) * (u(0) - 3.0)});
      b.states.push_back({x});
      b.actions.push_back({u});
    }
    policy = Pi2Update(policy, b, 1.0);
  }
  const double gap = std::abs(policy.offsets[0](0) - 3.0);
  const double took = Seconds(start);
  return {worst_excess <= 1e-3 && monotone && uniform_err < 1e-12 && gap <= 0.2 &&
              took < 30.0,
          Fmt("max KL excess %.1e (tol 1e-3), monotone %s, equal-cost deviation %.1e, "
              "1-D task |k-3| = %.3f (tol 0.2), %.2f s",
              worst_excess, monotone ? "yes" : "no", uniform_err, gap, took)};
}

// ---------------------------------------------------------------- gradients

double WorstFiniteDifference(const NetworkArchitecture& arch, std::uint64_t seed) {
  RandomStream rng(seed);
  const GlobalPolicyParams params = InitializePolicy(arch, seed, 1.0);
  std::vector<SupervisedSample> batch;
  BadmmDualState duals;
  for (int j = 0; j < 16; ++j) {
    SupervisedSample s;
    s.obs = rng.StandardNormal(arch.input_dim);
    s.local_mean = rng.StandardNormal(arch.output_dim);
    s.local_precision = testing::RandomSpd(arch.output_dim, rng, 0.5);
    s.instance_id = j % 2;
    s.timestep = j % 4;
    batch.push_back(s);
  }
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 4; ++t) duals.multipliers[i].push_back(rng.StandardNormal(arch.output_dim));
  double worst = 0.0;
  const BadmmDualState* none = nullptr;
  for (const BadmmDualState* d : {none, static_cast<const BadmmDualState*>(&duals)}) {
    const Vector grad = KlLossAndGrad(params, batch, d).gradient;
    for (int c = 0; c < 50; ++c) {
      const int i = static_cast<int>(rng.Next() % static_cast<std::uint64_t>(grad.size()));
      GlobalPolicyParams plus = params, minus = params;
      plus.theta(i) += 1e-5;
      minus.theta(i) -= 1e-5;
      const double fd =
          (KlLossAndGrad(plus, batch, d).loss - KlLossAndGrad(minus, batch, d).loss) / 2e-5;
      worst = std::max(worst, std::abs(fd - grad(i)) /
                                  std::max({std::abs(fd), std::abs(grad(i)), 1e-6}));
    }
  }
  return worst;
}

Outcome GradientChecks() {
  const double linear = WorstFiniteDifference({8, {}, 2}, 31);
  const double mlp = WorstFiniteDifference({8, {64, 64}, 2}, 32);
  return {linear < 1e-4 && mlp < 1e-4,
          Fmt("50 coordinates each, worst relative error linear %.1e, 2x64 MLP %.1e (tol 1e-4)",
              linear, mlp)};
}

// ---------------------------------------------------------------- param server

Outcome ParamServerCorrectness() {
  const auto start = Steady::now();
  // Additivity.
  RandomStream init(5);
  const Vector theta0 = init.StandardNormal(64);
  double add_err = 0.0;
  std::uint64_t final_version = 0;
  {
    ParamStore store(theta0);
    std::vector<std::vector<Vector>> deltas(4);
    for (int w = 0; w < 4; ++w) {
      RandomStream rng(50 + w);
      for (int i = 0; i < 250; ++i) deltas[w].push_back(rng.StandardNormal(64));
    }
    std::vector<std::thread> threads;
    for (int w = 0; w < 4; ++w)
      threads.emplace_back([&, w] {
        for (const auto& d : deltas[w]) store.Push(d, store.Get().version);
      });
    for (auto& t : threads) t.join();
    Vector expected = theta0;
    for (const auto& ds : deltas)
      for (const auto& d : ds) expected += d;
    add_err = (*store.Get().theta - expected).cwiseAbs().maxCoeff();
    final_version = store.Get().version;
  }
  // Journal byte-compare with 8 readers; gap-free versions.
  bool atomic_ok = true, gap_free = true;
  std::size_t snapshots = 0;
  {
    ParamStore store(theta0);
    std::mutex jm;
    std::map<std::uint64_t, Vector> journal{{0, theta0}};
    store.set_observer([&](std::uint64_t v, const Vector& th) {
      std::lock_guard<std::mutex> lock(jm);
      if (journal.count(v)) gap_free = false;
      journal[v] = th;
    });
    std::atomic<bool> done{false};
    std::vector<std::vector<std::pair<std::uint64_t, Vector>>> seen(8);
    std::vector<std::thread> readers;
    for (int r = 0; r < 8; ++r)
      readers.emplace_back([&, r] {
        while (!done) {
          const auto s = store.Get();
          seen[r].emplace_back(s.version, *s.theta);
        }
      });
    std::vector<std::thread> writers;
    for (int w = 0; w < 2; ++w)
      writers.emplace_back([&, w] {
        RandomStream rng(60 + w);
        for (int i = 0; i < 1000; ++i) store.Push(rng.StandardNormal(64), 0);
      });
    for (auto& t : writers) t.join();
    done = true;
    for (auto& t : readers) t.join();
    for (const auto& per : seen) {
      for (const auto& [v, th] : per) {
        ++snapshots;
        const auto it = journal.find(v);
        if (it == journal.end() ||
            std::memcmp(it->second.data(), th.data(), sizeof(double) * th.size()) != 0) {
          atomic_ok = false;
        }
      }
    }
    std::uint64_t expect = 0;
    for (const auto& [v, th] : journal) gap_free = gap_free && v == expect++;
    gap_free = gap_free && journal.size() == 2001;
    const auto st = store.stats();
    gap_free = gap_free && st.applied + st.rejected == st.pushed;
  }
  // Fuzz.
  int crashes = 0, decoded = 0;
  RandomStream rng(7);
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint8_t> bytes;
    if (i % 2 == 0) {
      WireMessage m;
      m.kind = MessageKind::kParams;
      m.version = rng.Next();
      for (int j = 0; j < static_cast<int>(rng.Next() % 5); ++j) m.payload.push_back(rng.Normal());
      bytes = EncodeMessage(m);
      for (int f = 0; f < static_cast<int>(rng.Next() % 3); ++f)
        bytes[rng.Next() % bytes.size()] ^= static_cast<std::uint8_t>(rng.Next());
      if (rng.Next() % 4 == 0) bytes.resize(rng.Next() % (bytes.size() + 1));
    } else {
      bytes.resize(rng.Next() % 80);
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.Next());
    }
    try {
      const WireMessage m = DecodeMessage(bytes);
      if (!(DecodeMessage(EncodeMessage(m)) == m)) ++crashes;
      ++decoded;
    } catch (const ProtocolError&) {
    } catch (...) {
      ++crashes;
    }
  }
  const double took = Seconds(start);
  return {add_err <= 1e-9 && final_version == 1000 && atomic_ok && gap_free && crashes == 0 &&
              took < 60.0,
          Fmt("additivity err %.1e (tol 1e-9), %zu snapshots journal-matched %s, "
              "versions gap-free %s, fuzz 10000 frames (%d decoded, %d bad), %.2f s",
              add_err, snapshots, atomic_ok ? "yes" : "no", gap_free ? "yes" : "no", decoded,
              crashes, took)};
}

// ---------------------------------------------------------------- degeneracy

Outcome Degeneracy() {
  ExperimentConfig c = LoadConfig(kConfigDir / "reach_mdgps.ini");
  c.clock = ClockKind::kLogical;
  c.pacing_s = 0.0;
  c.workers = 1;
  c.iterations = 5;
  const std::string sync = CurvesCsv(RunSync(c).metrics);
  c.mode = RunMode::kAsync;
  c.barrier = true;
  const std::string async = CurvesCsv(RunAsync(c).metrics);
  fs::create_directories(kOutDir / "degeneracy");
  WriteTextFile(kOutDir / "degeneracy" / "sync.csv", sync);
  WriteTextFile(kOutDir / "degeneracy" / "async_barrier.csv", async);
  return {sync == async, Fmt("W=1, pacing 0, logical clock, 5 iterations: CSVs %s (%zu bytes)",
                             sync == async ? "byte-identical" : "differ", sync.size())};
}

// ---------------------------------------------------------------- sweep

struct SweepOutcomes {
  Outcome end_to_end, speedup, samples;
};

SweepOutcomes SweepCriteria() {
  const ExperimentConfig base = LoadConfig(kConfigDir / "reach_mdgps.ini");
  const auto start = Steady::now();
  const SweepResult sweep = RunSweep(base, DefaultSweep(), kOutDir / "sweep");
  const double took = Seconds(start);
  std::map<std::string, const SpeedupRow*> by_mode;
  for (const auto& r : sweep.speedup) by_mode[r.mode] = &r;
  const MetricsLog& gps = sweep.curves.front().log;
  SweepOutcomes out;

  const double initial = gps.rows.front().test_cost;
  const double final_cost = gps.rows.back().test_cost;
  const double ratio = final_cost / initial;
  out.end_to_end = {
      ratio <= 0.30 && gps.rows.size() == 16,
      Fmt("sync GPS, K=15, pacing 0.2 s: test cost %.3f -> %.3f (%.1f%% of initial, "
          "limit 30%%), %.0f s",
          initial, final_cost, 100.0 * ratio, gps.rows.back().wall_clock_s)};

  const SpeedupRow& s1 = *by_mode.at("GPS");
  const SpeedupRow& a1 = *by_mode.at("AGPS");
  const SpeedupRow& s4 = *by_mode.at("ADGPS-4");
  const SpeedupRow& s8 = *by_mode.at("ADGPS-8");
  const bool crossed = s1.crossed && s4.crossed && s8.crossed;
  const double frac4 = s4.wallclock_to_threshold / s1.wallclock_to_threshold;
  const bool ok = crossed && frac4 <= 0.6 &&
                  s8.wallclock_to_threshold < s4.wallclock_to_threshold &&
                  s1.speedup_vs_sync < s4.speedup_vs_sync &&
                  s4.speedup_vs_sync < s8.speedup_vs_sync;
  out.speedup = {
      ok, Fmt("threshold %.3f; time to threshold GPS %.1f s, ADGPS-4 %.1f s (%.2fx of sync, "
              "limit 0.6), ADGPS-8 %.1f s; speedup W=1/4/8: %.2f/%.2f/%.2f (AGPS %.2f); "
              "sweep %.0f s",
              sweep.threshold, s1.wallclock_to_threshold, s4.wallclock_to_threshold, frac4,
              s8.wallclock_to_threshold, s1.speedup_vs_sync, s4.speedup_vs_sync,
              s8.speedup_vs_sync, a1.speedup_vs_sync, took)};

  out.samples = {s1.crossed && s8.crossed && s8.sample_ratio_vs_sync <= 2.0,
                 Fmt("rollouts to threshold GPS %.0f, ADGPS-8 %.0f (ratio %.2f, limit 2.0)",
                     s1.rollouts_to_threshold, s8.rollouts_to_threshold,
                     s8.sample_ratio_vs_sync)};
  return out;
}

// ---------------------------------------------------------------- utilization

Outcome Utilization() {
  ExperimentConfig c = LoadConfig(kConfigDir / "utilization.ini");
  fs::create_directories(kOutDir / "utilization");
  const MetricsLog sync = RunAndRecord(c, "GPS", kOutDir / "utilization" / "sync").metrics;
  c.mode = RunMode::kAsync;
  const MetricsLog async =
      RunAndRecord(c, ModeName(c), kOutDir / "utilization" / "async").metrics;
  const double sync_idle = sync.rows.back().idle_fraction;
  const double async_idle = async.rows.back().idle_fraction;
  return {c.pacing_s >= 0.2 && c.sgd_steps >= 200 && async_idle < 0.20 && sync_idle > 0.50,
          Fmt("pacing %.2f s, N=%d SGD steps, W=%d: async idle %.1f%% (limit 20%%), "
              "sync idle %.1f%% (needs > 50%%)",
              c.pacing_s, c.sgd_steps, c.workers, 100.0 * async_idle, 100.0 * sync_idle)};
}

}  // namespace
}  // namespace adgps

int main() {
  using adgps::Outcome;
  int failures = 0;
  auto report = [&](const char* name, const Outcome& o) {
    std::printf("%s %-24s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  auto guarded = [&](const char* name, const std::function<Outcome()>& f) {
    try {
      report(name, f());
    } catch (const std::exception& e) {
      report(name, {false, std::string("exception: ") + e.what()});
    }
  };
  guarded("lqr_oracle", adgps::LqrOracle);
  guarded("kl_constraint", adgps::KlConstraint);
  guarded("pi2_reps", adgps::Pi2Reps);
  guarded("gradient_checks", adgps::GradientChecks);
  guarded("param_server", adgps::ParamServerCorrectness);
  guarded("sync_async_degeneracy", adgps::Degeneracy);
  try {
    const auto s = adgps::SweepCriteria();
    report("end_to_end_learning", s.end_to_end);
    report("speedup_trend", s.speedup);
    report("sample_count", s.samples);
  } catch (const std::exception& e) {
    const Outcome o{false, std::string("exception: ") + e.what()};
    report("end_to_end_learning", o);
    report("speedup_trend", o);
    report("sample_count", o);
  }
  guarded("utilization", adgps::Utilization);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
