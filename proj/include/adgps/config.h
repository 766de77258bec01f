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

#ifndef ADGPS_CONFIG_H_
#define ADGPS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "adgps/arm_sim.h"
#include "adgps/global_policy.h"

namespace adgps {

enum class AlgorithmMode { kMdgps, kBadmm };
enum class LocalOptimizer { kLqr, kPi2 };
enum class RunMode { kSync, kAsync };
enum class ClockKind { kWall, kLogical };
enum class TransportKind { kInProcess, kTcp };

struct ExperimentConfig {
  // [experiment]
  std::string name = "reach";
  AlgorithmMode algorithm = AlgorithmMode::kMdgps;
  LocalOptimizer optimizer = LocalOptimizer::kLqr;
  RunMode mode = RunMode::kSync;
  int workers = 1;
  int iterations = 15;
  int rollouts_per_instance = 10;
  double pacing_s = 0.0;
  std::uint64_t seed = 1;
  ClockKind clock = ClockKind::kWall;
  double logical_sgd_step_s = 0.001;
  bool barrier = false;
  bool shared_global_worker = false;
  TransportKind transport = TransportKind::kInProcess;
  double threshold_fraction = 0.3;

  // [local]
  double epsilon = 1.0;  // trajectory KL budget
  double kl_bound = 1.0;  // PI2 weight KL bound
  double dynamics_ridge = 1e-6;  // relative to the data scatter
  double perturb_scale = 0.0;
  double init_action_variance = 1.0;
  int badmm_alternations = 0;  // 0: 4 in sync mode, 1 in async
  double badmm_dual_step = 0.1;

  // [global]
  std::vector<int> hidden = {64, 64};
  double init_output_scale = 0.01;
  int sgd_steps = 200;  // per iteration (sync) or per epoch (async)
  int batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int replay_capacity = 50;
  double rho_max = 10.0;

  // [sim]
  ArmModel model;
  double initial_q1 = 0.0;
  double initial_q2 = 1.5707963267948966;

  // [task]
  ReachTask cost;  // target unused; filled per instance
  GoalRegion goal_region;
  int train_instances = 8;
  int validation_instances = 4;
  int test_instances = 4;

  ExperimentConfig();

  // Throws ConfigError on any invalid value.
  void Validate() const;

  Vector InitialState() const;
  InstanceSplit MakeSplit() const;
  int EffectiveAlternations() const;
  NetworkArchitecture Architecture() const;

  // "section.key = value" per line, in schema order, numbers round-trip exact.
  std::string Describe() const;
  // FNV-1a of Describe(), as 16 hex digits.
  std::string Hash() const;

  // Sets one "section.key"; throws ConfigError (anchored at `line`) on an
  // unknown key or a malformed value.
  void Set(const std::string& key, const std::string& value, int line = 0);
};

// INI-style text: [section] headers, key = value, '#' or ';' comments.
ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// Shortest text that parses back to the same double.
std::string FormatDouble(double value);

std::string ToString(AlgorithmMode mode);
std::string ToString(LocalOptimizer optimizer);
std::string ToString(RunMode mode);

}  // namespace adgps

#endif  // ADGPS_CONFIG_H_
