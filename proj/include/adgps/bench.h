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

#ifndef ADGPS_BENCH_H_
#define ADGPS_BENCH_H_

#include <filesystem>
#include <string>
#include <vector>

#include "adgps/config.h"
#include "adgps/metrics.h"
#include "adgps/orchestrator.h"

namespace adgps {

struct Crossing {
  bool crossed = false;
  double wall_clock_s = 0.0;
  double rollouts = 0.0;
};

// First point where test_cost <= threshold, linearly interpolated between
// the two logged rows that bracket it.
Crossing FindCrossing(const MetricsLog& log, double threshold);

struct NamedCurve {
  std::string mode;
  MetricsLog log;
};

struct SpeedupRow {
  std::string mode;
  bool crossed = false;
  double wallclock_to_threshold = 0.0;
  double rollouts_to_threshold = 0.0;
  double speedup_vs_sync = 0.0;
  double sample_ratio_vs_sync = 0.0;
};

// The first curve is the synchronous baseline. Non-crossing curves yield a
// row with crossed = false and NaN ratios.
std::vector<SpeedupRow> ComputeSpeedup(const std::vector<NamedCurve>& curves,
                                       double threshold);

// fraction * initial test cost of the baseline.
double DefaultThreshold(const MetricsLog& baseline, double fraction);

inline constexpr const char* kSpeedupHeader =
    "mode,crossed,wallclock_to_threshold,rollouts_to_threshold,"
    "speedup_vs_sync,sample_ratio_vs_sync,threshold";
std::string SpeedupCsv(const std::vector<SpeedupRow>& rows, double threshold);

struct SweepEntry {
  std::string name;
  RunMode mode = RunMode::kSync;
  int workers = 1;
};

// GPS, AGPS, ADGPS-4, ADGPS-8.
std::vector<SweepEntry> DefaultSweep();
ExperimentConfig ConfigForEntry(const ExperimentConfig& base, const SweepEntry& entry);
std::string ModeName(const ExperimentConfig& config);

// Runs one configuration into `dir`: curves.csv (streamed, truncation marker
// on a runtime fault), summary.csv and params.bin. Rethrows the fault.
ExperimentResult RunAndRecord(const ExperimentConfig& config,
                              const std::string& mode_name,
                              const std::filesystem::path& dir);

struct SweepResult {
  std::vector<NamedCurve> curves;
  std::vector<SummaryRow> summaries;
  std::vector<SpeedupRow> speedup;
  double threshold = 0.0;
};

// Runs the entries sequentially into dir/<name>/ and writes dir/summary.csv
// and dir/speedup.csv.
SweepResult RunSweep(const ExperimentConfig& base,
                     const std::vector<SweepEntry>& entries,
                     const std::filesystem::path& dir);

}  // namespace adgps

#endif  // ADGPS_BENCH_H_
