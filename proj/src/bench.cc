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

#include "adgps/bench.h"

#include <cmath>
#include <limits>

#include "adgps/errors.h"
#include "adgps/wire.h"

namespace adgps {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Crossing FindCrossing(const MetricsLog& log, double threshold) {
  Crossing out;
  for (std::size_t j = 0; j < log.rows.size(); ++j) {
    const MetricsRow& b = log.rows[j];
    if (b.test_cost > threshold) continue;
    out.crossed = true;
    if (j == 0 || b.test_cost == threshold) {
      out.wall_clock_s = b.wall_clock_s;
      out.rollouts = static_cast<double>(b.cumulative_rollouts);
      return out;
    }
    const MetricsRow& a = log.rows[j - 1];
    const double f = (a.test_cost - threshold) / (a.test_cost - b.test_cost);
    out.wall_clock_s = a.wall_clock_s + f * (b.wall_clock_s - a.wall_clock_s);
    out.rollouts = static_cast<double>(a.cumulative_rollouts) +
                   f * static_cast<double>(b.cumulative_rollouts - a.cumulative_rollouts);
    return out;
  }
  return out;
}

std::vector<SpeedupRow> ComputeSpeedup(const std::vector<NamedCurve>& curves,
                                       double threshold) {
  std::vector<SpeedupRow> rows;
  if (curves.empty()) return rows;
  const Crossing base = FindCrossing(curves.front().log, threshold);
  for (const NamedCurve& curve : curves) {
    SpeedupRow row;
    row.mode = curve.mode;
    const Crossing c = FindCrossing(curve.log, threshold);
    row.crossed = c.crossed;
    if (!c.crossed) {
      row.wallclock_to_threshold = kNaN;
      row.rollouts_to_threshold = kNaN;
      row.speedup_vs_sync = kNaN;
      row.sample_ratio_vs_sync = kNaN;
    } else {
      row.wallclock_to_threshold = c.wall_clock_s;
      row.rollouts_to_threshold = c.rollouts;
      row.speedup_vs_sync = base.crossed ? base.wall_clock_s / c.wall_clock_s : kNaN;
      row.sample_ratio_vs_sync = base.crossed ? c.rollouts / base.rollouts : kNaN;
    }
    rows.push_back(row);
  }
  return rows;
}

double DefaultThreshold(const MetricsLog& baseline, double fraction) {
  if (baseline.rows.empty()) throw DataError("baseline curve has no rows");
  return fraction * baseline.rows.front().test_cost;
}

std::string SpeedupCsv(const std::vector<SpeedupRow>& rows, double threshold) {
  std::string out = std::string(kSpeedupHeader) + "\n";
  for (const SpeedupRow& r : rows) {
    out += r.mode + "," + (r.crossed ? "true" : "false") + "," +
           FormatDouble(r.wallclock_to_threshold) + "," +
           FormatDouble(r.rollouts_to_threshold) + "," +
           FormatDouble(r.speedup_vs_sync) + "," +
           FormatDouble(r.sample_ratio_vs_sync) + "," + FormatDouble(threshold) +
           "\n";
  }
  return out;
}

std::vector<SweepEntry> DefaultSweep() {
  return {{"GPS", RunMode::kSync, 1},
          {"AGPS", RunMode::kAsync, 1},
          {"ADGPS-4", RunMode::kAsync, 4},
          {"ADGPS-8", RunMode::kAsync, 8}};
}

ExperimentConfig ConfigForEntry(const ExperimentConfig& base,
                                const SweepEntry& entry) {
  ExperimentConfig c = base;
  c.mode = entry.mode;
  c.workers = entry.workers;
  c.barrier = false;
  return c;
}

std::string ModeName(const ExperimentConfig& config) {
  if (config.mode == RunMode::kSync) return "GPS";
  if (config.workers == 1) return "AGPS";
  return "ADGPS-" + std::to_string(config.workers);
}

ExperimentResult RunAndRecord(const ExperimentConfig& config,
                              const std::string& mode_name,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  CurvesWriter writer(dir / "curves.csv");
  MetricsLog partial;
  ExperimentResult result;
  try {
    result = RunExperiment(config, [&](const MetricsRow& row) {
      writer.Write(row);
      partial.rows.push_back(row);
    });
  } catch (...) {
    writer.MarkTruncated();
    partial.truncated = true;
    const SummaryRow s = Summarize(partial, mode_name, config.Hash(), config.workers);
    WriteTextFile(dir / "summary.csv",
                  std::string(kSummaryHeader) + "\n" + FormatSummaryRow(s) + "\n");
    throw;
  }
  const SummaryRow s =
      Summarize(result.metrics, mode_name, config.Hash(), config.workers);
  WriteTextFile(dir / "summary.csv",
                std::string(kSummaryHeader) + "\n" + FormatSummaryRow(s) + "\n");
  const Vector& theta = *result.final_params.theta;
  const WireMessage params{MessageKind::kParams, result.final_params.version,
                           std::vector<double>(theta.data(), theta.data() + theta.size())};
  const std::vector<std::uint8_t> bytes = EncodeMessage(params);
  WriteTextFile(dir / "params.bin", std::string(bytes.begin(), bytes.end()));
  return result;
}

SweepResult RunSweep(const ExperimentConfig& base,
                     const std::vector<SweepEntry>& entries,
                     const std::filesystem::path& dir) {
  SweepResult sweep;
  std::filesystem::create_directories(dir);
  std::string summary = std::string(kSummaryHeader) + "\n";
  for (const SweepEntry& entry : entries) {
    const ExperimentConfig config = ConfigForEntry(base, entry);
    ExperimentResult r = RunAndRecord(config, entry.name, dir / entry.name);
    const SummaryRow row =
        Summarize(r.metrics, entry.name, config.Hash(), config.workers);
    summary += FormatSummaryRow(row) + "\n";
    WriteTextFile(dir / "summary.csv", summary);
    sweep.summaries.push_back(row);
    sweep.curves.push_back({entry.name, std::move(r.metrics)});
  }
  if (!sweep.curves.empty()) {
    sweep.threshold =
        DefaultThreshold(sweep.curves.front().log, base.threshold_fraction);
    sweep.speedup = ComputeSpeedup(sweep.curves, sweep.threshold);
    WriteTextFile(dir / "speedup.csv", SpeedupCsv(sweep.speedup, sweep.threshold));
  }
  return sweep;
}

}  // namespace adgps
