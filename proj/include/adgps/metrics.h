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

#ifndef ADGPS_METRICS_H_
#define ADGPS_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace adgps {

// One logged point; iteration 0 is the initial policy.
struct MetricsRow {
  int iteration = 0;
  double wall_clock_s = 0.0;
  std::int64_t cumulative_rollouts = 0;
  double train_cost = 0.0;
  double val_cost = 0.0;
  double test_cost = 0.0;
  double mean_staleness = 0.0;
  double idle_fraction = 0.0;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
  bool truncated = false;
};

inline constexpr const char* kCurvesHeader =
    "iteration,wall_clock_s,cumulative_rollouts,train_cost,val_cost,test_cost,"
    "mean_staleness,idle_fraction";
inline constexpr const char* kTruncatedMarker = "TRUNCATED";

std::string FormatRow(const MetricsRow& row);
// Marker row with the same column count as a data row.
std::string TruncationRow();
std::string CurvesCsv(const MetricsLog& log);

// Parses curves.csv; stops at a truncation marker and sets `truncated`.
// Throws DataError on a schema violation.
MetricsLog ParseCurvesCsv(const std::string& text);
MetricsLog ReadCurvesCsv(const std::filesystem::path& path);

// Appends rows as they arrive so a crash leaves a readable prefix.
class CurvesWriter {
 public:
  explicit CurvesWriter(const std::filesystem::path& path);
  void Write(const MetricsRow& row);
  void MarkTruncated();

 private:
  std::filesystem::path path_;
};

struct SummaryRow {
  std::string mode;
  std::string config_hash;
  int workers = 1;
  int iterations = 0;
  double initial_test_cost = 0.0;
  double final_test_cost = 0.0;
  double wall_clock_s = 0.0;
  std::int64_t rollouts = 0;
  double mean_staleness = 0.0;
  double idle_fraction = 0.0;
  bool truncated = false;
};

inline constexpr const char* kSummaryHeader =
    "mode,config_hash,workers,iterations,initial_test_cost,final_test_cost,"
    "wall_clock_s,rollouts,mean_staleness,idle_fraction,truncated";

SummaryRow Summarize(const MetricsLog& log, const std::string& mode,
                     const std::string& config_hash, int workers);
std::string FormatSummaryRow(const SummaryRow& row);

void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace adgps

#endif  // ADGPS_METRICS_H_
