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

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "adgps/config.h"
#include "adgps/errors.h"
#include "adgps/metrics.h"

namespace adgps {
namespace {

int ErrorLine(const std::string& text) {
  try {
    ParseConfig(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

TEST(Config, DefaultsValidate) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.Architecture().Widths(), (std::vector<int>{8, 64, 64, 2}));
}

TEST(Config, ParsesSectionsAndComments) {
  const auto c = ParseConfig(
      "# comment\n"
      "[experiment]\n"
      "mode = async ; trailing\n"
      "workers = 4\n"
      "algorithm = badmm\n"
      "\n"
      "[global]\n"
      "hidden = 32, 16\n"
      "[sim]\n"
      "gravity = true\n"
      "[task]\n"
      "goal_lower = -0.1, 0.35\n");
  EXPECT_EQ(c.mode, RunMode::kAsync);
  EXPECT_EQ(c.workers, 4);
  EXPECT_EQ(c.algorithm, AlgorithmMode::kBadmm);
  EXPECT_EQ(c.hidden, (std::vector<int>{32, 16}));
  EXPECT_TRUE(c.model.gravity);
  EXPECT_DOUBLE_EQ(c.goal_region.lower(0), -0.1);
  EXPECT_EQ(c.EffectiveAlternations(), 1);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(ErrorLine("[experiment]\nworkers = 2\nbogus = 1\n"), 3);
  EXPECT_EQ(ErrorLine("[experiment]\n\nworkers = two\n"), 3);
  EXPECT_EQ(ErrorLine("workers = 2\n"), 1);
  EXPECT_EQ(ErrorLine("[nosuch]\n"), 1);
  EXPECT_EQ(ErrorLine("[experiment]\nmode = sometimes\n"), 2);
  EXPECT_EQ(ErrorLine("[experiment]\nworkers\n"), 2);
  try {
    ParseConfig("[experiment]\nseed = x\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 2: ", 0), 0u);
  }
}

TEST(Config, ValidateRejectsBadValues) {
  auto expect_bad = [](const std::string& key, const std::string& value) {
    ExperimentConfig c;
    c.Set(key, value);
    EXPECT_THROW(c.Validate(), ConfigError) << key << "=" << value;
  };
  expect_bad("experiment.workers", "0");
  expect_bad("experiment.rollouts_per_instance", "1");
  expect_bad("experiment.barrier", "true");
  expect_bad("global.momentum", "1.0");
  expect_bad("global.rho_max", "0.5");
  expect_bad("sim.horizon", "1");
  expect_bad("task.test_instances", "0");
  expect_bad("task.goal_upper", "1.5, 0.7");
  expect_bad("local.epsilon", "-1");
  ExperimentConfig zero;
  zero.Set("task.w_x", "0");
  zero.Set("task.w_u", "0");
  zero.Set("task.w_vel", "0");
  EXPECT_THROW(zero.Validate(), ConfigError);
}

TEST(Config, DescribeRoundTrips) {
  ExperimentConfig c;
  c.Set("local.epsilon", "0.1");
  c.Set("experiment.pacing_s", "0.2");
  c.Set("global.hidden", "7");
  std::string ini, section;
  std::istringstream lines(c.Describe());
  for (std::string line; std::getline(lines, line);) {
    const auto dot = line.find('.');
    const std::string sec = line.substr(0, dot);
    if (sec != section) {
      ini += "[" + sec + "]\n";
      section = sec;
    }
    ini += line.substr(dot + 1) + "\n";
  }
  const ExperimentConfig back = ParseConfig(ini);
  EXPECT_EQ(back.Describe(), c.Describe());
  EXPECT_EQ(back.Hash(), c.Hash());
  ExperimentConfig other = c;
  other.Set("experiment.seed", "2");
  EXPECT_NE(other.Hash(), c.Hash());
  EXPECT_EQ(c.Hash().size(), 16u);
}

TEST(Config, FormatDoubleShortestExact) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -0.0, 2.5}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.1), "0.1");
}

TEST(Config, ShippedConfigsLoad) {
  const std::filesystem::path dir = ADGPS_CONFIG_DIR;
  int loaded = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(LoadConfig(entry.path()).Validate()) << entry.path();
    ++loaded;
  }
  EXPECT_GT(loaded, 0);
  EXPECT_THROW(LoadConfig(dir / "missing.ini"), ConfigError);
}

MetricsLog SampleLog() {
  MetricsLog log;
  for (int k = 0; k < 3; ++k) {
    MetricsRow r;
    r.iteration = k;
    r.wall_clock_s = 1.25 * k;
    r.cumulative_rollouts = 80 * k;
    r.train_cost = 10.0 / (k + 1);
    r.val_cost = 11.0 / (k + 1);
    r.test_cost = 12.0 / (k + 1);
    r.mean_staleness = 0.1 * k;
    r.idle_fraction = 0.05 * k;
    log.rows.push_back(r);
  }
  return log;
}

TEST(Metrics, CsvSchemaAndRoundTrip) {
  const MetricsLog log = SampleLog();
  const std::string csv = CurvesCsv(log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCurvesHeader);
  const MetricsLog back = ParseCurvesCsv(csv);
  ASSERT_EQ(back.rows.size(), 3u);
  EXPECT_FALSE(back.truncated);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(back.rows[k].test_cost, log.rows[k].test_cost);
    EXPECT_EQ(back.rows[k].cumulative_rollouts, log.rows[k].cumulative_rollouts);
    EXPECT_EQ(back.rows[k].wall_clock_s, log.rows[k].wall_clock_s);
  }
  EXPECT_EQ(CurvesCsv(back), csv);
}

TEST(Metrics, SchemaViolationsRejected) {
  EXPECT_THROW(ParseCurvesCsv(""), DataError);
  EXPECT_THROW(ParseCurvesCsv("iteration,wall\n"), DataError);
  const std::string header = std::string(kCurvesHeader) + "\n";
  EXPECT_THROW(ParseCurvesCsv(header + "0,1,2,3\n"), DataError);
  EXPECT_THROW(ParseCurvesCsv(header + "0,x,0,1,1,1,0,0\n"), DataError);
  EXPECT_NO_THROW(ParseCurvesCsv(header));
}

TEST(Metrics, WriterStreamsAndMarksTruncation) {
  const auto path = std::filesystem::temp_directory_path() / "adgps_curves_test.csv";
  std::filesystem::remove(path);
  {
    CurvesWriter w(path);
    const MetricsLog log = SampleLog();
    w.Write(log.rows[0]);
    w.Write(log.rows[1]);
    EXPECT_EQ(ReadCurvesCsv(path).rows.size(), 2u);
    w.MarkTruncated();
  }
  const MetricsLog back = ReadCurvesCsv(path);
  EXPECT_EQ(back.rows.size(), 2u);
  EXPECT_TRUE(back.truncated);
  EXPECT_NE(ReadTextFile(path).find(TruncationRow()), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Metrics, Summary) {
  MetricsLog log = SampleLog();
  const SummaryRow s = Summarize(log, "ADGPS-4", "abc", 4);
  EXPECT_EQ(s.iterations, 2);
  EXPECT_EQ(s.initial_test_cost, 12.0);
  EXPECT_EQ(s.final_test_cost, 4.0);
  EXPECT_EQ(s.rollouts, 160);
  EXPECT_EQ(s.workers, 4);
  const std::string row = FormatSummaryRow(s);
  EXPECT_EQ(row.rfind("ADGPS-4,abc,4,2,", 0), 0u);
  int commas = 0;
  for (char ch : row) commas += ch == ',';
  int header_commas = 0;
  for (const char* p = kSummaryHeader; *p; ++p) header_commas += *p == ',';
  EXPECT_EQ(commas, header_commas);
}

}  // namespace
}  // namespace adgps
