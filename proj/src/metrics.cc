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

#include "adgps/metrics.h"

#include <fstream>
#include <sstream>

#include "adgps/config.h"
#include "adgps/errors.h"

namespace adgps {
namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double ToDouble(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("curves line " + std::to_string(line) + ": bad number '" +
                    s + "'");
  }
}

}  // namespace

std::string FormatRow(const MetricsRow& r) {
  std::string out = std::to_string(r.iteration);
  out += "," + FormatDouble(r.wall_clock_s);
  out += "," + std::to_string(r.cumulative_rollouts);
  for (double v : {r.train_cost, r.val_cost, r.test_cost, r.mean_staleness,
                   r.idle_fraction}) {
    out += "," + FormatDouble(v);
  }
  return out;
}

std::string TruncationRow() { return std::string(kTruncatedMarker) + ",,,,,,,"; }

std::string CurvesCsv(const MetricsLog& log) {
  std::string out = std::string(kCurvesHeader) + "\n";
  for (const MetricsRow& r : log.rows) out += FormatRow(r) + "\n";
  if (log.truncated) out += TruncationRow() + "\n";
  return out;
}

MetricsLog ParseCurvesCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCurvesHeader) {
    throw DataError("curves: header does not match the expected schema");
  }
  MetricsLog log;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != 8) {
      throw DataError("curves line " + std::to_string(n) + ": expected 8 columns");
    }
    if (cells[0] == kTruncatedMarker) {
      log.truncated = true;
      break;
    }
    MetricsRow r;
    r.iteration = static_cast<int>(ToDouble(cells[0], n));
    r.wall_clock_s = ToDouble(cells[1], n);
    r.cumulative_rollouts = static_cast<std::int64_t>(ToDouble(cells[2], n));
    r.train_cost = ToDouble(cells[3], n);
    r.val_cost = ToDouble(cells[4], n);
    r.test_cost = ToDouble(cells[5], n);
    r.mean_staleness = ToDouble(cells[6], n);
    r.idle_fraction = ToDouble(cells[7], n);
    log.rows.push_back(r);
  }
  return log;
}

MetricsLog ReadCurvesCsv(const std::filesystem::path& path) {
  return ParseCurvesCsv(ReadTextFile(path));
}

CurvesWriter::CurvesWriter(const std::filesystem::path& path) : path_(path) {
  WriteTextFile(path_, std::string(kCurvesHeader) + "\n");
}

void CurvesWriter::Write(const MetricsRow& row) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << FormatRow(row) << "\n";
}

void CurvesWriter::MarkTruncated() {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << TruncationRow() << "\n";
}

SummaryRow Summarize(const MetricsLog& log, const std::string& mode,
                     const std::string& config_hash, int workers) {
  SummaryRow s;
  s.mode = mode;
  s.config_hash = config_hash;
  s.workers = workers;
  s.truncated = log.truncated;
  if (log.rows.empty()) return s;
  const MetricsRow& first = log.rows.front();
  const MetricsRow& last = log.rows.back();
  s.iterations = last.iteration;
  s.initial_test_cost = first.test_cost;
  s.final_test_cost = last.test_cost;
  s.wall_clock_s = last.wall_clock_s;
  s.rollouts = last.cumulative_rollouts;
  s.mean_staleness = last.mean_staleness;
  s.idle_fraction = last.idle_fraction;
  return s;
}

std::string FormatSummaryRow(const SummaryRow& s) {
  return s.mode + "," + s.config_hash + "," + std::to_string(s.workers) + "," +
         std::to_string(s.iterations) + "," + FormatDouble(s.initial_test_cost) +
         "," + FormatDouble(s.final_test_cost) + "," +
         FormatDouble(s.wall_clock_s) + "," + std::to_string(s.rollouts) + "," +
         FormatDouble(s.mean_staleness) + "," + FormatDouble(s.idle_fraction) +
         "," + (s.truncated ? "true" : "false");
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace adgps
