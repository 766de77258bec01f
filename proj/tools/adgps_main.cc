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

// adgps: experiment runner.
//
//   adgps run --config FILE [--mode sync|async] [--workers W] [--seed S]
//             [--out DIR] [--pacing SECONDS] [--set section.key=value]...
//             [--dry-run]
//   adgps sweep --config FILE [--out DIR] ...
//   adgps eval --config FILE --params FILE
//   adgps serve-params --config FILE [--params FILE] [--host H] [--port P]
//   adgps speedup --curve MODE=PATH [--curve MODE=PATH]... [--threshold X]
//
// Exit codes: 0 ok, 1 runtime fault, 2 configuration error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adgps/bench.h"
#include "adgps/config.h"
#include "adgps/errors.h"
#include "adgps/metrics.h"
#include "adgps/orchestrator.h"
#include "adgps/param_store.h"
#include "adgps/transport.h"
#include "adgps/wire.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<double> pacing;
  std::vector<std::string> sets;
  std::string out = "out";
  bool dry_run = false;
};

void AddCommon(CLI::App* cmd, CommonFlags& f, bool with_mode) {
  cmd->add_option("--config", f.config_path, "experiment config file")->required();
  if (with_mode) {
    cmd->add_option("--mode", f.mode, "sync or async");
    cmd->add_option("--workers", f.workers, "local/global worker pairs");
  }
  cmd->add_option("--seed", f.seed, "experiment seed");
  cmd->add_option("--pacing", f.pacing, "seconds per rollout");
  cmd->add_option("--set", f.sets, "override, section.key=value");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--dry-run", f.dry_run, "validate and print the resolved config");
}

adgps::ExperimentConfig Resolve(const CommonFlags& f) {
  adgps::ExperimentConfig c = adgps::LoadConfig(f.config_path);
  for (const std::string& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw adgps::ConfigError("--set expects section.key=value, got '" + s + "'");
    }
    c.Set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.mode) c.Set("experiment.mode", *f.mode);
  if (f.workers) c.workers = *f.workers;
  if (f.seed) c.seed = *f.seed;
  if (f.pacing) c.pacing_s = *f.pacing;
  c.Validate();
  return c;
}

void PrintResolved(const adgps::ExperimentConfig& c) {
  std::cout << c.Describe() << "config_hash = " << c.Hash() << "\n";
}

adgps::Vector LoadParams(const std::string& path) {
  const std::string bytes = adgps::ReadTextFile(path);
  const adgps::WireMessage m = adgps::DecodeMessage(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  if (m.kind != adgps::MessageKind::kParams) {
    throw adgps::ProtocolError(path + " does not hold a PARAMS frame");
  }
  return Eigen::Map<const adgps::Vector>(m.payload.data(),
                                         static_cast<Eigen::Index>(m.payload.size()));
}

int CmdRun(const CommonFlags& f) {
  const adgps::ExperimentConfig c = Resolve(f);
  if (f.dry_run) {
    PrintResolved(c);
    return kExitOk;
  }
  const std::string name = adgps::ModeName(c);
  const auto result = adgps::RunAndRecord(c, name, f.out);
  const auto& rows = result.metrics.rows;
  std::cout << name << ": " << rows.size() - 1 << " iterations, test cost "
            << rows.front().test_cost << " -> " << rows.back().test_cost << ", "
            << rows.back().wall_clock_s << " s, wrote " << f.out << "\n";
  return kExitOk;
}

int CmdSweep(const CommonFlags& f) {
  const adgps::ExperimentConfig c = Resolve(f);
  const auto entries = adgps::DefaultSweep();
  if (f.dry_run) {
    PrintResolved(c);
    for (const auto& e : entries) std::cout << "sweep: " << e.name << "\n";
    return kExitOk;
  }
  const adgps::SweepResult sweep = adgps::RunSweep(c, entries, f.out);
  std::cout << adgps::SpeedupCsv(sweep.speedup, sweep.threshold);
  return kExitOk;
}

int CmdEval(const CommonFlags& f, const std::string& params_path) {
  const adgps::ExperimentConfig c = Resolve(f);
  const adgps::ExperimentSetup setup = adgps::ExperimentSetup::Create(c);
  adgps::GlobalPolicyParams params = setup.initial;
  if (!params_path.empty()) params.theta = LoadParams(params_path);
  params.Validate();
  if (f.dry_run) {
    PrintResolved(c);
    return kExitOk;
  }
  const struct {
    const char* name;
    const std::vector<adgps::TaskInstance>* set;
  } splits[] = {{"train", &setup.split.train},
                {"validation", &setup.split.validation},
                {"test", &setup.split.test}};
  for (const auto& s : splits) {
    if (s.set->empty()) continue;
    const auto r = adgps::EvaluatePolicy(c.model, params, *s.set);
    for (std::size_t i = 0; i < r.per_instance.size(); ++i) {
      std::cout << s.name << "," << (*s.set)[i].instance_id << ","
                << adgps::FormatDouble(r.per_instance[i]) << "\n";
    }
    std::cout << s.name << ",mean," << adgps::FormatDouble(r.aggregate) << "\n";
  }
  return kExitOk;
}

int CmdServe(const CommonFlags& f, const std::string& params_path,
             const std::string& host, int port) {
  const adgps::ExperimentConfig c = Resolve(f);
  adgps::Vector theta = adgps::ExperimentSetup::Create(c).initial.theta;
  if (!params_path.empty()) theta = LoadParams(params_path);
  if (f.dry_run) {
    PrintResolved(c);
    return kExitOk;
  }
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  adgps::ParamStore store(theta);
  adgps::ParamServer server(store);
  const int bound = server.Start(host, port);
  std::cout << "serving " << theta.size() << " parameters on " << host << ":"
            << bound << std::endl;
  int received = 0;
  sigwait(&signals, &received);
  server.Stop();
  const auto stats = store.stats();
  std::cout << "stopped: applied " << stats.applied << ", rejected "
            << stats.rejected << "\n";
  return kExitOk;
}

int CmdSpeedup(const std::vector<std::string>& curves, std::optional<double> threshold,
               double fraction, const std::string& out) {
  std::vector<adgps::NamedCurve> named;
  for (const std::string& spec : curves) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw adgps::ConfigError("--curve expects MODE=PATH, got '" + spec + "'");
    }
    named.push_back({spec.substr(0, eq), adgps::ReadCurvesCsv(spec.substr(eq + 1))});
  }
  const double thr =
      threshold ? *threshold : adgps::DefaultThreshold(named.front().log, fraction);
  const std::string csv = adgps::SpeedupCsv(adgps::ComputeSpeedup(named, thr), thr);
  if (!out.empty()) adgps::WriteTextFile(out, csv);
  std::cout << csv;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous distributed guided policy search"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, eval_flags, serve_flags;
  auto* run = app.add_subcommand("run", "run one configuration");
  AddCommon(run, run_flags, true);
  auto* sweep = app.add_subcommand("sweep", "run GPS, AGPS, ADGPS-4, ADGPS-8");
  AddCommon(sweep, sweep_flags, false);

  std::string eval_params;
  auto* eval = app.add_subcommand("eval", "evaluate saved parameters");
  AddCommon(eval, eval_flags, false);
  eval->add_option("--params", eval_params, "params.bin from a run");

  std::string serve_params, host = "127.0.0.1";
  int port = 5555;
  auto* serve = app.add_subcommand("serve-params", "standalone parameter server");
  AddCommon(serve, serve_flags, false);
  serve->add_option("--params", serve_params, "initial params.bin");
  serve->add_option("--host", host, "listen address");
  serve->add_option("--port", port, "listen port, 0 for ephemeral");

  std::vector<std::string> curves;
  std::optional<double> threshold;
  double fraction = 0.3;
  std::string speedup_out;
  auto* speedup = app.add_subcommand("speedup", "threshold-crossing table");
  speedup->add_option("--curve", curves, "MODE=PATH, baseline first")->required();
  speedup->add_option("--threshold", threshold, "absolute cost threshold");
  speedup->add_option("--fraction", fraction,
                      "threshold as a fraction of the baseline's initial cost");
  speedup->add_option("--out", speedup_out, "write the table here too");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return CmdRun(run_flags);
    if (*sweep) return CmdSweep(sweep_flags);
    if (*eval) return CmdEval(eval_flags, eval_params);
    if (*serve) return CmdServe(serve_flags, serve_params, host, port);
    if (*speedup) return CmdSpeedup(curves, threshold, fraction, speedup_out);
  } catch (const adgps::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime fault: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
