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

#include "adgps/config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "adgps/errors.h"

namespace adgps {
namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double ParseDouble(const std::string& key, const std::string& v, int line) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'", line);
  }
  return out;
}

long long ParseInt(const std::string& key, const std::string& v, int line) {
  long long out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'", line);
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'", line);
}

std::vector<double> ParseList(const std::string& key, const std::string& v,
                              int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (item.empty()) continue;
    out.push_back(ParseDouble(key, item, line));
  }
  return out;
}

template <typename E>
E ParseEnum(const std::string& key, const std::string& v, int line,
            std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (v == name) return value;
    names += names.empty() ? name : std::string("|") + name;
  }
  throw ConfigError(key + ": expected one of " + names + ", got '" + v + "'", line);
}

std::string Join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += FormatDouble(values[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&, int)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define ADGPS_DOUBLE(KEY, MEMBER)                                           \
  Field {                                                                   \
    KEY,                                                                    \
        [](ExperimentConfig& c, const std::string& v, int l) {              \
          c.MEMBER = ParseDouble(KEY, v, l);                                \
        },                                                                  \
        [](const ExperimentConfig& c) { return FormatDouble(c.MEMBER); }    \
  }
#define ADGPS_INT(KEY, MEMBER)                                              \
  Field {                                                                   \
    KEY,                                                                    \
        [](ExperimentConfig& c, const std::string& v, int l) {              \
          c.MEMBER = static_cast<decltype(c.MEMBER)>(ParseInt(KEY, v, l));  \
        },                                                                  \
        [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }  \
  }
#define ADGPS_BOOL(KEY, MEMBER)                                             \
  Field {                                                                   \
    KEY,                                                                    \
        [](ExperimentConfig& c, const std::string& v, int l) {              \
          c.MEMBER = ParseBool(KEY, v, l);                                  \
        },                                                                  \
        [](const ExperimentConfig& c) {                                     \
          return std::string(c.MEMBER ? "true" : "false");                  \
        }                                                                   \
  }

const std::vector<Field>& Schema() {
  static const std::vector<Field> fields = {
      {"experiment.name",
       [](ExperimentConfig& c, const std::string& v, int) { c.name = v; },
       [](const ExperimentConfig& c) { return c.name; }},
      {"experiment.algorithm",
       [](ExperimentConfig& c, const std::string& v, int l) {
         c.algorithm = ParseEnum<AlgorithmMode>(
             "experiment.algorithm", v, l,
             {{"mdgps", AlgorithmMode::kMdgps}, {"badmm", AlgorithmMode::kBadmm}});
       },
       [](const ExperimentConfig& c) { return ToString(c.algorithm); }},
      {"experiment.optimizer",
       [](ExperimentConfig& c, const std::string& v, int l) {
         c.optimizer = ParseEnum<LocalOptimizer>(
             "experiment.optimizer", v, l,
             {{"lqr", LocalOptimizer::kLqr}, {"pi2", LocalOptimizer::kPi2}});
       },
       [](const ExperimentConfig& c) { return ToString(c.optimizer); }},
      {"experiment.mode",
       [](ExperimentConfig& c, const std::string& v, int l) {
         c.mode = ParseEnum<RunMode>("experiment.mode", v, l,
                                     {{"sync", RunMode::kSync},
                                      {"async", RunMode::kAsync}});
       },
       [](const ExperimentConfig& c) { return ToString(c.mode); }},
      ADGPS_INT("experiment.workers", workers),
      ADGPS_INT("experiment.iterations", iterations),
      ADGPS_INT("experiment.rollouts_per_instance", rollouts_per_instance),
      ADGPS_DOUBLE("experiment.pacing_s", pacing_s),
      ADGPS_INT("experiment.seed", seed),
      {"experiment.clock",
       [](ExperimentConfig& c, const std::string& v, int l) {
         c.clock = ParseEnum<ClockKind>(
             "experiment.clock", v, l,
             {{"wall", ClockKind::kWall}, {"logical", ClockKind::kLogical}});
       },
       [](const ExperimentConfig& c) {
         return std::string(c.clock == ClockKind::kWall ? "wall" : "logical");
       }},
      ADGPS_DOUBLE("experiment.logical_sgd_step_s", logical_sgd_step_s),
      ADGPS_BOOL("experiment.barrier", barrier),
      ADGPS_BOOL("experiment.shared_global_worker", shared_global_worker),
      {"experiment.transport",
       [](ExperimentConfig& c, const std::string& v, int l) {
         c.transport = ParseEnum<TransportKind>(
             "experiment.transport", v, l,
             {{"inprocess", TransportKind::kInProcess},
              {"tcp", TransportKind::kTcp}});
       },
       [](const ExperimentConfig& c) {
         return std::string(c.transport == TransportKind::kTcp ? "tcp"
                                                               : "inprocess");
       }},
      ADGPS_DOUBLE("experiment.threshold_fraction", threshold_fraction),

      ADGPS_DOUBLE("local.epsilon", epsilon),
      ADGPS_DOUBLE("local.kl_bound", kl_bound),
      ADGPS_DOUBLE("local.dynamics_ridge", dynamics_ridge),
      ADGPS_DOUBLE("local.perturb_scale", perturb_scale),
      ADGPS_DOUBLE("local.init_action_variance", init_action_variance),
      ADGPS_INT("local.badmm_alternations", badmm_alternations),
      ADGPS_DOUBLE("local.badmm_dual_step", badmm_dual_step),

      {"global.hidden",
       [](ExperimentConfig& c, const std::string& v, int l) {
         c.hidden.clear();
         for (double w : ParseList("global.hidden", v, l)) {
           if (w != std::floor(w)) {
             throw ConfigError("global.hidden: widths must be integers", l);
           }
           c.hidden.push_back(static_cast<int>(w));
         }
       },
       [](const ExperimentConfig& c) {
         return Join(std::vector<double>(c.hidden.begin(), c.hidden.end()));
       }},
      ADGPS_DOUBLE("global.init_output_scale", init_output_scale),
      ADGPS_INT("global.sgd_steps", sgd_steps),
      ADGPS_INT("global.batch_size", batch_size),
      ADGPS_DOUBLE("global.learning_rate", learning_rate),
      ADGPS_DOUBLE("global.momentum", momentum),
      ADGPS_INT("global.replay_capacity", replay_capacity),
      ADGPS_DOUBLE("global.rho_max", rho_max),

      {"sim.plant",
       [](ExperimentConfig& c, const std::string& v, int l) {
         c.model.kind = ParseEnum<PlantKind>(
             "sim.plant", v, l,
             {{"arm", PlantKind::kTwoLinkArm}, {"point", PlantKind::kPointMass}});
       },
       [](const ExperimentConfig& c) {
         return std::string(c.model.kind == PlantKind::kTwoLinkArm ? "arm"
                                                                   : "point");
       }},
      ADGPS_DOUBLE("sim.link1_length", model.link_lengths[0]),
      ADGPS_DOUBLE("sim.link2_length", model.link_lengths[1]),
      ADGPS_DOUBLE("sim.link1_mass", model.masses[0]),
      ADGPS_DOUBLE("sim.link2_mass", model.masses[1]),
      ADGPS_DOUBLE("sim.friction", model.friction),
      ADGPS_BOOL("sim.gravity", model.gravity),
      ADGPS_DOUBLE("sim.dt", model.dt),
      ADGPS_INT("sim.horizon", model.horizon),
      ADGPS_DOUBLE("sim.torque_limit", model.torque_limit),
      ADGPS_DOUBLE("sim.initial_q1", initial_q1),
      ADGPS_DOUBLE("sim.initial_q2", initial_q2),

      ADGPS_DOUBLE("task.w_x", cost.w_x),
      ADGPS_DOUBLE("task.w_u", cost.w_u),
      ADGPS_DOUBLE("task.w_vel", cost.w_vel),
      {"task.goal_lower",
       [](ExperimentConfig& c, const std::string& v, int l) {
         auto xs = ParseList("task.goal_lower", v, l);
         if (xs.size() != 2) throw ConfigError("task.goal_lower: need 2 values", l);
         c.goal_region.lower = Eigen::Map<Vector>(xs.data(), 2);
       },
       [](const ExperimentConfig& c) {
         return Join({c.goal_region.lower(0), c.goal_region.lower(1)});
       }},
      {"task.goal_upper",
       [](ExperimentConfig& c, const std::string& v, int l) {
         auto xs = ParseList("task.goal_upper", v, l);
         if (xs.size() != 2) throw ConfigError("task.goal_upper: need 2 values", l);
         c.goal_region.upper = Eigen::Map<Vector>(xs.data(), 2);
       },
       [](const ExperimentConfig& c) {
         return Join({c.goal_region.upper(0), c.goal_region.upper(1)});
       }},
      ADGPS_INT("task.train_instances", train_instances),
      ADGPS_INT("task.validation_instances", validation_instances),
      ADGPS_INT("task.test_instances", test_instances),
  };
  return fields;
}

#undef ADGPS_DOUBLE
#undef ADGPS_INT
#undef ADGPS_BOOL

}  // namespace

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string ToString(AlgorithmMode mode) {
  return mode == AlgorithmMode::kMdgps ? "mdgps" : "badmm";
}
std::string ToString(LocalOptimizer optimizer) {
  return optimizer == LocalOptimizer::kLqr ? "lqr" : "pi2";
}
std::string ToString(RunMode mode) {
  return mode == RunMode::kSync ? "sync" : "async";
}

ExperimentConfig::ExperimentConfig() {
  cost.target = Vector::Zero(2);
  cost.w_x = 1.0;
  cost.w_u = 1e-3;
  cost.w_vel = 1e-2;
  goal_region.lower = Vector(2);
  goal_region.upper = Vector(2);
  goal_region.lower << -0.2, 0.3;
  goal_region.upper << 0.3, 0.7;
}

void ExperimentConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(workers >= 1, "experiment.workers must be >= 1");
  require(iterations >= 0, "experiment.iterations must be >= 0");
  require(rollouts_per_instance >= 2, "experiment.rollouts_per_instance must be >= 2");
  require(pacing_s >= 0.0, "experiment.pacing_s must be >= 0");
  require(logical_sgd_step_s >= 0.0, "experiment.logical_sgd_step_s must be >= 0");
  require(!barrier || (mode == RunMode::kAsync && workers == 1),
          "experiment.barrier requires async mode with one worker");
  require(threshold_fraction > 0.0, "experiment.threshold_fraction must be > 0");
  require(epsilon > 0.0, "local.epsilon must be > 0");
  require(kl_bound > 0.0, "local.kl_bound must be > 0");
  require(dynamics_ridge >= 0.0, "local.dynamics_ridge must be >= 0");
  require(perturb_scale >= 0.0, "local.perturb_scale must be >= 0");
  require(init_action_variance > 0.0, "local.init_action_variance must be > 0");
  require(badmm_alternations >= 0, "local.badmm_alternations must be >= 0");
  require(badmm_dual_step >= 0.0, "local.badmm_dual_step must be >= 0");
  for (int w : hidden) require(w >= 1, "global.hidden widths must be >= 1");
  require(init_output_scale > 0.0, "global.init_output_scale must be > 0");
  require(sgd_steps >= 0, "global.sgd_steps must be >= 0");
  require(batch_size >= 1, "global.batch_size must be >= 1");
  require(learning_rate > 0.0, "global.learning_rate must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "global.momentum must be in [0, 1)");
  require(replay_capacity >= 1, "global.replay_capacity must be >= 1");
  require(rho_max >= 1.0, "global.rho_max must be >= 1");
  require(model.link_lengths[0] > 0 && model.link_lengths[1] > 0,
          "sim link lengths must be > 0");
  require(model.masses[0] > 0 && model.masses[1] > 0, "sim masses must be > 0");
  require(model.friction >= 0.0, "sim.friction must be >= 0");
  require(model.dt > 0.0, "sim.dt must be > 0");
  require(model.horizon >= 2, "sim.horizon must be >= 2");
  require(model.torque_limit > 0.0, "sim.torque_limit must be > 0");
  require(cost.w_x >= 0 && cost.w_u >= 0 && cost.w_vel >= 0,
          "task weights must be >= 0");
  require(cost.w_x + cost.w_u + cost.w_vel > 0, "task weights must not all be 0");
  require(train_instances >= 1, "task.train_instances must be >= 1");
  require(validation_instances >= 0 && test_instances >= 1,
          "task.test_instances must be >= 1");
  CheckReachable(model, goal_region);
}

Vector ExperimentConfig::InitialState() const {
  return MakeState(model, initial_q1, initial_q2);
}

InstanceSplit ExperimentConfig::MakeSplit() const {
  return MakeInstanceSplit(model, train_instances, validation_instances,
                           test_instances, goal_region, InitialState(), cost,
                           seed);
}

int ExperimentConfig::EffectiveAlternations() const {
  if (algorithm != AlgorithmMode::kBadmm) return 1;
  if (badmm_alternations > 0) return badmm_alternations;
  return mode == RunMode::kSync ? 4 : 1;
}

NetworkArchitecture ExperimentConfig::Architecture() const {
  return NetworkArchitecture{kObsDim, hidden, kActionDim};
}

std::string ExperimentConfig::Describe() const {
  std::string out;
  for (const Field& f : Schema()) {
    out += f.key;
    out += " = ";
    out += f.get(*this);
    out += "\n";
  }
  return out;
}

std::string ExperimentConfig::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : Describe()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::Set(const std::string& key, const std::string& value,
                           int line) {
  for (const Field& f : Schema()) {
    if (key == f.key) {
      f.set(*this, Trim(value), line);
      return;
    }
  }
  throw ConfigError("unknown key '" + key + "'", line);
}

ExperimentConfig ParseConfig(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = Trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        throw ConfigError("malformed section header '" + s + "'", line);
      }
      section = Trim(s.substr(1, s.size() - 2));
      bool known = false;
      for (const Field& f : Schema()) {
        if (std::string(f.key).rfind(section + ".", 0) == 0) known = true;
      }
      if (!known) throw ConfigError("unknown section '" + section + "'", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value', got '" + s + "'", line);
    }
    const std::string key = Trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key", line);
    if (section.empty()) {
      throw ConfigError("key '" + key + "' appears before any section", line);
    }
    config.Set(section + "." + key, s.substr(eq + 1), line);
  }
  return config;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

}  // namespace adgps
