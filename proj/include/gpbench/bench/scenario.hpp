// Copyright 2026 The gpbench Authors. All rights reserved.
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

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpbench/bench/config.hpp"
#include "gpbench/bench/tiers.hpp"
#include "gpbench/covariance.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/methods.hpp"
#include "gpbench/simulate.hpp"

namespace gpbench::bench {

enum class Task { loglik_true, loglik_doubled, estimate, predict_train, predict_interp, predict_extrap };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::loglik_true: return "loglik_true";
    case Task::loglik_doubled: return "loglik_doubled";
    case Task::estimate: return "estimate";
    case Task::predict_train: return "predict_train";
    case Task::predict_interp: return "predict_interp";
    case Task::predict_extrap: return "predict_extrap";
  }
  return "loglik_true";
}

inline Task parse_task(std::string_view s) {
  for (auto t : {Task::loglik_true, Task::loglik_doubled, Task::estimate, Task::predict_train,
                 Task::predict_interp, Task::predict_extrap}) {
    if (to_string(t) == s) return t;
  }
  throw DomainError("unknown task '" + std::string(s) + "'");
}

inline bool is_predict(Task t) {
  return t == Task::predict_train || t == Task::predict_interp || t == Task::predict_extrap;
}

enum class DataSource { simulate, csv };
enum class MeanModel { zero, linear };
enum class ParamSource { truth, estimate };

struct DataConfig {
  DataSource source = DataSource::simulate;
  Scenario scenario = Scenario::standard;
  std::size_t n = 1000;
  std::string path;
  MeanModel mean = MeanModel::zero;
};

// One (method, tier) combination with its tuning values. Taper and
// full-scale tiers are given as nonzeros per row and converted to a taper
// range on each training set.
struct Lane {
  MethodKind kind = MethodKind::exact;
  int tier = 0;
  double tier_value = 0.0;
  int neighbors = 0;
  std::optional<int> predict_neighbors;
  std::size_t n_inducing = 0;
  std::optional<double> nnz_per_row;
  std::optional<double> taper_range;
  WendlandOrder taper_shape = WendlandOrder::k1;
};

struct ScenarioConfig {
  DataConfig data;
  std::optional<CovarianceSpec> truth;  // data-generating parameters, if known
  CovarianceSpec fit;                   // family and nu used for fitting; parameters = truth when known
  std::vector<Lane> lanes;              // grouped by method, tiers ascending
  std::vector<Task> tasks;
  int reps = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  int workers = 1;
  double time_cap = 600.0;
  std::size_t exact_cutoff = 10000;
  int max_iterations = 1000;
  ParamSource doubled_base = ParamSource::estimate;
  ParamSource predict_params = ParamSource::truth;
  std::string output;  // empty = stdout

  std::uint64_t rep_seed(int rep) const { return seed + static_cast<std::uint64_t>(rep); }
};

namespace detail {

inline WendlandOrder parse_wendland(const std::string& s, std::size_t line) {
  if (s == "k0") return WendlandOrder::k0;
  if (s == "k1") return WendlandOrder::k1;
  if (s == "k2") return WendlandOrder::k2;
  throw ConfigError(line, "unknown taper shape '" + s + "' (expected k0, k1 or k2)");
}

template <typename F>
auto with_line(const ConfigFile& cfg, const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(cfg.line_of(key), e.what());
  }
}

inline ParamSource parse_param_source(const ConfigFile& cfg, const std::string& key, ParamSource fallback) {
  const auto v = cfg.get(key);
  if (!v) return fallback;
  if (*v == "truth") return ParamSource::truth;
  if (*v == "estimate") return ParamSource::estimate;
  throw ConfigError(cfg.line_of(key), "'" + key + "' expects truth or estimate");
}

}  // namespace detail

/// Reads `data.*`. The simulation seed is supplied per repetition.
inline DataConfig read_data_config(const ConfigFile& cfg) {
  DataConfig d;
  const auto src = cfg.get_string("data.source", "simulate");
  if (src == "simulate") {
    d.source = DataSource::simulate;
  } else if (src == "csv") {
    d.source = DataSource::csv;
  } else {
    throw ConfigError(cfg.line_of("data.source"), "data.source expects simulate or csv");
  }
  if (d.source == DataSource::simulate) {
    d.scenario = detail::with_line(cfg, "data.scenario",
                                   [&] { return parse_scenario(cfg.get_string("data.scenario", "std")); });
    const auto n = cfg.get_int("data.n", 1000);
    if (n < 1) throw ConfigError(cfg.line_of("data.n"), "data.n must be >= 1");
    d.n = static_cast<std::size_t>(n);
  } else {
    d.path = cfg.require_string("data.path");
  }
  const auto mean = cfg.get_string("data.mean", "zero");
  if (mean == "zero") {
    d.mean = MeanModel::zero;
  } else if (mean == "linear") {
    d.mean = MeanModel::linear;
  } else {
    throw ConfigError(cfg.line_of("data.mean"), "data.mean expects zero or linear");
  }
  return d;
}

/// Reads `<prefix>.family|sigma2|rho|rho_x|rho_y|nu|sigma_n2` on top of
/// `base`. Returns nullopt when no base is given and no key is present.
inline std::optional<CovarianceSpec> read_spec(const ConfigFile& cfg, const std::string& prefix,
                                               std::optional<CovarianceSpec> base) {
  const std::vector<std::string> keys = {"family", "sigma2", "rho", "rho_x", "rho_y", "nu", "sigma_n2"};
  bool any = false;
  for (const auto& k : keys) any = any || cfg.has(prefix + "." + k);
  if (!any) return base;
  CovarianceSpec s = base.value_or(CovarianceSpec{});
  if (const auto f = cfg.get(prefix + ".family")) {
    if (*f == "matern_iso") {
      s.family = KernelFamily::matern_iso;
    } else if (*f == "matern_ard") {
      s.family = KernelFamily::matern_ard;
    } else {
      throw ConfigError(cfg.line_of(prefix + ".family"), "family expects matern_iso or matern_ard");
    }
  }
  s.sigma2 = cfg.get_double(prefix + ".sigma2", s.sigma2);
  s.rho = cfg.get_double(prefix + ".rho", s.rho);
  s.rho_x = cfg.get_double(prefix + ".rho_x", s.rho_x);
  s.rho_y = cfg.get_double(prefix + ".rho_y", s.rho_y);
  s.nu = cfg.get_double(prefix + ".nu", s.nu);
  s.sigma_n2 = cfg.get_double(prefix + ".sigma_n2", s.sigma_n2);
  std::string first = prefix + ".sigma2";
  for (const auto& k : keys) {
    if (cfg.has(prefix + "." + k)) {
      first = prefix + "." + k;
      break;
    }
  }
  detail::with_line(cfg, first, [&] {
    s.validate();
    return 0;
  });
  return s;
}

/// Loads or simulates the data set for one repetition.
inline Dataset load_data(const DataConfig& d, const std::optional<CovarianceSpec>& truth, std::uint64_t seed) {
  if (d.source == DataSource::csv) return read_dataset_csv(d.path);
  return simulate_dataset(truth.value_or(scenario_spec(d.scenario)), d.n, seed);
}

namespace detail {

inline Lane make_lane(MethodKind kind, int tier, double value) {
  Lane l;
  l.kind = kind;
  l.tier = tier;
  l.tier_value = value;
  return l;
}

inline std::vector<Lane> read_lanes(const ConfigFile& cfg, const std::string& methods_key = "methods") {
  const auto methods = cfg.get_list(methods_key);
  if (!methods) throw ConfigError(0, "missing required key '" + methods_key + "'");
  const TierPreset* preset = nullptr;
  if (const auto name = cfg.get("tiers")) {
    preset = with_line(cfg, "tiers", [&] { return &tier_preset(*name); });
  }
  const auto shape = parse_wendland(cfg.get_string("taper.shape", "k1"), cfg.line_of("taper.shape"));
  std::optional<int> predict_m;
  if (const auto pm = cfg.get_int("vecchia.predict_neighbors")) {
    if (*pm < 1) throw ConfigError(cfg.line_of("vecchia.predict_neighbors"), "must be >= 1");
    predict_m = static_cast<int>(*pm);
  }

  auto ints = [&](const std::string& key, const std::vector<int>* fallback) {
    std::vector<double> out;
    if (const auto v = cfg.get_int_list(key)) {
      for (auto x : *v) {
        if (x < 1) throw ConfigError(cfg.line_of(key), "'" + key + "' entries must be >= 1");
        out.push_back(static_cast<double>(x));
      }
    } else if (fallback) {
      for (auto x : *fallback) out.push_back(x);
    }
    return out;
  };
  auto reals = [&](const std::string& key, const std::vector<double>* fallback) {
    std::vector<double> out;
    if (const auto v = cfg.get_double_list(key)) {
      for (auto x : *v) {
        if (!(x > 0.0)) throw ConfigError(cfg.line_of(key), "'" + key + "' entries must be > 0");
        out.push_back(x);
      }
    } else if (fallback) {
      out = *fallback;
    }
    return out;
  };

  std::vector<Lane> lanes;
  std::vector<MethodKind> seen;
  for (const auto& name : *methods) {
    const auto kind = with_line(cfg, "methods", [&] { return parse_method(name); });
    if (std::find(seen.begin(), seen.end(), kind) != seen.end()) {
      throw ConfigError(cfg.line_of(methods_key), "method '" + name + "' listed twice");
    }
    seen.push_back(kind);
    auto missing = [&](const std::string& what) {
      return ConfigError(cfg.line_of(methods_key), "method '" + name + "' needs " + what + " or a tier preset");
    };
    switch (kind) {
      case MethodKind::exact:
        lanes.push_back(make_lane(kind, 0, 0.0));
        break;
      case MethodKind::vecchia: {
        const auto ms = ints("vecchia.neighbors", preset ? &preset->vecchia_neighbors : nullptr);
        if (ms.empty()) throw missing("vecchia.neighbors");
        for (std::size_t t = 0; t < ms.size(); ++t) {
          Lane l = make_lane(kind, static_cast<int>(t + 1), ms[t]);
          l.neighbors = static_cast<int>(ms[t]);
          l.predict_neighbors = predict_m;
          lanes.push_back(l);
        }
        break;
      }
      case MethodKind::fitc: {
        const auto ms = ints("fitc.inducing", preset ? &preset->fitc_inducing : nullptr);
        if (ms.empty()) throw missing("fitc.inducing");
        for (std::size_t t = 0; t < ms.size(); ++t) {
          Lane l = make_lane(kind, static_cast<int>(t + 1), ms[t]);
          l.n_inducing = static_cast<std::size_t>(ms[t]);
          lanes.push_back(l);
        }
        break;
      }
      case MethodKind::taper: {
        const auto ranges = reals("taper.range", nullptr);
        const auto nnz = ranges.empty() ? reals("taper.nnz", preset ? &preset->taper_nnz : nullptr)
                                        : std::vector<double>{};
        if (ranges.empty() && nnz.empty()) throw missing("taper.nnz or taper.range");
        const auto& vals = ranges.empty() ? nnz : ranges;
        for (std::size_t t = 0; t < vals.size(); ++t) {
          Lane l = make_lane(kind, static_cast<int>(t + 1), vals[t]);
          if (ranges.empty()) {
            l.nnz_per_row = vals[t];
          } else {
            l.taper_range = vals[t];
          }
          l.taper_shape = shape;
          lanes.push_back(l);
        }
        break;
      }
      case MethodKind::fsa: {
        const auto ms = ints("fsa.inducing", preset ? &preset->fsa_inducing : nullptr);
        const auto ranges = reals("fsa.range", nullptr);
        const auto nnz = ranges.empty() ? reals("fsa.nnz", preset ? &preset->fsa_nnz : nullptr)
                                        : std::vector<double>{};
        if (ms.empty() || (ranges.empty() && nnz.empty())) throw missing("fsa.inducing and fsa.nnz or fsa.range");
        const auto& vals = ranges.empty() ? nnz : ranges;
        if (vals.size() != ms.size()) {
          throw ConfigError(cfg.line_of("fsa.inducing"), "fsa.inducing and fsa.nnz/fsa.range differ in length");
        }
        for (std::size_t t = 0; t < ms.size(); ++t) {
          Lane l = make_lane(kind, static_cast<int>(t + 1), ms[t]);
          l.n_inducing = static_cast<std::size_t>(ms[t]);
          if (ranges.empty()) {
            l.nnz_per_row = vals[t];
          } else {
            l.taper_range = vals[t];
          }
          l.taper_shape = shape;
          lanes.push_back(l);
        }
        break;
      }
    }
  }
  return lanes;
}

}  // namespace detail

/// Parses and validates a benchmark scenario. Unknown keys are errors.
inline ScenarioConfig read_scenario(const ConfigFile& cfg) {
  ScenarioConfig s;
  s.data = read_data_config(cfg);
  const std::optional<CovarianceSpec> base =
      s.data.source == DataSource::simulate ? std::optional(scenario_spec(s.data.scenario)) : std::nullopt;
  s.truth = read_spec(cfg, "true", base);
  CovarianceSpec fit = s.truth.value_or(CovarianceSpec{});
  if (const auto f = cfg.get("fit.family")) {
    if (s.truth) throw ConfigError(cfg.line_of("fit.family"), "fit.family only applies when parameters are unknown");
    if (*f == "matern_iso") {
      fit.family = KernelFamily::matern_iso;
    } else if (*f == "matern_ard") {
      fit.family = KernelFamily::matern_ard;
    } else {
      throw ConfigError(cfg.line_of("fit.family"), "fit.family expects matern_iso or matern_ard");
    }
  }
  fit.nu = cfg.get_double("fit.nu", fit.nu);
  detail::with_line(cfg, "fit.nu", [&] { return matern_order(fit.nu); });
  s.fit = fit;

  s.lanes = detail::read_lanes(cfg);
  const auto tasks = cfg.get_list("tasks");
  if (!tasks) throw ConfigError(0, "missing required key 'tasks'");
  for (const auto& t : *tasks) {
    const auto task = detail::with_line(cfg, "tasks", [&] { return parse_task(t); });
    if (std::find(s.tasks.begin(), s.tasks.end(), task) != s.tasks.end()) {
      throw ConfigError(cfg.line_of("tasks"), "task '" + t + "' listed twice");
    }
    s.tasks.push_back(task);
  }
  s.reps = static_cast<int>(cfg.get_int("run.reps", 1));
  if (s.reps < 1) throw ConfigError(cfg.line_of("run.reps"), "run.reps must be >= 1");
  const auto seed = cfg.get_int("run.seed", 1);
  if (seed < 0) throw ConfigError(cfg.line_of("run.seed"), "run.seed must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);
  s.threads = static_cast<int>(cfg.get_int("run.threads", 1));
  if (s.threads < 1) throw ConfigError(cfg.line_of("run.threads"), "run.threads must be >= 1");
  s.workers = static_cast<int>(cfg.get_int("run.workers", 1));
  if (s.workers < 1) throw ConfigError(cfg.line_of("run.workers"), "run.workers must be >= 1");
  s.time_cap = cfg.get_double("run.time_cap", 600.0);
  if (!(s.time_cap > 0.0)) throw ConfigError(cfg.line_of("run.time_cap"), "run.time_cap must be > 0");
  const auto cutoff = cfg.get_int("run.exact_cutoff", 10000);
  if (cutoff < 0) throw ConfigError(cfg.line_of("run.exact_cutoff"), "run.exact_cutoff must be >= 0");
  s.exact_cutoff = static_cast<std::size_t>(cutoff);
  s.max_iterations = static_cast<int>(cfg.get_int("estimate.max_iterations", 1000));
  if (s.max_iterations < 1) throw ConfigError(cfg.line_of("estimate.max_iterations"), "must be >= 1");
  s.doubled_base = detail::parse_param_source(cfg, "doubled.base", ParamSource::estimate);
  s.predict_params = detail::parse_param_source(
      cfg, "predict.params", s.data.source == DataSource::simulate ? ParamSource::truth : ParamSource::estimate);
  s.output = cfg.get_string("run.output", "");

  const bool needs_truth = std::any_of(s.tasks.begin(), s.tasks.end(), [&](Task t) {
    return t == Task::loglik_true || (is_predict(t) && s.predict_params == ParamSource::truth) ||
           (t == Task::loglik_doubled && s.doubled_base == ParamSource::truth);
  });
  if (needs_truth && !s.truth) {
    throw ConfigError(0, "the selected tasks need known parameters; set true.sigma2, true.rho, ... for csv data");
  }
  cfg.reject_unused();
  return s;
}

/// Reads `method` and the tuning keys for a single (method, tier) lane.
inline Lane read_single_lane(const ConfigFile& cfg) {
  const auto lanes = detail::read_lanes(cfg, "method");
  if (lanes.size() != 1) {
    throw ConfigError(cfg.line_of("method"), "expected exactly one method with a single tuning value");
  }
  return lanes.front();
}

inline ScenarioConfig read_scenario(const std::string& path) { return read_scenario(ConfigFile::load(path)); }

}  // namespace gpbench::bench
