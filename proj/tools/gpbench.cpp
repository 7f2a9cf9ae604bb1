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

// gpbench command line: run | simulate | fit | predict <config>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "gpbench/bench/config.hpp"
#include "gpbench/bench/runner.hpp"
#include "gpbench/bench/scenario.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/estimate.hpp"
#include "gpbench/simulate.hpp"

namespace {

using namespace gpbench;
using namespace gpbench::bench;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

// Opens `path` for writing, or returns stdout when empty.
struct Output {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file = std::make_unique<std::ofstream>(path);
    if (!*file) throw ConfigError(0, "cannot open output '" + path + "'");
    stream = file.get();
  }
};

std::uint64_t read_seed(const ConfigFile& cfg) {
  const auto s = cfg.get_int("run.seed", 1);
  if (s < 0) throw ConfigError(cfg.line_of("run.seed"), "run.seed must be >= 0");
  return static_cast<std::uint64_t>(s);
}

struct ModelSetup {
  Dataset full;
  Dataset train;
  std::optional<CovarianceSpec> truth;
  CovarianceSpec fit;
  MethodConfig method;
  FitOptions options;
};

ModelSetup read_model_setup(const ConfigFile& cfg) {
  ModelSetup m;
  const auto data = read_data_config(cfg);
  if (data.mean != MeanModel::zero) throw ConfigError(cfg.line_of("data.mean"), "data.mean is only used by 'run'");
  const std::optional<CovarianceSpec> base =
      data.source == DataSource::simulate ? std::optional(scenario_spec(data.scenario)) : std::nullopt;
  m.truth = read_spec(cfg, "true", base);
  m.fit = m.truth.value_or(CovarianceSpec{});
  m.fit.nu = cfg.get_double("fit.nu", m.fit.nu);
  matern_order(m.fit.nu);
  if (const auto f = cfg.get("fit.family")) {
    if (m.truth) throw ConfigError(cfg.line_of("fit.family"), "fit.family only applies when parameters are unknown");
    if (*f != "matern_iso" && *f != "matern_ard") {
      throw ConfigError(cfg.line_of("fit.family"), "fit.family expects matern_iso or matern_ard");
    }
    m.fit.family = *f == "matern_ard" ? KernelFamily::matern_ard : KernelFamily::matern_iso;
  }
  const auto seed = read_seed(cfg);
  m.full = load_data(data, m.truth, seed);
  m.train = m.full.subset(Split::train);
  const Lane lane = read_single_lane(cfg);
  m.method.kind = lane.kind;
  m.method.neighbors = lane.neighbors;
  m.method.predict_neighbors = lane.predict_neighbors;
  m.method.n_inducing = lane.n_inducing;
  m.method.taper_shape = lane.taper_shape;
  m.method.seed = seed;
  m.method.threads = static_cast<int>(cfg.get_int("run.threads", 1));
  if (lane.kind == MethodKind::taper || lane.kind == MethodKind::fsa) {
    m.method.taper_range =
        lane.taper_range ? *lane.taper_range : taper_range_for_nnz(m.train.locations, *lane.nnz_per_row, seed);
  }
  m.options.max_iterations = static_cast<int>(cfg.get_int("estimate.max_iterations", 1000));
  return m;
}

int cmd_run(const std::string& path) {
  const auto sc = read_scenario(path);
  Output out(sc.output);
  const auto summary = run_scenario(sc, *out.stream);
  std::cerr << "gpbench: " << summary.records << " records, " << summary.failed << " failed, " << summary.skipped
            << " skipped\n";
  return summary.failed > 0 ? kExitPartial : kExitOk;
}

int cmd_simulate(const std::string& path) {
  const auto cfg = ConfigFile::load(path);
  const auto data = read_data_config(cfg);
  if (data.source != DataSource::simulate) throw ConfigError(cfg.line_of("data.source"), "simulate needs data.source = simulate");
  const auto spec = *read_spec(cfg, "true", scenario_spec(data.scenario));
  const auto seed = read_seed(cfg);
  const auto output = cfg.get_string("run.output", "");
  cfg.reject_unused();
  Output out(output);
  write_dataset_csv(simulate_dataset(spec, data.n, seed), *out.stream);
  return kExitOk;
}

int cmd_fit(const std::string& path) {
  const auto cfg = ConfigFile::load(path);
  auto m = read_model_setup(cfg);
  const auto output = cfg.get_string("run.output", "");
  cfg.reject_unused();
  MethodModel model(m.method, m.train);
  const auto init = default_init(m.train, m.fit.family, m.fit.nu);
  const auto res = fit_params(model, init, true, m.options);
  Output out(output);
  auto& os = *out.stream;
  os << "parameter,value\n";
  const auto names = res.spec_hat.param_names();
  const auto p = res.spec_hat.params();
  for (std::size_t j = 0; j < names.size(); ++j) {
    os << names[j] << ',' << format_double(p[static_cast<Eigen::Index>(j)]) << '\n';
  }
  os << "nu," << format_double(res.spec_hat.nu) << '\n';
  os << "loglik," << format_double(res.loglik_at_optimum) << '\n';
  os << "iterations," << res.iterations << '\n';
  os << "converged," << (res.converged ? 1 : 0) << '\n';
  os << "wall_seconds," << format_double(res.wall_seconds) << '\n';
  return res.converged ? kExitOk : kExitPartial;
}

int cmd_predict(const std::string& path) {
  const auto cfg = ConfigFile::load(path);
  auto m = read_model_setup(cfg);
  const auto split = parse_split(cfg.get_string("predict.split", "test_interp"));
  const auto params = cfg.get_string("predict.params", m.truth ? "truth" : "estimate");
  const auto flavor_name = cfg.get_string("predict.flavor", m.full.has_latent() ? "latent" : "observable");
  if (flavor_name != "latent" && flavor_name != "observable") {
    throw ConfigError(cfg.line_of("predict.flavor"), "predict.flavor expects latent or observable");
  }
  const auto output = cfg.get_string("run.output", "");
  cfg.reject_unused();
  MethodModel model(m.method, m.train);
  CovarianceSpec spec = m.fit;
  if (params == "estimate") {
    spec = fit_params(model, default_init(m.train, m.fit.family, m.fit.nu), true, m.options).spec_hat;
  } else if (params != "truth" || !m.truth) {
    throw ConfigError(cfg.line_of("predict.params"), "predict.params expects estimate, or truth with known parameters");
  }
  const auto test = m.full.subset(split);
  const auto pred =
      model.predict(spec, test.locations, flavor_name == "latent" ? Flavor::latent : Flavor::observable);
  Output out(output);
  auto& os = *out.stream;
  os << "x,y,mean,variance\n";
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    os << format_double(test.locations[i].x) << ',' << format_double(test.locations[i].y) << ','
       << format_double(pred.mean[k]) << ',' << format_double(pred.variance[k]) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process approximation benchmark"};
  app.require_subcommand(1);
  std::string config;
  auto* run = app.add_subcommand("run", "Run a benchmark scenario and write records as CSV");
  auto* sim = app.add_subcommand("simulate", "Simulate a data set and write it as CSV");
  auto* fit = app.add_subcommand("fit", "Estimate covariance parameters with one method");
  auto* pred = app.add_subcommand("predict", "Predict a data split with one method");
  for (auto* sub : {run, sim, fit, pred}) sub->add_option("config", config, "Configuration file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (run->parsed()) return cmd_run(config);
    if (sim->parsed()) return cmd_simulate(config);
    if (fit->parsed()) return cmd_fit(config);
    if (pred->parsed()) return cmd_predict(config);
  } catch (const ConfigError& e) {
    std::cerr << "gpbench: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "gpbench: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "gpbench: " << e.what() << '\n';
    return kExitPartial;
  }
  return kExitOk;
}
