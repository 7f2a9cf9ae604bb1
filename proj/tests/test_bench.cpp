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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gpbench/bench/config.hpp"
#include "gpbench/bench/records.hpp"
#include "gpbench/bench/runner.hpp"
#include "gpbench/bench/scenario.hpp"
#include "gpbench/bench/tiers.hpp"
#include "gpbench/simulate.hpp"
#include "test_util.hpp"

using namespace gpbench;
using namespace gpbench::bench;

namespace {

std::size_t config_error_line(const std::string& text) {
  try {
    read_scenario(ConfigFile::parse_string(text));
  } catch (const ConfigError& e) {
    return e.line();
  }
  return static_cast<std::size_t>(-1);
}

struct Row {
  std::vector<std::string> f;
  const std::string& method() const { return f[0]; }
  const std::string& task() const { return f[3]; }
  const std::string& metric() const { return f[4]; }
  double value() const { return std::stod(f[5]); }
  // every column except wall_seconds
  std::string stable() const {
    std::string s;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i != 6) s += f[i] + ',';
    }
    return s;
  }
};

std::vector<Row> parse_records(const std::string& csv, std::string* header = nullptr) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    Row r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.f.push_back(cell);
    rows.push_back(r);
  }
  return rows;
}

std::string run_text(const std::string& config, RunSummary* summary = nullptr) {
  const auto sc = read_scenario(ConfigFile::parse_string(config));
  std::ostringstream out;
  const auto s = run_scenario(sc, out);
  if (summary) *summary = s;
  return out.str();
}

const Row* find(const std::vector<Row>& rows, const std::string& method, const std::string& task,
                const std::string& metric) {
  for (const auto& r : rows) {
    if (r.method() == method && r.task() == task && r.metric() == metric) return &r;
  }
  return nullptr;
}

}  // namespace

TEST(Config, ParsesValuesListsAndComments) {
  const auto cfg = ConfigFile::parse_string(
      "# comment\n"
      "\n"
      "data.n = 250   # trailing\n"
      "  run.time_cap=1.5\n"
      "methods = exact, vecchia\n"
      "flag = true\n");
  EXPECT_EQ(cfg.get_int("data.n"), 250);
  EXPECT_DOUBLE_EQ(*cfg.get_double("run.time_cap"), 1.5);
  EXPECT_EQ(*cfg.get_list("methods"), (std::vector<std::string>{"exact", "vecchia"}));
  EXPECT_TRUE(cfg.get_bool("flag", false));
  EXPECT_EQ(cfg.line_of("methods"), 5u);
  EXPECT_FALSE(cfg.has("missing"));
  EXPECT_EQ(cfg.get_int("missing", 7), 7);
}

TEST(Config, ErrorsCarryLineNumbers) {
  auto line = [](const std::string& text) -> std::size_t {
    try {
      ConfigFile::parse_string(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line("a = 1\nb 2\n"), 2u);
  EXPECT_EQ(line("a = 1\n\na = 2\n"), 3u);
  EXPECT_EQ(line("= 4\n"), 1u);
  const auto cfg = ConfigFile::parse_string("x = 1\ny = abc\nz = 1,,2\n");
  try {
    cfg.get_double("y");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(cfg.get_int_list("z"), ConfigError);
  EXPECT_THROW(cfg.get_int("x.y.z.missing").value(), std::bad_optional_access);
}

TEST(Config, UnknownKeyIsReportedAtItsLine) {
  EXPECT_EQ(config_error_line("methods = exact\ntasks = loglik_true\nvechia.neighbors = 5\n"), 3u);
}

TEST(Tiers, PresetsMatchTuningTables) {
  const auto& t1 = tier_preset("table1");
  EXPECT_EQ(t1.vecchia_neighbors, (std::vector<int>{5, 10, 20, 40, 80}));
  EXPECT_EQ(t1.taper_nnz, (std::vector<double>{11, 30, 60, 130, 263}));
  EXPECT_EQ(t1.fitc_inducing, (std::vector<int>{47, 254, 500, 950, 1500}));
  EXPECT_EQ(t1.fsa_inducing, (std::vector<int>{10, 24, 120, 300, 450}));
  EXPECT_EQ(t1.fsa_nnz, (std::vector<double>{5, 8, 28, 100, 150}));
  const auto& t3 = tier_preset("table3");
  EXPECT_EQ(t3.taper_nnz.back(), 739);
  EXPECT_EQ(t3.fitc_inducing.back(), 3700);
  for (const auto& p : tier_presets()) {
    EXPECT_EQ(p.vecchia_neighbors.size(), 5u) << p.name;
    EXPECT_EQ(p.taper_nnz.size(), 5u) << p.name;
    EXPECT_EQ(p.fitc_inducing.size(), 5u) << p.name;
    EXPECT_EQ(p.fsa_inducing.size(), p.fsa_nnz.size()) << p.name;
  }
  EXPECT_THROW(tier_preset("table9"), DomainError);
}

TEST(Scenario, PresetLanes) {
  const auto sc = read_scenario(ConfigFile::parse_string(
      "data.n = 500\ntiers = table1\nmethods = exact, vecchia, taper, fsa\ntasks = loglik_true, predict_interp\n"));
  ASSERT_EQ(sc.lanes.size(), 16u);
  EXPECT_EQ(sc.lanes[0].kind, MethodKind::exact);
  EXPECT_EQ(sc.lanes[0].tier, 0);
  EXPECT_EQ(sc.lanes[3].kind, MethodKind::vecchia);
  EXPECT_EQ(sc.lanes[3].neighbors, 20);
  EXPECT_EQ(sc.lanes[3].tier, 3);
  EXPECT_EQ(sc.lanes[7].kind, MethodKind::taper);
  EXPECT_EQ(sc.lanes[7].nnz_per_row, 30.0);
  EXPECT_EQ(sc.lanes[15].n_inducing, 450u);
  EXPECT_EQ(sc.lanes[15].nnz_per_row, 150.0);
  EXPECT_EQ(sc.predict_params, ParamSource::truth);
  EXPECT_EQ(sc.data.n, 500u);
  ASSERT_TRUE(sc.truth.has_value());
  EXPECT_DOUBLE_EQ(sc.truth->sigma_n2, 0.5);
}

TEST(Scenario, ExplicitTiersOverridePreset) {
  const auto sc = read_scenario(ConfigFile::parse_string(
      "tiers = table2\nmethods = vecchia, taper\nvecchia.neighbors = 3, 6\ntaper.range = 0.05\n"
      "taper.shape = k2\ntasks = loglik_true\ntrue.rho = 0.1\nfit.nu = 0.5\n"));
  ASSERT_EQ(sc.lanes.size(), 3u);
  EXPECT_EQ(sc.lanes[1].neighbors, 6);
  EXPECT_EQ(sc.lanes[2].taper_range, 0.05);
  EXPECT_EQ(sc.lanes[2].taper_shape, WendlandOrder::k2);
  EXPECT_DOUBLE_EQ(sc.truth->rho, 0.1);
  EXPECT_EQ(sc.fit.nu, 0.5);
}

TEST(Scenario, Errors) {
  // missing tuning values
  EXPECT_EQ(config_error_line("tasks = loglik_true\nmethods = fitc\n"), 2u);
  // unknown method, duplicate task, bad task
  EXPECT_EQ(config_error_line("methods = exact, kriging\ntasks = loglik_true\n"), 1u);
  EXPECT_EQ(config_error_line("methods = exact\ntasks = loglik_true, loglik_true\n"), 2u);
  EXPECT_EQ(config_error_line("methods = exact\ntasks = guess\n"), 2u);
  // fsa lists of different lengths
  EXPECT_EQ(config_error_line("methods = fsa\nfsa.inducing = 10, 20\nfsa.nnz = 5\ntasks = loglik_true\n"), 2u);
  // known parameters with fit.family
  EXPECT_EQ(config_error_line("methods = exact\ntasks = estimate\nfit.family = matern_ard\n"), 3u);
  // invalid values
  EXPECT_EQ(config_error_line("methods = exact\ntasks = estimate\nrun.reps = 0\n"), 3u);
  EXPECT_EQ(config_error_line("methods = exact\ntasks = estimate\ntrue.sigma2 = -1\n"), 3u);
  EXPECT_EQ(config_error_line("methods = exact\ntasks = estimate\nfit.nu = 1.0\n"), 3u);
  EXPECT_EQ(config_error_line("methods = exact\ntasks = estimate\ndata.scenario = hilly\n"), 3u);
  // csv data without known parameters cannot evaluate at the truth
  EXPECT_THROW(read_scenario(ConfigFile::parse_string(
                   "data.source = csv\ndata.path = x.csv\nmethods = exact\ntasks = loglik_true\n")),
               ConfigError);
  EXPECT_NO_THROW(read_scenario(ConfigFile::parse_string(
      "data.source = csv\ndata.path = x.csv\nmethods = exact\ntasks = estimate, predict_interp\n")));
}

TEST(Runner, HeaderAndSchema) {
  std::string header;
  const auto rows = parse_records(
      run_text("data.n = 60\nmethods = exact, vecchia\nvecchia.neighbors = 5\n"
               "tasks = loglik_true, predict_train\nrun.seed = 4\n"),
      &header);
  EXPECT_EQ(header, "method,tier,tier_value,task,metric,value,wall_seconds,rep,seed,threads");
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) {
    ASSERT_EQ(r.f.size(), 10u);
    EXPECT_TRUE(std::isfinite(r.value()));
    EXPECT_GE(std::stod(r.f[6]), 0.0);
    EXPECT_EQ(r.f[8], "4");
    EXPECT_EQ(r.f[9], "1");
  }
  EXPECT_NE(find(rows, "vecchia", "loglik_true", "abs_diff_exact"), nullptr);
  EXPECT_NE(find(rows, "vecchia", "predict_train", "kl_exact"), nullptr);
  EXPECT_NE(find(rows, "exact", "predict_train", "crps"), nullptr);
  EXPECT_NE(find(rows, "exact", "predict_train", "log_score"), nullptr);
}

TEST(Runner, LatentScoresUsePredictiveVarianceOnly) {
  const auto rows = parse_records(run_text("data.n = 60\nmethods = exact\ntasks = predict_interp\nrun.seed = 4\n"));
  const auto spec = scenario_spec(Scenario::standard);
  const auto full = simulate_dataset(spec, 60, 4);
  const auto train = full.subset(Split::train);
  const auto test = full.subset(Split::test_interp);
  const auto ref = gpbench::testing::condition_gaussian(build_cov(spec, train.locations, true),
                                                        build_cov(spec, test.locations, train.locations), train.y,
                                                        spec.sigma2);
  const double pi = 3.14159265358979323846;
  double nll = 0.0, crps = 0.0;
  for (Eigen::Index i = 0; i < ref.mean.size(); ++i) {
    const double var = ref.variance[i], sd = std::sqrt(var), r = (*test.latent)[i] - ref.mean[i];
    const double z = r / sd;
    nll += 0.5 * std::log(2.0 * pi * var) + r * r / (2.0 * var);
    crps += sd * (z * std::erf(z / std::sqrt(2.0)) + 2.0 * std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi) -
                  1.0 / std::sqrt(pi));
  }
  const double n = static_cast<double>(ref.mean.size());
  EXPECT_NEAR(find(rows, "exact", "predict_interp", "log_score")->value(), nll / n, 1e-9);
  EXPECT_NEAR(find(rows, "exact", "predict_interp", "crps")->value(), crps / n, 1e-9);
}

TEST(Runner, VecchiaWithAllNeighborsMatchesExact) {
  const std::size_t n = 80;
  const auto rows = parse_records(
      run_text("data.n = " + std::to_string(n) + "\nmethods = exact, vecchia\nvecchia.neighbors = " +
               std::to_string(n - 1) + "\nvecchia.predict_neighbors = " + std::to_string(n) +
               "\ntasks = loglik_true, loglik_doubled, predict_interp, predict_extrap\nrun.seed = 2\n"));
  const double ll = find(rows, "exact", "loglik_true", "loglik")->value();
  EXPECT_LT(find(rows, "vecchia", "loglik_true", "abs_diff_exact")->value(), 1e-8 * std::abs(ll));
  EXPECT_LT(find(rows, "vecchia", "loglik_doubled", "abs_diff_exact")->value(), 1e-8 * std::abs(ll));
  for (const std::string task : {"predict_interp", "predict_extrap"}) {
    EXPECT_LT(find(rows, "vecchia", task, "rmse_mean_exact")->value(), 1e-8);
    EXPECT_LT(find(rows, "vecchia", task, "rmse_var_exact")->value(), 1e-8);
    EXPECT_LT(find(rows, "vecchia", task, "kl_exact")->value(), 1e-8);
    EXPECT_NEAR(find(rows, "vecchia", task, "rmse")->value(), find(rows, "exact", task, "rmse")->value(), 1e-8);
  }
}

TEST(Runner, EstimateTaskRecords) {
  const auto rows = parse_records(run_text("data.n = 80\nmethods = exact\ntasks = estimate\nrun.reps = 2\n"));
  for (const std::string m : {"est_sigma_n2", "est_sigma2", "est_rho", "err_rho", "sq_err_rho",
                              "loglik_at_optimum", "iterations", "converged"}) {
    EXPECT_NE(find(rows, "exact", "estimate", m), nullptr) << m;
  }
  const double est = find(rows, "exact", "estimate", "est_rho")->value();
  const double err = find(rows, "exact", "estimate", "err_rho")->value();
  EXPECT_NEAR(est - err, 0.2 / 2.74, 1e-12);
  std::set<std::string> reps;
  for (const auto& r : rows) reps.insert(r.f[7]);
  EXPECT_EQ(reps, (std::set<std::string>{"0", "1"}));
}

TEST(Runner, DeterministicApartFromTiming) {
  const std::string cfg =
      "data.n = 70\nmethods = exact, vecchia, fitc, taper, fsa\nvecchia.neighbors = 4, 8\n"
      "fitc.inducing = 10\ntaper.nnz = 12\nfsa.inducing = 8\nfsa.nnz = 6\n"
      "tasks = loglik_true, loglik_doubled, predict_interp\nrun.reps = 2\nrun.seed = 9\n";
  const auto a = parse_records(run_text(cfg));
  const auto b = parse_records(run_text(cfg));
  const auto c = parse_records(run_text(cfg + "run.workers = 3\n"));
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].stable(), b[i].stable());
    EXPECT_EQ(a[i].stable(), c[i].stable());
  }
}

TEST(Runner, TimeCapSkipsRemainingTiers) {
  RunSummary s;
  const auto rows = parse_records(
      run_text("data.n = 60\nmethods = vecchia\nvecchia.neighbors = 5, 10, 20\ntasks = loglik_true\n"
               "run.time_cap = 1e-12\nrun.reps = 2\n",
               &s));
  // tier 1 of rep 0 runs and exceeds the cap; every later lane is skipped
  EXPECT_EQ(s.skipped, 5u);
  std::size_t skipped = 0;
  for (const auto& r : rows) {
    if (r.metric() == "skipped") {
      ++skipped;
      EXPECT_EQ(r.value(), 1.0);
      EXPECT_FALSE(r.f[1] == "1" && r.f[7] == "0");
    }
  }
  EXPECT_EQ(skipped, s.skipped);
  EXPECT_NE(find(rows, "vecchia", "loglik_true", "loglik"), nullptr);
}

namespace {

// Simulated data without the extrapolation split, written as CSV.
std::string interp_only_csv(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "gpbench_test_bench";
  std::filesystem::create_directories(dir);
  const auto path = (dir / name).string();
  const auto full = simulate_dataset(scenario_spec(Scenario::standard), 40, 6);
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full.split[i] != Split::test_extrap) keep.push_back(static_cast<Eigen::Index>(i));
  }
  write_dataset_csv(full.rows(keep), path);
  return path;
}

}  // namespace

TEST(Runner, FailuresBecomeRecords) {
  RunSummary s;
  const auto rows = parse_records(run_text("data.source = csv\ndata.path = " + interp_only_csv("no_extrap.csv") +
                                               "\nmethods = exact\ntasks = predict_interp, predict_extrap\n",
                                           &s));
  EXPECT_EQ(s.failed, 1u);
  const auto* f = find(rows, "exact", "predict_extrap", "failed");
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->value(), 1.0);
  EXPECT_NE(find(rows, "exact", "predict_interp", "rmse"), nullptr);
}

TEST(Runner, InducingCountIsCappedAtTrainingSize) {
  RunSummary s;
  const auto rows =
      parse_records(run_text("data.n = 30\nmethods = exact, fitc\nfitc.inducing = 500\ntasks = loglik_true\n", &s));
  EXPECT_EQ(s.failed, 0u);
  // all training points as inducing points reproduce the exact likelihood up to the inducing jitter
  const double ll = find(rows, "exact", "loglik_true", "loglik")->value();
  EXPECT_LT(find(rows, "fitc", "loglik_true", "abs_diff_exact")->value(), 1e-6 * std::abs(ll));
}

TEST(Runner, CsvDataWithLinearMean) {
  const auto dir = std::filesystem::temp_directory_path() / "gpbench_test_bench";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "data.csv").string();
  auto d = simulate_dataset(scenario_spec(Scenario::standard), 60, 5);
  d.latent.reset();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d.y[static_cast<Eigen::Index>(i)] += 3.0 + 2.0 * d.locations[i].x;
  }
  write_dataset_csv(d, path);
  RunSummary s;
  const auto rows = parse_records(run_text("data.source = csv\ndata.path = " + path +
                                               "\ndata.mean = linear\nmethods = exact, vecchia\n"
                                               "vecchia.neighbors = 10\ntasks = estimate, predict_interp\n",
                                           &s));
  EXPECT_EQ(s.failed, 0u);
  const auto* rmse = find(rows, "exact", "predict_interp", "rmse");
  ASSERT_NE(rmse, nullptr);
  // observable scoring of y: the linear trend is removed, so errors stay near the noise level
  EXPECT_LT(rmse->value(), 1.5);
  EXPECT_NE(find(rows, "vecchia", "predict_interp", "kl_exact"), nullptr);
}

#ifdef GPBENCH_CLI_PATH

namespace {

int run_cli(const std::string& sub, const std::string& config, std::string* output = nullptr) {
  const auto dir = std::filesystem::temp_directory_path() / "gpbench_test_cli";
  std::filesystem::create_directories(dir);
  const auto cfg_path = (dir / (sub + ".cfg")).string();
  const auto out_path = (dir / (sub + ".out")).string();
  std::ofstream(cfg_path) << config << "run.output = " << out_path << "\n";
  const std::string cmd = std::string(GPBENCH_CLI_PATH) + " " + sub + " " + cfg_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  std::string out;
  EXPECT_EQ(run_cli("run", "data.n = 40\nmethods = exact\ntasks = loglik_true\n", &out), 0);
  EXPECT_EQ(out.substr(0, out.find('\n')), std::string(kRecordCsvHeader));
  EXPECT_EQ(run_cli("run", "data.n = 40\nmethods = exact\ntasks = loglik_true\nbogus = 1\n"), 1);
  EXPECT_EQ(run_cli("run", "data.source = csv\ndata.path = " + interp_only_csv("cli.csv") +
                               "\nmethods = exact\ntasks = predict_extrap\n"),
            2);
}

TEST(Cli, SimulateFitPredict) {
  std::string data;
  ASSERT_EQ(run_cli("simulate", "data.n = 50\nrun.seed = 3\n", &data), 0);
  std::istringstream in(data);
  const auto d = read_dataset_csv(in);
  EXPECT_EQ(d.size(), 150u);
  std::string fit;
  EXPECT_EQ(run_cli("fit", "data.n = 50\nmethod = vecchia\nvecchia.neighbors = 10\n", &fit), 0);
  EXPECT_EQ(fit.substr(0, fit.find('\n')), "parameter,value");
  EXPECT_NE(fit.find("\nconverged,1\n"), std::string::npos);
  std::string pred;
  EXPECT_EQ(run_cli("predict", "data.n = 50\nmethod = exact\npredict.split = test_extrap\n", &pred), 0);
  EXPECT_EQ(pred.substr(0, pred.find('\n')), "x,y,mean,variance");
  EXPECT_EQ(std::count(pred.begin(), pred.end(), '\n'), 51);
  EXPECT_EQ(run_cli("fit", "data.n = 50\nmethod = exact, vecchia\n"), 1);
}

#endif  // GPBENCH_CLI_PATH
