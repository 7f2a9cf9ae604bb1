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

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gpbench/bench/records.hpp"
#include "gpbench/bench/scenario.hpp"
#include "gpbench/estimate.hpp"
#include "gpbench/exact_gp.hpp"
#include "gpbench/log.hpp"
#include "gpbench/methods.hpp"
#include "gpbench/metrics.hpp"
#include "gpbench/parallel.hpp"
#include "gpbench/tapering.hpp"

namespace gpbench::bench {

struct RunSummary {
  std::size_t records = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
};

// Data of one repetition, mean-adjusted when a linear mean is configured.
struct RepData {
  Dataset train;  // y centred by the linear mean
  std::map<Task, Locations> test_locations;
  std::map<Task, Eigen::VectorXd> test_truth;
  std::map<Task, Eigen::VectorXd> test_offset;  // linear mean at the test locations
  Flavor flavor = Flavor::latent;
};

struct ExactReference {
  bool available = false;
  std::optional<double> loglik_true;
  std::optional<double> loglik_doubled;
  std::optional<CovarianceSpec> estimate;
  std::map<Task, PredictiveDistribution> predictions;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline Split split_for(Task t) {
  if (t == Task::predict_interp) return Split::test_interp;
  if (t == Task::predict_extrap) return Split::test_extrap;
  return Split::train;
}

inline RepData prepare_rep(const ScenarioConfig& sc, const Dataset& full) {
  RepData r;
  r.train = full.subset(Split::train);
  if (r.train.size() == 0) throw DomainError("data set has no training points");
  std::optional<LinearMean> lm;
  if (sc.data.mean == MeanModel::linear) {
    lm = LinearMean::fit(intercept_and_coordinates(r.train.locations), r.train.y);
    r.train.y -= lm->evaluate(intercept_and_coordinates(r.train.locations));
  }
  r.flavor = full.has_latent() ? Flavor::latent : Flavor::observable;
  for (Task t : sc.tasks) {
    if (!is_predict(t)) continue;
    const Dataset part = full.subset(split_for(t));
    r.test_locations[t] = part.locations;
    r.test_truth[t] = part.has_latent() ? *part.latent : part.y;
    r.test_offset[t] = lm ? lm->evaluate(intercept_and_coordinates(part.locations))
                          : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(part.size()));
  }
  return r;
}

inline CovarianceSpec doubled(const CovarianceSpec& s) { return s.with_params(2.0 * s.params()); }

inline FitOptions fit_options(const ScenarioConfig& sc) {
  FitOptions o;
  o.max_iterations = sc.max_iterations;
  return o;
}

inline std::optional<CovarianceSpec> doubled_base(const ScenarioConfig& sc, const ExactReference& ref) {
  if (sc.doubled_base == ParamSource::estimate && ref.estimate) return doubled(*ref.estimate);
  if (sc.truth) return doubled(sc.fit);
  return std::nullopt;
}

inline ExactReference exact_reference(const ScenarioConfig& sc, const RepData& data, int threads) {
  ExactReference ref;
  if (data.train.size() > sc.exact_cutoff) return ref;
  bool any = false;
  for (const auto& l : sc.lanes) any = any || l.kind != MethodKind::exact;
  bool needs_estimate = false;
  for (Task t : sc.tasks) {
    needs_estimate = needs_estimate || (t == Task::loglik_doubled && sc.doubled_base == ParamSource::estimate) ||
                     (is_predict(t) && sc.predict_params == ParamSource::estimate);
  }
  if (!any && !needs_estimate) return ref;
  ref.available = true;
  MethodConfig mc;
  mc.threads = threads;
  MethodModel model(mc, data.train);
  if (needs_estimate) {
    const auto init = default_init(data.train, sc.fit.family, sc.fit.nu);
    ref.estimate = fit_params(model, init, true, fit_options(sc)).spec_hat;
  }
  for (Task t : sc.tasks) {
    if (t == Task::loglik_true && sc.truth) ref.loglik_true = model.loglik(sc.fit);
    if (t == Task::loglik_doubled) {
      if (const auto s = doubled_base(sc, ref)) ref.loglik_doubled = model.loglik(*s);
    }
    if (is_predict(t)) {
      const auto& spec = sc.predict_params == ParamSource::truth ? sc.fit : *ref.estimate;
      auto p = model.predict(spec, data.test_locations.at(t), data.flavor);
      p.mean += data.test_offset.at(t);
      ref.predictions.emplace(t, std::move(p));
    }
  }
  return ref;
}

struct LaneContext {
  const ScenarioConfig& sc;
  const RepData& data;
  const ExactReference& ref;
  int rep;
  std::uint64_t seed;
};

inline MethodConfig method_config(const LaneContext& ctx, const Lane& lane) {
  MethodConfig mc;
  mc.kind = lane.kind;
  mc.neighbors = lane.neighbors;
  mc.predict_neighbors = lane.predict_neighbors;
  mc.n_inducing = std::min(lane.n_inducing, ctx.data.train.size());
  mc.taper_shape = lane.taper_shape;
  mc.seed = ctx.seed;
  mc.threads = ctx.sc.threads;
  if (lane.kind == MethodKind::taper || lane.kind == MethodKind::fsa) {
    mc.taper_range = lane.taper_range ? *lane.taper_range
                                      : taper_range_for_nnz(ctx.data.train.locations, *lane.nnz_per_row, ctx.seed);
  }
  return mc;
}

class LaneRunner {
 public:
  LaneRunner(const LaneContext& ctx, const Lane& lane) : ctx_(ctx), lane_(lane) {}

  // Runs every task; returns the longest single task wall time.
  double run(std::vector<Record>& out, std::size_t& failed) {
    double longest = 0.0;
    for (Task t : ctx_.sc.tasks) {
      try {
        longest = std::max(longest, run_task(t, out));
      } catch (const std::exception& e) {
        ++failed;
        log_warning(std::string(to_string(lane_.kind)) + " tier " + std::to_string(lane_.tier) + " " +
                    std::string(to_string(t)) + " rep " + std::to_string(ctx_.rep) + " failed: " + e.what());
        out.push_back(record(t, "failed", 1.0, 0.0));
      }
    }
    return longest;
  }

 private:
  Record record(Task t, const std::string& metric, double value, double wall) const {
    return Record{std::string(to_string(lane_.kind)), lane_.tier, lane_.tier_value, std::string(to_string(t)),
                  metric, value, wall, ctx_.rep, ctx_.seed, ctx_.sc.threads};
  }

  void sparsity_records(Task t, const MethodModel& m, const MethodConfig& mc, double wall,
                        std::vector<Record>& out) const {
    if (lane_.kind != MethodKind::taper && lane_.kind != MethodKind::fsa) return;
    out.push_back(record(t, "nnz_per_row", m.last_nnz_per_row(), wall));
    out.push_back(record(t, "taper_range", mc.taper_range, wall));
  }

  double run_task(Task t, std::vector<Record>& out) const {
    const auto& sc = ctx_.sc;
    const MethodConfig mc = method_config(ctx_, lane_);
    MethodModel model(mc, ctx_.data.train);
    std::vector<Record> recs;
    double wall = 0.0;
    switch (t) {
      case Task::loglik_true:
      case Task::loglik_doubled: {
        std::optional<CovarianceSpec> spec;
        std::optional<double> exact;
        if (t == Task::loglik_true) {
          spec = sc.fit;
          exact = ctx_.ref.loglik_true;
        } else {
          spec = doubled_base(sc, ctx_.ref);
          exact = ctx_.ref.loglik_doubled;
        }
        if (!spec) throw DomainError("no parameters available for " + std::string(to_string(t)));
        const auto t0 = Clock::now();
        const double ll = model.loglik(*spec);
        wall = std::max(0.0, seconds_since(t0) - model.last_symbolic_seconds());
        recs.push_back(record(t, "loglik", ll, wall));
        if (exact) recs.push_back(record(t, "abs_diff_exact", std::abs(ll - *exact), wall));
        sparsity_records(t, model, mc, wall, recs);
        break;
      }
      case Task::estimate: {
        const auto init = default_init(ctx_.data.train, sc.fit.family, sc.fit.nu);
        const auto res = fit_params(model, init, true, fit_options(sc));
        wall = res.wall_seconds;
        const auto names = res.spec_hat.param_names();
        const Eigen::VectorXd est = res.spec_hat.params();
        for (std::size_t j = 0; j < names.size(); ++j) {
          recs.push_back(record(t, "est_" + names[j], est[static_cast<Eigen::Index>(j)], wall));
        }
        if (sc.truth) {
          const Eigen::VectorXd truth = sc.fit.params();
          for (std::size_t j = 0; j < names.size(); ++j) {
            const double e = est[static_cast<Eigen::Index>(j)] - truth[static_cast<Eigen::Index>(j)];
            recs.push_back(record(t, "err_" + names[j], e, wall));
            recs.push_back(record(t, "sq_err_" + names[j], e * e, wall));
          }
        }
        recs.push_back(record(t, "loglik_at_optimum", res.loglik_at_optimum, wall));
        recs.push_back(record(t, "iterations", res.iterations, wall));
        recs.push_back(record(t, "converged", res.converged ? 1.0 : 0.0, wall));
        break;
      }
      case Task::predict_train:
      case Task::predict_interp:
      case Task::predict_extrap: {
        const auto& locs = ctx_.data.test_locations.at(t);
        if (locs.empty()) throw DomainError("no points in the " + std::string(to_string(split_for(t))) + " split");
        const auto t0 = Clock::now();
        CovarianceSpec spec = sc.fit;
        if (sc.predict_params == ParamSource::estimate) {
          spec = fit_params(model, default_init(ctx_.data.train, sc.fit.family, sc.fit.nu), true, fit_options(sc))
                     .spec_hat;
        }
        auto pred = model.predict(spec, locs, ctx_.data.flavor);
        wall = seconds_since(t0);
        pred.mean += ctx_.data.test_offset.at(t);
        // latent predictions are scored against f, observable ones already carry the nugget
        const auto scores = score_predictions(pred, ctx_.data.test_truth.at(t));
        recs.push_back(record(t, "rmse", scores.rmse, wall));
        recs.push_back(record(t, "log_score", scores.log_score, wall));
        recs.push_back(record(t, "crps", scores.crps, wall));
        if (const auto it = ctx_.ref.predictions.find(t); it != ctx_.ref.predictions.end()) {
          const auto cmp = compare_to_exact(pred, it->second);
          recs.push_back(record(t, "rmse_mean_exact", cmp.rmse_mean, wall));
          recs.push_back(record(t, "rmse_var_exact", cmp.rmse_variance, wall));
          recs.push_back(record(t, "kl_exact", cmp.mean_kl, wall));
        }
        sparsity_records(t, model, mc, wall, recs);
        break;
      }
    }
    out.insert(out.end(), recs.begin(), recs.end());
    return wall;
  }

  const LaneContext& ctx_;
  const Lane& lane_;
};

// Writes per-group record batches in group order as soon as every earlier
// group has been written.
class OrderedSink {
 public:
  OrderedSink(std::ostream& out, std::size_t groups) : out_(out), batches_(groups), done_(groups, false) {}

  void complete(std::size_t group, std::vector<Record> recs) {
    std::lock_guard<std::mutex> lock(mutex_);
    batches_[group] = std::move(recs);
    done_[group] = true;
    while (next_ < done_.size() && done_[next_]) {
      for (const auto& r : batches_[next_]) write_record(out_, r);
      written_ += batches_[next_].size();
      batches_[next_].clear();
      ++next_;
    }
  }

  std::size_t written() const { return written_; }

 private:
  std::ostream& out_;
  std::vector<std::vector<Record>> batches_;
  std::vector<bool> done_;
  std::size_t next_ = 0;
  std::size_t written_ = 0;
  std::mutex mutex_;
};

}  // namespace detail

/// Runs every repetition, method, tier and task of a scenario and streams
/// records to `out` (header first). Lanes of one method run in tier order;
/// when a task exceeds the time cap, the lane and all higher tiers of that
/// method are skipped from then on. Methods run on `workers` threads; the
/// output order does not depend on the worker count.
inline RunSummary run_scenario(const ScenarioConfig& sc, std::ostream& out) {
  out << kRecordCsvHeader << '\n';
  out.flush();
  RunSummary summary;

  std::vector<std::vector<std::size_t>> groups;  // lane indices per method
  for (std::size_t i = 0; i < sc.lanes.size(); ++i) {
    if (i == 0 || sc.lanes[i].kind != sc.lanes[i - 1].kind) groups.emplace_back();
    groups.back().push_back(i);
  }
  std::vector<int> capped_from(groups.size(), -1);  // first skipped position within the group
  std::mutex count_mutex;

  for (int rep = 0; rep < sc.reps; ++rep) {
    const std::uint64_t seed = sc.rep_seed(rep);
    const Dataset full = load_data(sc.data, sc.truth, seed);
    const RepData data = detail::prepare_rep(sc, full);
    const ExactReference ref = detail::exact_reference(sc, data, sc.threads);
    const detail::LaneContext ctx{sc, data, ref, rep, seed};
    detail::OrderedSink sink(out, groups.size());

    auto run_group = [&](std::size_t g) {
      std::vector<Record> recs;
      std::size_t failed = 0, skipped = 0;
      for (std::size_t pos = 0; pos < groups[g].size(); ++pos) {
        const Lane& lane = sc.lanes[groups[g][pos]];
        if (capped_from[g] >= 0 && static_cast<int>(pos) >= capped_from[g]) {
          for (Task t : sc.tasks) {
            recs.push_back(Record{std::string(to_string(lane.kind)), lane.tier, lane.tier_value,
                                  std::string(to_string(t)), "skipped", 1.0, 0.0, rep, seed, sc.threads});
            ++skipped;
          }
          continue;
        }
        const double longest = detail::LaneRunner(ctx, lane).run(recs, failed);
        if (longest > sc.time_cap) {
          log_warning(std::string(to_string(lane.kind)) + " tier " + std::to_string(lane.tier) +
                      " exceeded the time cap; skipping it and higher tiers");
          capped_from[g] = static_cast<int>(pos);
        }
      }
      {
        std::lock_guard<std::mutex> lock(count_mutex);
        summary.failed += failed;
        summary.skipped += skipped;
      }
      sink.complete(g, std::move(recs));
    };
    parallel_for(groups.size(), sc.workers, run_group);
    summary.records += sink.written();
  }
  return summary;
}

}  // namespace gpbench::bench
