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
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gpbench/covariance.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/exact_gp.hpp"
#include "gpbench/geometry.hpp"
#include "gpbench/parallel.hpp"
#include "gpbench/predictive.hpp"
#include "gpbench/sparse.hpp"

namespace gpbench {

/// Taper range giving on average `nnz_per_row` stored entries per row
/// (diagonal included) for the given locations: the empirical quantile of
/// pairwise distances at (nnz_per_row - 1) / (N - 1). Targets at or above N
/// give a range beyond the data diameter (no entry tapered away).
inline double taper_range_for_nnz(std::span<const Point> locs, double nnz_per_row, std::uint64_t seed = 0) {
  const std::size_t n = locs.size();
  BoundingBox box;
  box.extend(locs);
  const double full = box.diameter() * 1.01 + 1e-12;
  if (n < 2 || nnz_per_row >= static_cast<double>(n)) return full;
  const double q = std::max(nnz_per_row - 1.0, 0.0) / static_cast<double>(n - 1);
  const double r = pairwise_distance_quantile(locs, q, seed);
  // Pairs at exactly the quantile distance are kept (strict < range).
  return std::nextafter(r, full);
}

/// Wall-clock split of a tapered likelihood evaluation.
struct TaperTimings {
  double symbolic_seconds = 0.0;  // fill-reducing analysis, skipped on reuse
  double numeric_seconds = 0.0;   // assembly, numeric factorization, solve
};

/// GP with covariance (K o T) + sigma_n2 I in sparse form.
class TaperedGp {
 public:
  TaperedGp(const TaperSpec& taper, const CovarianceSpec& spec, const Dataset& train,
            SymbolicPtr reuse = nullptr, int threads = 1)
      : taper_(taper), spec_(spec), train_(train.locations), threads_(threads) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    const SparseMatrix b = build_cov_sparse(spec_, train_, taper_, true);
    auto t1 = clock::now();
    if (!reuse) {
      reuse = std::make_shared<const SymbolicCholesky>(b);
    }
    auto t2 = clock::now();
    chol_.emplace(b, std::move(reuse));
    alpha_ = chol_->solve(train.y);
    const double n = static_cast<double>(train.size());
    loglik_ = -0.5 * train.y.dot(alpha_) - 0.5 * chol_->logdet() - 0.5 * n * kLog2Pi;
    auto t3 = clock::now();
    nnz_per_row_ = b.average_nnz_per_row();
    timings_.symbolic_seconds = std::chrono::duration<double>(t2 - t1).count();
    timings_.numeric_seconds = std::chrono::duration<double>((t1 - t0) + (t3 - t2)).count();
  }

  double loglik() const { return loglik_; }
  const SymbolicPtr& symbolic() const { return chol_->symbolic(); }
  double nnz_per_row() const { return nnz_per_row_; }
  const TaperTimings& timings() const { return timings_; }

  /// Every covariance block (train-train, test-train, test-test) tapered.
  PredictiveDistribution predict(std::span<const Point> test, Flavor flavor) const {
    const Kernel k(spec_);
    BoundingBox box;
    box.extend(train_);
    box.extend(test);
    SpatialGrid grid(box, taper_.range);
    const auto n = static_cast<Eigen::Index>(train_.size());
    for (Eigen::Index j = 0; j < n; ++j) grid.insert(static_cast<int>(j), train_[j]);
    const auto t = static_cast<Eigen::Index>(test.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(t);
    Eigen::VectorXd var = Eigen::VectorXd::Constant(t, spec_.sigma2);
    parallel_for(test.size(), threads_, [&](std::size_t i) {
      Eigen::VectorXd cross = Eigen::VectorXd::Zero(n);
      double m = 0.0;
      bool any = false;
      grid.for_each_within(test[i], taper_.range, [&](int j, double d) {
        const double v = k(test[i], train_[j]) * taper_value(taper_, d);
        cross[j] = v;
        m += v * alpha_[j];
        any = true;
      });
      if (!any) return;
      const auto ii = static_cast<Eigen::Index>(i);
      mean[ii] = m;
      var[ii] = spec_.sigma2 - chol_->solve_lower(cross).squaredNorm();
    });
    return make_predictive(std::move(mean), std::move(var), flavor, spec_.sigma_n2, "tapering");
  }

 private:
  TaperSpec taper_;
  CovarianceSpec spec_;
  Locations train_;
  int threads_ = 1;
  std::optional<SparseCholesky> chol_;
  Eigen::VectorXd alpha_;
  double loglik_ = 0.0;
  double nnz_per_row_ = 0.0;
  TaperTimings timings_;
};

struct TaperLoglik {
  double loglik = 0.0;
  SymbolicPtr symbolic;
  double nnz_per_row = 0.0;
  TaperTimings timings;
};

inline TaperLoglik taper_loglik(const TaperSpec& taper, const CovarianceSpec& spec, const Dataset& train,
                                SymbolicPtr reuse = nullptr) {
  const TaperedGp gp(taper, spec, train, std::move(reuse));
  return {gp.loglik(), gp.symbolic(), gp.nnz_per_row(), gp.timings()};
}

inline PredictiveDistribution taper_predict(const TaperSpec& taper, const CovarianceSpec& spec,
                                            const Dataset& train, std::span<const Point> test,
                                            Flavor flavor) {
  return TaperedGp(taper, spec, train).predict(test, flavor);
}

}  // namespace gpbench
