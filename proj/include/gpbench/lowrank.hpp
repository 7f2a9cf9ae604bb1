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
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "gpbench/covariance.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/dense_cholesky.hpp"
#include "gpbench/exact_gp.hpp"
#include "gpbench/kmeans.hpp"
#include "gpbench/parallel.hpp"
#include "gpbench/predictive.hpp"
#include "gpbench/sparse.hpp"

namespace gpbench {

/// Inducing-point approximation settings. A taper turns FITC into the
/// full-scale approximation (low rank plus tapered residual).
struct LowRankConfig {
  std::size_t n_inducing = 1;
  std::uint64_t seed = 0;
  std::optional<TaperSpec> taper;

  bool full_scale() const { return taper.has_value(); }
};

/// Added to the diagonal of K(U, U), relative to sigma2.
inline constexpr double kInducingJitter = 1e-10;

/// Covariance approximation Sigma~ = Q + R + sigma_n2 I with
/// Q = K(S,U) K(U,U)^{-1} K(U,S) and R = diag(K - Q) (FITC) or
/// (K - Q) o T (full-scale). All solves go through the Woodbury identity
/// with B = R + sigma_n2 I and the M x M capacitance I + V B^{-1} V^T,
/// V = L_U^{-1} K(U,S); nothing N x N is ever factorized densely.
class LowRankGp {
 public:
  LowRankGp(Locations inducing, std::optional<TaperSpec> taper, const CovarianceSpec& spec,
            const Dataset& train, SymbolicPtr reuse = nullptr, int threads = 1)
      : spec_(spec), inducing_(std::move(inducing)), taper_(taper), train_(train.locations),
        threads_(threads) {
    spec_.validate();
    if (inducing_.empty()) throw DomainError("low-rank GP needs at least one inducing point");
    if (train.size() == 0) throw DomainError("low-rank GP needs training data");
    const auto n = static_cast<Eigen::Index>(train.size());
    const auto m = static_cast<Eigen::Index>(inducing_.size());

    Eigen::MatrixXd kuu = build_cov(spec_, inducing_);
    kuu.diagonal().array() += kInducingJitter * spec_.sigma2;
    chol_u_ = DenseCholesky(std::move(kuu));
    v_ = chol_u_.solve_lower(build_cov(spec_, inducing_, train_));  // M x N

    if (taper_) {
      const SparseMatrix b = residual_matrix();
      residual_ = SparseCholesky(b, std::move(reuse));
    } else {
      Eigen::VectorXd d(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        d[i] = std::max(spec_.sigma2 - v_.col(i).squaredNorm(), 0.0) + spec_.sigma_n2;
      }
      if ((d.array() <= 0.0).any()) {
        throw FactorizationFailed(0, "FITC: residual diagonal plus nugget is not positive");
      }
      residual_ = std::move(d);
    }

    // W = B^{-1} V^T, capacitance G = I + V W.
    w_.resize(n, m);
    if (const auto* d = std::get_if<Eigen::VectorXd>(&residual_)) {
      w_ = d->cwiseInverse().asDiagonal() * v_.transpose();
    } else {
      const auto& chol = std::get<SparseCholesky>(residual_);
      parallel_for(static_cast<std::size_t>(m), threads_, [&](std::size_t c) {
        const auto col = static_cast<Eigen::Index>(c);
        w_.col(col) = chol.solve(Eigen::VectorXd(v_.row(col).transpose()));
      });
    }
    Eigen::MatrixXd g = v_ * w_;
    g.diagonal().array() += 1.0;
    chol_g_ = DenseCholesky(std::move(g));

    const Eigen::VectorXd binv_y = residual_solve(train.y);
    const Eigen::VectorXd z = v_ * binv_y;
    const Eigen::VectorXd gz = chol_g_.solve(z);
    alpha_ = binv_y - w_ * gz;
    beta_ = v_ * alpha_;
    const double quad = train.y.dot(binv_y) - z.dot(gz);
    loglik_ = -0.5 * quad - 0.5 * (chol_g_.logdet() + residual_logdet()) -
              0.5 * static_cast<double>(n) * kLog2Pi;
  }

  LowRankGp(const LowRankConfig& cfg, const CovarianceSpec& spec, const Dataset& train,
            SymbolicPtr reuse = nullptr, int threads = 1)
      : LowRankGp(kmeanspp(train.locations, cfg.n_inducing, cfg.seed), cfg.taper, spec, train,
                  std::move(reuse), threads) {}

  double loglik() const { return loglik_; }
  const Locations& inducing() const { return inducing_; }
  const CovarianceSpec& spec() const { return spec_; }

  /// Symbolic analysis of the tapered residual (full-scale only).
  SymbolicPtr symbolic() const {
    if (const auto* c = std::get_if<SparseCholesky>(&residual_)) return c->symbolic();
    return nullptr;
  }

  double residual_nnz_per_row() const {
    if (std::holds_alternative<SparseCholesky>(residual_)) return residual_nnz_ / static_cast<double>(train_.size());
    return 1.0;
  }

  PredictiveDistribution predict(std::span<const Point> test, Flavor flavor) const {
    const auto t = static_cast<Eigen::Index>(test.size());
    const auto n = static_cast<Eigen::Index>(train_.size());
    Eigen::VectorXd mean(t), var(t);
    constexpr Eigen::Index kBlock = 512;
    const auto* sparse = std::get_if<SparseCholesky>(&residual_);
    std::optional<SpatialGrid> grid;
    if (sparse) {
      BoundingBox box;
      box.extend(train_);
      box.extend(test);
      grid.emplace(box, taper_->range);
      for (Eigen::Index j = 0; j < n; ++j) grid->insert(static_cast<int>(j), train_[j]);
    }
    const Kernel k(spec_);
    for (Eigen::Index start = 0; start < t; start += kBlock) {
      const Eigen::Index len = std::min(kBlock, t - start);
      const auto block = test.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len));
      const Eigen::MatrixXd q = chol_u_.solve_lower(build_cov(spec_, inducing_, block));  // M x len
      Eigen::MatrixXd diff = q;
      Eigen::VectorXd block_mean = q.transpose() * beta_;
      Eigen::VectorXd residual_quad = Eigen::VectorXd::Zero(len);
      if (sparse) {
        // Tapered residual cross-covariance r between each test point and
        // the training points within the taper range.
        parallel_for(static_cast<std::size_t>(len), threads_, [&](std::size_t c) {
          const auto col = static_cast<Eigen::Index>(c);
          const Point& s = block[c];
          Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
          Eigen::VectorXd wr = Eigen::VectorXd::Zero(w_.cols());
          double mean_part = 0.0;
          bool any = false;
          grid->for_each_within(s, taper_->range, [&](int j, double d) {
            const double val = (k(s, train_[j]) - q.col(col).dot(v_.col(j))) * taper_value(*taper_, d);
            r[j] = val;
            wr += val * w_.row(j).transpose();
            mean_part += val * alpha_[j];
            any = true;
          });
          if (!any) return;
          block_mean[col] += mean_part;
          diff.col(col) -= wr;
          residual_quad[col] = sparse->solve_lower(r).squaredNorm();
        });
      }
      const Eigen::MatrixXd x = chol_g_.solve_lower(diff);
      mean.segment(start, len) = block_mean;
      var.segment(start, len) = (spec_.sigma2 - q.colwise().squaredNorm().array() +
                                 x.colwise().squaredNorm().array() -
                                 residual_quad.transpose().array())
                                    .matrix()
                                    .transpose();
    }
    return make_predictive(std::move(mean), std::move(var), flavor, spec_.sigma_n2,
                           taper_ ? "full-scale" : "FITC");
  }

 private:
  SparseMatrix residual_matrix() {
    const Kernel k(spec_);
    BoundingBox box;
    box.extend(train_);
    SpatialGrid grid(box, taper_->range);
    const auto n = train_.size();
    for (std::size_t i = 0; i < n; ++i) grid.insert(static_cast<int>(i), train_[i]);
    std::vector<std::vector<SparseMatrix::Entry>> rows(n);
    parallel_for(n, threads_, [&](std::size_t i) {
      const auto ii = static_cast<Eigen::Index>(i);
      grid.for_each_within(train_[i], taper_->range, [&](int j, double d) {
        double val = (k(train_[i], train_[j]) - v_.col(ii).dot(v_.col(j))) * taper_value(*taper_, d);
        if (static_cast<std::size_t>(j) == i) val = std::max(val, 0.0) + spec_.sigma_n2;
        rows[i].emplace_back(j, val);
      });
    });
    auto b = SparseMatrix::from_rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), std::move(rows));
    residual_nnz_ = static_cast<double>(b.nnz());
    return b;
  }

  Eigen::VectorXd residual_solve(const Eigen::VectorXd& v) const {
    if (const auto* d = std::get_if<Eigen::VectorXd>(&residual_)) return v.cwiseQuotient(*d);
    return std::get<SparseCholesky>(residual_).solve(v);
  }

  double residual_logdet() const {
    if (const auto* d = std::get_if<Eigen::VectorXd>(&residual_)) return d->array().log().sum();
    return std::get<SparseCholesky>(residual_).logdet();
  }

  CovarianceSpec spec_;
  Locations inducing_;
  std::optional<TaperSpec> taper_;
  Locations train_;
  int threads_ = 1;
  DenseCholesky chol_u_;
  Eigen::MatrixXd v_;
  std::variant<Eigen::VectorXd, SparseCholesky> residual_;
  double residual_nnz_ = 0.0;
  Eigen::MatrixXd w_;
  DenseCholesky chol_g_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd beta_;
  double loglik_ = 0.0;
};

inline double lowrank_loglik(const LowRankConfig& cfg, const CovarianceSpec& spec, const Dataset& train) {
  return LowRankGp(cfg, spec, train).loglik();
}

inline PredictiveDistribution lowrank_predict(const LowRankConfig& cfg, const CovarianceSpec& spec,
                                              const Dataset& train, std::span<const Point> test,
                                              Flavor flavor) {
  return LowRankGp(cfg, spec, train).predict(test, flavor);
}

}  // namespace gpbench
