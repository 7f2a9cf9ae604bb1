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
#include <numbers>
#include <span>
#include <vector>

#include "gpbench/covariance.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/dense_cholesky.hpp"
#include "gpbench/predictive.hpp"

namespace gpbench {

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

/// Exact zero-mean GP conditioned on training data, factorized once.
/// Const member functions are safe to call concurrently.
class ExactGp {
 public:
  ExactGp(const CovarianceSpec& spec, Locations train, const Eigen::VectorXd& y)
      : spec_(spec), train_(std::move(train)), y_(y) {
    spec_.validate();
    if (static_cast<Eigen::Index>(train_.size()) != y_.size()) {
      throw DimensionMismatch("exact GP: locations and responses differ in length");
    }
    if (train_.empty()) throw DomainError("exact GP needs at least one training point");
    chol_ = DenseCholesky(build_cov(spec_, train_, true));
    alpha_ = chol_.solve(y_);
  }

  const CovarianceSpec& spec() const { return spec_; }
  const DenseCholesky& cholesky() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }

  double loglik() const {
    const double n = static_cast<double>(y_.size());
    return -0.5 * y_.dot(alpha_) - 0.5 * chol_.logdet() - 0.5 * n * kLog2Pi;
  }

  PredictiveDistribution predict(std::span<const Point> test, Flavor flavor) const {
    const auto m = static_cast<Eigen::Index>(test.size());
    Eigen::VectorXd mean(m), var(m);
    constexpr Eigen::Index kBlock = 1024;
    for (Eigen::Index start = 0; start < m; start += kBlock) {
      const Eigen::Index len = std::min(kBlock, m - start);
      const auto block = test.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len));
      const Eigen::MatrixXd cross = build_cov(spec_, train_, block);  // N x len
      mean.segment(start, len) = cross.transpose() * alpha_;
      const Eigen::MatrixXd v = chol_.solve_lower(cross);
      var.segment(start, len) =
          (spec_.sigma2 - v.colwise().squaredNorm().array()).matrix().transpose();
    }
    return make_predictive(std::move(mean), std::move(var), flavor, spec_.sigma_n2, "exact GP");
  }

 private:
  CovarianceSpec spec_;
  Locations train_;
  Eigen::VectorXd y_;
  DenseCholesky chol_;
  Eigen::VectorXd alpha_;
};

/// -1/2 y^T Sigma^{-1} y - 1/2 log|Sigma| - N/2 log(2 pi), Sigma = K + sigma_n2 I.
inline double loglik_exact(const CovarianceSpec& spec, const Dataset& train) {
  return ExactGp(spec, train.locations, train.y).loglik();
}

struct LoglikGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;  // w.r.t. CovarianceSpec::params()
};

/// Log-likelihood and its gradient over (sigma_n2, sigma2, rho[, rho_y]):
/// dL/dtheta = 1/2 a^T D a - 1/2 tr(Sigma^{-1} D), a = Sigma^{-1} y,
/// D = dSigma/dtheta.
inline LoglikGradient loglik_and_grad_exact(const CovarianceSpec& spec, const Dataset& train) {
  const ExactGp gp(spec, train.locations, train.y);
  const Eigen::VectorXd& a = gp.alpha();
  const Eigen::MatrixXd w = gp.cholesky().inverse();
  const Kernel kernel(spec);
  const std::size_t p = spec.num_params();
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto& s = train.locations;

  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  g[0] = 0.5 * a.squaredNorm() - 0.5 * w.trace();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      // Off-diagonal pairs appear twice in the symmetric sums.
      const double weight = (i == j ? 1.0 : 2.0) * (a[i] * a[j] - w(i, j));
      for (std::size_t q = 1; q < p; ++q) {
        g[static_cast<Eigen::Index>(q)] += 0.5 * weight * kernel.derivative(s[i], s[j], q);
      }
    }
  }
  return {gp.loglik(), std::move(g)};
}

inline Eigen::VectorXd grad_loglik_exact(const CovarianceSpec& spec, const Dataset& train) {
  return loglik_and_grad_exact(spec, train).gradient;
}

inline PredictiveDistribution predict_exact(const CovarianceSpec& spec, const Dataset& train,
                                            std::span<const Point> test, Flavor flavor) {
  return ExactGp(spec, train.locations, train.y).predict(test, flavor);
}

}  // namespace gpbench
