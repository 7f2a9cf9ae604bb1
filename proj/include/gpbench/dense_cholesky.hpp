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

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <utility>

#include "gpbench/errors.hpp"
#include "gpbench/log.hpp"

namespace gpbench {

/// Lower Cholesky factor of a dense symmetric positive definite matrix.
///
/// On a non-positive pivot the factorization is retried once with
/// 1e-10 * trace/n added to the diagonal (logged). A second failure throws
/// FactorizationFailed carrying the offending pivot index.
class DenseCholesky {
 public:
  DenseCholesky() = default;

  explicit DenseCholesky(Eigen::MatrixXd m, bool allow_jitter = true) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("Cholesky of a non-square matrix");
    }
    Eigen::MatrixXd backup;
    if (allow_jitter) backup = m;
    auto pivot = Eigen::internal::llt_inplace<double, Eigen::Lower>::blocked(m);
    if (pivot >= 0 && allow_jitter && m.rows() > 0) {
      jitter_ = 1e-10 * backup.trace() / static_cast<double>(backup.rows());
      std::ostringstream msg;
      msg << "Cholesky failed at pivot " << pivot << " of " << backup.rows()
          << "; retrying with diagonal jitter " << jitter_;
      log_warning(msg.str());
      m = std::move(backup);
      m.diagonal().array() += jitter_;
      pivot = Eigen::internal::llt_inplace<double, Eigen::Lower>::blocked(m);
    }
    if (pivot >= 0) {
      throw FactorizationFailed(pivot, "dense Cholesky: matrix not positive definite");
    }
    factor_ = std::move(m);
  }

  Eigen::Index size() const { return factor_.rows(); }

  /// Diagonal shift applied by the retry, 0 if the first attempt succeeded.
  double jitter() const { return jitter_; }

  auto matrix_l() const { return factor_.triangularView<Eigen::Lower>(); }

  Eigen::MatrixXd dense_l() const {
    return factor_.triangularView<Eigen::Lower>();
  }

  double logdet() const {
    return 2.0 * factor_.diagonal().array().log().sum();
  }

  /// L^{-1} b.
  template <typename Rhs>
  Eigen::Matrix<double, Eigen::Dynamic, Rhs::ColsAtCompileTime> solve_lower(
      const Eigen::MatrixBase<Rhs>& b) const {
    Eigen::Matrix<double, Eigen::Dynamic, Rhs::ColsAtCompileTime> x = b;
    matrix_l().solveInPlace(x);
    return x;
  }

  /// M^{-1} b.
  template <typename Rhs>
  Eigen::Matrix<double, Eigen::Dynamic, Rhs::ColsAtCompileTime> solve(
      const Eigen::MatrixBase<Rhs>& b) const {
    Eigen::Matrix<double, Eigen::Dynamic, Rhs::ColsAtCompileTime> x = b;
    matrix_l().solveInPlace(x);
    factor_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  Eigen::MatrixXd inverse() const {
    return solve(Eigen::MatrixXd::Identity(size(), size()));
  }

 private:
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
};

inline DenseCholesky chol_dense(Eigen::MatrixXd m) { return DenseCholesky(std::move(m)); }

}  // namespace gpbench
