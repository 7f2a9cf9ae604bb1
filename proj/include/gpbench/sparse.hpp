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
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <utility>
#include <vector>

#include "gpbench/errors.hpp"
#include "gpbench/log.hpp"

namespace gpbench {

/// Compressed-row sparse matrix. Column indices are sorted and unique
/// within each row.
struct SparseMatrix {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<int> row_offsets{0};
  std::vector<int> col_indices;
  std::vector<double> values;

  using Entry = std::pair<int, double>;

  /// Builds from per-row (column, value) lists; entries are sorted, and
  /// duplicate columns within a row are summed.
  static SparseMatrix from_rows(Eigen::Index n_rows, Eigen::Index n_cols,
                                std::vector<std::vector<Entry>> row_entries) {
    if (static_cast<Eigen::Index>(row_entries.size()) != n_rows) {
      throw DimensionMismatch("SparseMatrix::from_rows: row count mismatch");
    }
    SparseMatrix m;
    m.rows = n_rows;
    m.cols = n_cols;
    m.row_offsets.assign(1, 0);
    m.row_offsets.reserve(n_rows + 1);
    for (auto& row : row_entries) {
      std::sort(row.begin(), row.end(),
                [](const Entry& a, const Entry& b) { return a.first < b.first; });
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i].first < 0 || row[i].first >= n_cols) {
          throw DimensionMismatch("SparseMatrix::from_rows: column out of range");
        }
        if (i > 0 && row[i].first == row[i - 1].first) {
          m.values.back() += row[i].second;
          continue;
        }
        m.col_indices.push_back(row[i].first);
        m.values.push_back(row[i].second);
      }
      m.row_offsets.push_back(static_cast<int>(m.col_indices.size()));
    }
    return m;
  }

  static SparseMatrix identity(Eigen::Index n) {
    std::vector<std::vector<Entry>> rows_(n);
    for (Eigen::Index i = 0; i < n; ++i) rows_[i].emplace_back(static_cast<int>(i), 1.0);
    return from_rows(n, n, std::move(rows_));
  }

  static SparseMatrix from_dense(const Eigen::MatrixXd& d, double drop_below = 0.0) {
    std::vector<std::vector<Entry>> rows_(d.rows());
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      for (Eigen::Index j = 0; j < d.cols(); ++j) {
        if (i == j || std::abs(d(i, j)) > drop_below) {
          rows_[i].emplace_back(static_cast<int>(j), d(i, j));
        }
      }
    }
    return from_rows(d.rows(), d.cols(), std::move(rows_));
  }

  std::size_t nnz() const { return col_indices.size(); }

  double average_nnz_per_row() const {
    return rows == 0 ? 0.0 : static_cast<double>(nnz()) / static_cast<double>(rows);
  }

  double trace() const {
    double t = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (int p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
        if (col_indices[p] == i) t += values[p];
      }
    }
    return t;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (int p = row_offsets[i]; p < row_offsets[i + 1]; ++p) d(i, col_indices[p]) = values[p];
    }
    return d;
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      double s = 0.0;
      for (int p = row_offsets[i]; p < row_offsets[i + 1]; ++p) s += values[p] * v[col_indices[p]];
      out[i] = s;
    }
    return out;
  }

  bool same_pattern(const SparseMatrix& other) const {
    return rows == other.rows && cols == other.cols && row_offsets == other.row_offsets &&
           col_indices == other.col_indices;
  }

  /// Throws DomainError unless the storage invariants hold.
  void validate() const {
    if (static_cast<Eigen::Index>(row_offsets.size()) != rows + 1 || row_offsets.front() != 0 ||
        static_cast<std::size_t>(row_offsets.back()) != col_indices.size() ||
        col_indices.size() != values.size()) {
      throw DomainError("SparseMatrix: inconsistent storage sizes");
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (row_offsets[i] > row_offsets[i + 1]) throw DomainError("SparseMatrix: offsets not monotone");
      for (int p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
        if (col_indices[p] < 0 || col_indices[p] >= cols) {
          throw DomainError("SparseMatrix: column index out of range");
        }
        if (p > row_offsets[i] && col_indices[p] <= col_indices[p - 1]) {
          throw DomainError("SparseMatrix: column indices not sorted/unique");
        }
      }
    }
  }
};

namespace detail {
inline std::atomic<long>& symbolic_counter() {
  static std::atomic<long> count{0};
  return count;
}

// Nonzero pattern of row k of L (columns j < k), via the elimination tree.
// Pattern is written to stack[top..n) and top is returned; `mark` must be
// all false on entry and is restored on exit.
inline int ereach(int k, const std::vector<int>& cp, const std::vector<int>& ci,
                  const std::vector<int>& parent, std::vector<int>& stack,
                  std::vector<char>& mark) {
  const int n = static_cast<int>(parent.size());
  int top = n;
  mark[k] = 1;
  for (int p = cp[k]; p < cp[k + 1]; ++p) {
    int i = ci[p];
    if (i > k) continue;
    int len = 0;
    for (; !mark[i]; i = parent[i]) {
      stack[len++] = i;
      mark[i] = 1;
    }
    while (len > 0) stack[--top] = stack[--len];
  }
  for (int p = top; p < n; ++p) mark[stack[p]] = 0;
  mark[k] = 0;
  return top;
}
}  // namespace detail

/// Number of symbolic analyses performed in this process. Used to check
/// that refactorizations reuse their analysis.
inline long symbolic_analysis_count() { return detail::symbolic_counter().load(); }

/// Pattern-only part of a sparse Cholesky factorization: approximate
/// minimum degree permutation, elimination tree, and column layout of L.
/// Immutable after construction.
class SymbolicCholesky {
 public:
  explicit SymbolicCholesky(const SparseMatrix& a) : rows_(a.rows), offsets_(a.row_offsets), cols_(a.col_indices) {
    if (a.rows != a.cols) throw DimensionMismatch("sparse Cholesky of a non-square matrix");
    ++detail::symbolic_counter();
    const int n = static_cast<int>(a.rows);

    // Fill-reducing ordering on the pattern.
    std::vector<Eigen::Triplet<double, int>> trips;
    trips.reserve(a.nnz());
    for (int i = 0; i < n; ++i) {
      for (int p = a.row_offsets[i]; p < a.row_offsets[i + 1]; ++p) {
        trips.emplace_back(i, a.col_indices[p], 1.0);
      }
    }
    Eigen::SparseMatrix<double, Eigen::ColMajor, int> pattern(n, n);
    pattern.setFromTriplets(trips.begin(), trips.end());
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> amd;
    Eigen::AMDOrdering<int>()(pattern, amd);
    perm_.assign(amd.indices().data(), amd.indices().data() + n);
    pinv_.assign(n, 0);
    for (int k = 0; k < n; ++k) pinv_[perm_[k]] = k;

    // Upper triangle of P A P^T in compressed-column form. Column j is row
    // perm[j] of the (symmetric) input.
    cp_.assign(n + 1, 0);
    for (int j = 0; j < n; ++j) {
      const int old = perm_[j];
      for (int p = a.row_offsets[old]; p < a.row_offsets[old + 1]; ++p) {
        const int i = pinv_[a.col_indices[p]];
        if (i <= j) {
          ci_.push_back(i);
          csrc_.push_back(p);
        }
      }
      cp_[j + 1] = static_cast<int>(ci_.size());
    }

    // Elimination tree.
    parent_.assign(n, -1);
    std::vector<int> ancestor(n, -1);
    for (int k = 0; k < n; ++k) {
      for (int p = cp_[k]; p < cp_[k + 1]; ++p) {
        for (int i = ci_[p]; i != -1 && i < k;) {
          const int next = ancestor[i];
          ancestor[i] = k;
          if (next == -1) parent_[i] = k;
          i = next;
        }
      }
    }

    // Column counts of L from the row patterns.
    std::vector<int> counts(n, 1);
    std::vector<int> stack(n);
    std::vector<char> mark(n, 0);
    for (int k = 0; k < n; ++k) {
      const int top = detail::ereach(k, cp_, ci_, parent_, stack, mark);
      for (int p = top; p < n; ++p) ++counts[stack[p]];
    }
    lp_.assign(n + 1, 0);
    for (int j = 0; j < n; ++j) lp_[j + 1] = lp_[j] + counts[j];
  }

  Eigen::Index size() const { return rows_; }
  std::size_t factor_nnz() const { return static_cast<std::size_t>(lp_.back()); }
  const std::vector<int>& permutation() const { return perm_; }

  bool matches(const SparseMatrix& a) const {
    return a.rows == rows_ && a.cols == rows_ && a.row_offsets == offsets_ && a.col_indices == cols_;
  }

 private:
  friend class SparseCholesky;

  Eigen::Index rows_;
  std::vector<int> offsets_;
  std::vector<int> cols_;
  std::vector<int> perm_;  // new index -> original index
  std::vector<int> pinv_;  // original index -> new index
  std::vector<int> cp_, ci_, csrc_;
  std::vector<int> parent_;
  std::vector<int> lp_;
};

using SymbolicPtr = std::shared_ptr<const SymbolicCholesky>;

/// Sparse Cholesky P A P^T = L L^T (up-looking, column storage of L).
///
/// Passing a previous symbolic part skips the analysis; the input pattern
/// must then be identical to the analyzed one. Jitter policy matches
/// DenseCholesky.
class SparseCholesky {
 public:
  explicit SparseCholesky(const SparseMatrix& a, SymbolicPtr reuse = nullptr) {
    if (reuse) {
      if (!reuse->matches(a)) {
        throw PatternMismatch("sparse Cholesky: matrix pattern differs from the reused analysis");
      }
      symbolic_ = std::move(reuse);
    } else {
      symbolic_ = std::make_shared<const SymbolicCholesky>(a);
    }
    int pivot = factorize(a, 0.0);
    if (pivot >= 0 && a.rows > 0) {
      jitter_ = 1e-10 * a.trace() / static_cast<double>(a.rows);
      std::ostringstream msg;
      msg << "sparse Cholesky failed at pivot " << pivot << " of " << a.rows
          << "; retrying with diagonal jitter " << jitter_;
      log_warning(msg.str());
      pivot = factorize(a, jitter_);
    }
    if (pivot >= 0) {
      throw FactorizationFailed(pivot, "sparse Cholesky: matrix not positive definite");
    }
  }

  const SymbolicPtr& symbolic() const { return symbolic_; }
  Eigen::Index size() const { return symbolic_->size(); }
  double jitter() const { return jitter_; }
  std::size_t factor_nnz() const { return lx_.size(); }

  double logdet() const {
    const auto& lp = symbolic_->lp_;
    double s = 0.0;
    for (Eigen::Index j = 0; j < size(); ++j) s += std::log(lx_[lp[j]]);
    return 2.0 * s;
  }

  /// L^{-1} P b; its squared norm is b^T A^{-1} b.
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& b) const {
    check_rhs(b.size());
    const auto& perm = symbolic_->perm_;
    const auto& lp = symbolic_->lp_;
    const int n = static_cast<int>(size());
    Eigen::VectorXd y(n);
    for (int k = 0; k < n; ++k) y[k] = b[perm[k]];
    for (int j = 0; j < n; ++j) {
      y[j] /= lx_[lp[j]];
      const double yj = y[j];
      for (int p = lp[j] + 1; p < lp[j + 1]; ++p) y[li_[p]] -= lx_[p] * yj;
    }
    return y;
  }

  /// A^{-1} b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y = solve_lower(b);
    const auto& perm = symbolic_->perm_;
    const auto& lp = symbolic_->lp_;
    const int n = static_cast<int>(size());
    for (int j = n - 1; j >= 0; --j) {
      double s = y[j];
      for (int p = lp[j] + 1; p < lp[j + 1]; ++p) s -= lx_[p] * y[li_[p]];
      y[j] = s / lx_[lp[j]];
    }
    Eigen::VectorXd x(n);
    for (int k = 0; k < n; ++k) x[perm[k]] = y[k];
    return x;
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd x(b.rows(), b.cols());
    for (Eigen::Index c = 0; c < b.cols(); ++c) x.col(c) = solve(Eigen::VectorXd(b.col(c)));
    return x;
  }

  /// Dense copy of L (permuted ordering), for tests.
  Eigen::MatrixXd dense_l() const {
    const auto& lp = symbolic_->lp_;
    const int n = static_cast<int>(size());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      for (int p = lp[j]; p < lp[j + 1]; ++p) l(li_[p], j) = lx_[p];
    }
    return l;
  }

 private:
  void check_rhs(Eigen::Index n) const {
    if (n != size()) throw DimensionMismatch("sparse Cholesky solve: right-hand side size mismatch");
  }

  // Returns -1 on success, otherwise the failing pivot (permuted index).
  int factorize(const SparseMatrix& a, double shift) {
    const auto& s = *symbolic_;
    const int n = static_cast<int>(s.rows_);
    li_.assign(s.lp_.back(), 0);
    lx_.assign(s.lp_.back(), 0.0);
    std::vector<int> next(s.lp_.begin(), s.lp_.end() - 1);
    std::vector<double> x(n, 0.0);
    std::vector<int> stack(n);
    std::vector<char> mark(n, 0);
    for (int k = 0; k < n; ++k) {
      int top = detail::ereach(k, s.cp_, s.ci_, s.parent_, stack, mark);
      x[k] = 0.0;
      for (int p = s.cp_[k]; p < s.cp_[k + 1]; ++p) {
        x[s.ci_[p]] = a.values[s.csrc_[p]];
      }
      double d = x[k] + shift;
      x[k] = 0.0;
      for (; top < n; ++top) {
        const int i = stack[top];
        const double lki = x[i] / lx_[s.lp_[i]];
        x[i] = 0.0;
        for (int p = s.lp_[i] + 1; p < next[i]; ++p) x[li_[p]] -= lx_[p] * lki;
        d -= lki * lki;
        const int p = next[i]++;
        li_[p] = k;
        lx_[p] = lki;
      }
      if (!(d > 0.0)) return k;
      const int p = next[k]++;
      li_[p] = k;
      lx_[p] = std::sqrt(d);
    }
    return -1;
  }

  SymbolicPtr symbolic_;
  std::vector<int> li_;
  std::vector<double> lx_;
  double jitter_ = 0.0;
};

inline SparseCholesky chol_sparse(const SparseMatrix& a, SymbolicPtr reuse = nullptr) {
  return SparseCholesky(a, std::move(reuse));
}

}  // namespace gpbench
