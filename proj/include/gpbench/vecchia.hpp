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
#include <string>
#include <vector>

#include "gpbench/covariance.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/dense_cholesky.hpp"
#include "gpbench/exact_gp.hpp"
#include "gpbench/geometry.hpp"
#include "gpbench/parallel.hpp"
#include "gpbench/predictive.hpp"
#include "gpbench/random.hpp"

namespace gpbench {

enum class NeighborDistance { euclidean, correlation };

/// Random ordering of the training points and, for each ordered position,
/// the positions of its nearest earlier points (closest first).
struct VecchiaStructure {
  std::vector<int> ordering;                // position -> training index
  std::vector<std::vector<int>> neighbors;  // position -> earlier positions
  int m = 0;
  NeighborDistance distance_mode = NeighborDistance::euclidean;

  std::size_t size() const { return ordering.size(); }
};

/// Coordinates in which neighbor search runs: raw for Euclidean mode, each
/// axis divided by its range for correlation mode.
inline Point neighbor_coordinates(const CovarianceSpec& spec, NeighborDistance mode, const Point& p) {
  if (mode == NeighborDistance::euclidean) return p;
  if (spec.is_ard()) return {p.x / spec.rho_x, p.y / spec.rho_y};
  return {p.x / spec.rho, p.y / spec.rho};
}

inline NeighborDistance default_neighbor_distance(const CovarianceSpec& spec) {
  return spec.is_ard() ? NeighborDistance::correlation : NeighborDistance::euclidean;
}

/// Inputs up to this size use an exhaustive neighbor scan; larger ones a
/// bucket grid. Both produce the same (distance, index)-ordered sets.
inline constexpr std::size_t kExhaustiveNeighborLimit = 5000;

inline VecchiaStructure build_vecchia(const Locations& train, const CovarianceSpec& spec, int m,
                                      std::uint64_t seed,
                                      std::optional<NeighborDistance> mode = std::nullopt,
                                      std::size_t exhaustive_limit = kExhaustiveNeighborLimit) {
  if (m < 1) throw DomainError("Vecchia: neighbor count must be >= 1");
  spec.validate();
  VecchiaStructure s;
  s.m = m;
  s.distance_mode = mode.value_or(default_neighbor_distance(spec));
  const std::size_t n = train.size();
  s.ordering = random_permutation(n, seed);
  s.neighbors.resize(n);

  std::vector<Point> coords(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    coords[pos] = neighbor_coordinates(spec, s.distance_mode, train[s.ordering[pos]]);
  }
  const auto mm = static_cast<std::size_t>(m);

  if (n <= exhaustive_limit) {
    std::vector<Neighbor> cand;
    cand.reserve(n);
    for (std::size_t pos = 1; pos < n; ++pos) {
      cand.clear();
      for (std::size_t j = 0; j < pos; ++j) {
        cand.emplace_back(distance(coords[pos], coords[j]), static_cast<int>(j));
      }
      const std::size_t take = std::min(mm, pos);
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
      auto& nb = s.neighbors[pos];
      nb.reserve(take);
      for (std::size_t t = 0; t < take; ++t) nb.push_back(cand[t].second);
    }
    return s;
  }

  BoundingBox box;
  box.extend(coords);
  SpatialGrid grid(box, SpatialGrid::cell_for_density(box, n));
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (pos > 0) {
      auto& nb = s.neighbors[pos];
      for (const auto& [d, id] : grid.nearest(coords[pos], mm)) nb.push_back(id);
    }
    grid.insert(static_cast<int>(pos), coords[pos]);
  }
  return s;
}

inline VecchiaStructure build_vecchia(const Dataset& train, const CovarianceSpec& spec, int m,
                                      std::uint64_t seed,
                                      std::optional<NeighborDistance> mode = std::nullopt) {
  return build_vecchia(train.locations, spec, m, seed, mode);
}

namespace detail {
// Conditional mean and variance of a point given a neighbor set under
// covariance `cov_nn` (neighbors), `cov_n` (neighbors vs point) and the
// point's own variance.
struct Conditional {
  double mean;
  double variance;
};

inline Conditional condition_on(const Eigen::MatrixXd& cov_nn, const Eigen::VectorXd& cov_n,
                                const Eigen::VectorXd& y_n, double own_variance) {
  if (cov_n.size() == 0) return {0.0, own_variance};
  const DenseCholesky chol(cov_nn);
  const Eigen::VectorXd b = chol.solve(cov_n);
  return {b.dot(y_n), own_variance - cov_n.dot(b)};
}
}  // namespace detail

/// Sum over ordered points of log N(y_i | neighbors), all blocks using the
/// nugget-augmented covariance of the observable process.
inline double vecchia_loglik(const VecchiaStructure& s, const CovarianceSpec& spec,
                             const Dataset& train, int threads = 1) {
  if (s.size() != train.size()) throw DimensionMismatch("Vecchia structure built for different data");
  const Kernel k(spec);
  const double own = spec.sigma2 + spec.sigma_n2;
  std::vector<double> terms(s.size());
  parallel_for(s.size(), threads, [&](std::size_t pos) {
    const auto& nb = s.neighbors[pos];
    const auto q = static_cast<Eigen::Index>(nb.size());
    const Point& p = train.locations[s.ordering[pos]];
    Eigen::MatrixXd cov_nn(q, q);
    Eigen::VectorXd cov_n(q), y_n(q);
    for (Eigen::Index a = 0; a < q; ++a) {
      const int ia = s.ordering[nb[a]];
      const Point& pa = train.locations[ia];
      cov_n[a] = k(pa, p);
      y_n[a] = train.y[ia];
      cov_nn(a, a) = own;
      for (Eigen::Index b = 0; b < a; ++b) {
        cov_nn(a, b) = cov_nn(b, a) = k(pa, train.locations[s.ordering[nb[b]]]);
      }
    }
    const auto c = detail::condition_on(cov_nn, cov_n, y_n, own);
    if (!(c.variance > 0.0)) {
      throw NumericalError("Vecchia: non-positive conditional variance " + std::to_string(c.variance) +
                           " at ordered position " + std::to_string(pos));
    }
    const double r = train.y[s.ordering[pos]] - c.mean;
    terms[pos] = -0.5 * (kLog2Pi + std::log(c.variance) + r * r / c.variance);
  });
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

/// Each test point conditions on its `m` nearest training locations only
/// (training points first in the ordering, test points never conditioned
/// on). `m` defaults to the structure's neighbor count.
inline PredictiveDistribution vecchia_predict(const VecchiaStructure& s, const CovarianceSpec& spec,
                                              const Dataset& train, std::span<const Point> test,
                                              Flavor flavor, std::optional<int> m = std::nullopt,
                                              int threads = 1) {
  if (s.size() != train.size()) throw DimensionMismatch("Vecchia structure built for different data");
  const int mm = m.value_or(s.m);
  if (mm < 1) throw DomainError("Vecchia: neighbor count must be >= 1");
  const Kernel k(spec);
  const std::size_t n = train.size();
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(mm), n);

  std::vector<Point> coords(n);
  BoundingBox box;
  for (std::size_t i = 0; i < n; ++i) {
    coords[i] = neighbor_coordinates(spec, s.distance_mode, train.locations[i]);
    box.extend(coords[i]);
  }
  std::optional<SpatialGrid> grid;
  if (n > kExhaustiveNeighborLimit && take < n) {
    grid.emplace(box, SpatialGrid::cell_for_density(box, n));
    for (std::size_t i = 0; i < n; ++i) grid->insert(static_cast<int>(i), coords[i]);
  }

  const auto t = static_cast<Eigen::Index>(test.size());
  Eigen::VectorXd mean(t), var(t);
  parallel_for(test.size(), threads, [&](std::size_t i) {
    const Point q = neighbor_coordinates(spec, s.distance_mode, test[i]);
    std::vector<Neighbor> nb;
    if (grid) {
      nb = grid->nearest(q, take);
    } else {
      nb.reserve(n);
      for (std::size_t j = 0; j < n; ++j) nb.emplace_back(distance(q, coords[j]), static_cast<int>(j));
      std::partial_sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(take), nb.end());
      nb.resize(take);
    }
    const auto qn = static_cast<Eigen::Index>(nb.size());
    Eigen::MatrixXd cov_nn(qn, qn);
    Eigen::VectorXd cov_n(qn), y_n(qn);
    for (Eigen::Index a = 0; a < qn; ++a) {
      const Point& pa = train.locations[nb[a].second];
      cov_n[a] = k(pa, test[i]);
      y_n[a] = train.y[nb[a].second];
      cov_nn(a, a) = spec.sigma2 + spec.sigma_n2;
      for (Eigen::Index b = 0; b < a; ++b) {
        cov_nn(a, b) = cov_nn(b, a) = k(pa, train.locations[nb[b].second]);
      }
    }
    const auto c = detail::condition_on(cov_nn, cov_n, y_n, spec.sigma2);
    mean[static_cast<Eigen::Index>(i)] = c.mean;
    var[static_cast<Eigen::Index>(i)] = c.variance;
  });
  return make_predictive(std::move(mean), std::move(var), flavor, spec.sigma_n2, "Vecchia");
}

}  // namespace gpbench
