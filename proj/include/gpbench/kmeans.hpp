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
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gpbench/errors.hpp"
#include "gpbench/geometry.hpp"
#include "gpbench/random.hpp"

namespace gpbench {

struct KMeansResult {
  Locations centers;
  std::vector<int> assignment;
  int iterations = 0;
  bool converged = false;
  double wcss = 0.0;  // within-cluster sum of squares
};

/// Within-cluster sum of squares of `points` against their nearest center.
inline double within_cluster_ss(std::span<const Point> points, std::span<const Point> centers) {
  double total = 0.0;
  for (const auto& p : points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) best = std::min(best, squared_distance(p, c));
    total += best;
  }
  return total;
}

/// kmeans++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iterations` is reached. Empty clusters keep their
/// previous center. Deterministic for a given seed.
inline KMeansResult kmeans(std::span<const Point> points, std::size_t k, std::uint64_t seed,
                           int max_iterations = 100) {
  const std::size_t n = points.size();
  if (k < 1 || k > n) {
    throw DomainError("kmeans++: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  Rng rng(seed);
  KMeansResult out;
  out.centers.reserve(k);
  std::vector<char> chosen(n, 0);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto add_center = [&](std::size_t idx) {
    chosen[idx] = 1;
    out.centers.push_back(points[idx]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], points[idx]));
  };

  add_center(static_cast<std::size_t>(uniform_index(rng, n)));
  while (out.centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // rounding at the tail
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining point coincides with a center.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    add_center(pick);
  }

  out.assignment.assign(n, -1);
  std::vector<double> sx(k), sy(k);
  std::vector<std::size_t> count(k);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], out.centers[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (out.assignment[i] != best) {
        out.assignment[i] = best;
        changed = true;
      }
    }
    out.iterations = iter + 1;
    if (!changed) {
      out.converged = true;
      break;
    }
    std::fill(sx.begin(), sx.end(), 0.0);
    std::fill(sy.begin(), sy.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(out.assignment[i]);
      sx[c] += points[i].x;
      sy[c] += points[i].y;
      ++count[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        out.centers[c] = Point{sx[c] / static_cast<double>(count[c]), sy[c] / static_cast<double>(count[c])};
      }
    }
  }
  out.wcss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.wcss += squared_distance(points[i], out.centers[out.assignment[i]]);
  }
  return out;
}

/// Centers of kmeans(points, k, seed).
inline Locations kmeanspp(std::span<const Point> points, std::size_t k, std::uint64_t seed) {
  return kmeans(points, k, seed).centers;
}

}  // namespace gpbench
