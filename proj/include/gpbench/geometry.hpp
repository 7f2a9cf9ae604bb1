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
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "gpbench/random.hpp"

namespace gpbench {

/// A location in the plane.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

using Locations = std::vector<Point>;

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct BoundingBox {
  Point lo{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Point hi{-std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  void extend(const Point& p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  void extend(std::span<const Point> pts) {
    for (const auto& p : pts) extend(p);
  }
  bool empty() const { return lo.x > hi.x; }
  double diameter() const { return empty() ? 0.0 : distance(lo, hi); }
};

/// (distance, id) pair; ordering breaks distance ties by id so neighbor
/// sets are deterministic.
using Neighbor = std::pair<double, int>;

/// Uniform bucket grid over a fixed bounding box. Points are inserted by id
/// and can be queried by radius or by k nearest. Supports incremental
/// insertion, which the ordered neighbor search relies on.
class SpatialGrid {
 public:
  SpatialGrid(const BoundingBox& box, double cell_size) : box_(box) {
    if (box_.empty()) box_.extend(Point{});
    const double width = std::max(box_.hi.x - box_.lo.x, 1e-12);
    const double height = std::max(box_.hi.y - box_.lo.y, 1e-12);
    constexpr double kMaxCells = 4096.0;
    cell_ = std::max({cell_size, width / kMaxCells, height / kMaxCells, 1e-12});
    nx_ = static_cast<int>(std::floor(width / cell_)) + 1;
    ny_ = static_cast<int>(std::floor(height / cell_)) + 1;
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
  }

  /// Cell size giving roughly `per_cell` points per cell for n points.
  static double cell_for_density(const BoundingBox& box, std::size_t n,
                                 double per_cell = 2.0) {
    const double area = std::max((box.hi.x - box.lo.x) * (box.hi.y - box.lo.y), 1e-24);
    return std::sqrt(area * per_cell / std::max<double>(static_cast<double>(n), 1.0));
  }

  void insert(int id, const Point& p) {
    if (static_cast<std::size_t>(id) >= points_.size()) points_.resize(id + 1);
    points_[id] = p;
    cells_[cell_index(cell_x(p.x), cell_y(p.y))].push_back(id);
    ++size_;
  }

  std::size_t size() const { return size_; }

  /// Calls fn(id, dist) for every stored point with distance < radius.
  template <typename Fn>
  void for_each_within(const Point& q, double radius, Fn&& fn) const {
    const int span = static_cast<int>(std::ceil(radius / cell_));
    const int cx = cell_x(q.x);
    const int cy = cell_y(q.y);
    for (int iy = std::max(0, cy - span); iy <= std::min(ny_ - 1, cy + span); ++iy) {
      for (int ix = std::max(0, cx - span); ix <= std::min(nx_ - 1, cx + span); ++ix) {
        for (int id : cells_[cell_index(ix, iy)]) {
          const double d = distance(q, points_[id]);
          if (d < radius) fn(id, d);
        }
      }
    }
  }

  /// The k nearest stored points to q, ascending by (distance, id).
  std::vector<Neighbor> nearest(const Point& q, std::size_t k) const {
    std::vector<Neighbor> best;
    k = std::min(k, size_);
    if (k == 0) return best;
    best.reserve(k + 1);
    const int cx = cell_x(q.x);
    const int cy = cell_y(q.y);
    // Distance from q to its (possibly clamped) home cell; zero when q lies
    // inside the grid.
    const double cell_lo_x = box_.lo.x + cx * cell_;
    const double cell_lo_y = box_.lo.y + cy * cell_;
    const double ox = std::max({cell_lo_x - q.x, 0.0, q.x - (cell_lo_x + cell_)});
    const double oy = std::max({cell_lo_y - q.y, 0.0, q.y - (cell_lo_y + cell_)});
    const double offset = std::hypot(ox, oy);
    const int max_ring = std::max(nx_, ny_);

    auto consider = [&](int id) {
      Neighbor cand{distance(q, points_[id]), id};
      if (best.size() == k && !(cand < best.back())) return;
      best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
      if (best.size() > k) best.pop_back();
    };
    auto visit = [&](int ix, int iy) {
      if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) return;
      for (int id : cells_[cell_index(ix, iy)]) consider(id);
    };

    for (int ring = 0; ring <= max_ring; ++ring) {
      if (ring == 0) {
        visit(cx, cy);
      } else {
        for (int ix = cx - ring; ix <= cx + ring; ++ix) {
          visit(ix, cy - ring);
          visit(ix, cy + ring);
        }
        for (int iy = cy - ring + 1; iy <= cy + ring - 1; ++iy) {
          visit(cx - ring, iy);
          visit(cx + ring, iy);
        }
      }
      // Every point outside rings 0..ring is at least ring*cell from the
      // home cell.
      if (best.size() == k && best.back().first <= ring * cell_ - offset) break;
    }
    return best;
  }

 private:
  int cell_x(double x) const {
    return std::clamp(static_cast<int>(std::floor((x - box_.lo.x) / cell_)), 0, nx_ - 1);
  }
  int cell_y(double y) const {
    return std::clamp(static_cast<int>(std::floor((y - box_.lo.y) / cell_)), 0, ny_ - 1);
  }
  std::size_t cell_index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * nx_ + ix;
  }

  BoundingBox box_;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> cells_;
  std::vector<Point> points_;
  std::size_t size_ = 0;
};

/// Empirical quantile of the pairwise distances among `pts`. All pairs are
/// used up to `max_pairs`; beyond that a seeded random sample of pairs.
inline double pairwise_distance_quantile(std::span<const Point> pts, double q,
                                         std::uint64_t seed = 0,
                                         std::size_t max_pairs = 4'000'000) {
  const std::size_t n = pts.size();
  if (n < 2) return 0.0;
  std::vector<double> d;
  const std::size_t all = n * (n - 1) / 2;
  if (all <= max_pairs) {
    d.reserve(all);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) d.push_back(distance(pts[i], pts[j]));
    }
  } else {
    Rng rng(seed);
    d.reserve(max_pairs);
    while (d.size() < max_pairs) {
      const auto i = uniform_index(rng, n);
      const auto j = uniform_index(rng, n);
      if (i != j) d.push_back(distance(pts[i], pts[j]));
    }
  }
  q = std::clamp(q, 0.0, 1.0);
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(d.size() - 1)));
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(idx), d.end());
  return d[idx];
}

}  // namespace gpbench
