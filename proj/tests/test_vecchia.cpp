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

#include <algorithm>
#include <cmath>

#include "gpbench/exact_gp.hpp"
#include "gpbench/metrics.hpp"
#include "gpbench/simulate.hpp"
#include "gpbench/vecchia.hpp"
#include "test_util.hpp"

using namespace gpbench;
using namespace gpbench::testing;

namespace {

const CovarianceSpec kStd = CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.5);

double mean_kl(const PredictiveDistribution& a, const PredictiveDistribution& exact) {
  return compare_to_exact(a, exact).mean_kl;
}

}  // namespace

TEST(VecchiaStructure, NeighborsMatchBruteForce) {
  const auto pts = uniform_points(400, 3);
  const auto s = build_vecchia(pts, kStd, 10, 5);
  ASSERT_EQ(s.size(), 400u);
  for (std::size_t pos = 0; pos < s.size(); ++pos) {
    std::vector<std::pair<double, int>> cand;
    for (std::size_t q = 0; q < pos; ++q) {
      cand.emplace_back(distance(pts[static_cast<std::size_t>(s.ordering[pos])],
                                 pts[static_cast<std::size_t>(s.ordering[q])]),
                        static_cast<int>(q));
    }
    std::sort(cand.begin(), cand.end());
    cand.resize(std::min<std::size_t>(10, cand.size()));
    std::vector<int> want;
    for (const auto& c : cand) want.push_back(c.second);
    EXPECT_EQ(s.neighbors[pos], want) << "position " << pos;
  }
}

TEST(VecchiaStructure, GridSearchEqualsExhaustive) {
  const auto pts = uniform_points(1500, 4);
  const auto a = build_vecchia(pts, kStd, 15, 2, std::nullopt, 100000);
  const auto b = build_vecchia(pts, kStd, 15, 2, std::nullopt, 0);
  EXPECT_EQ(a.ordering, b.ordering);
  EXPECT_EQ(a.neighbors, b.neighbors);
}

TEST(VecchiaStructure, SaturatedNeighborsAreAllEarlierPoints) {
  const auto pts = uniform_points(30, 5);
  const auto s = build_vecchia(pts, kStd, 29, 1);
  for (std::size_t pos = 0; pos < s.size(); ++pos) {
    auto nb = s.neighbors[pos];
    std::sort(nb.begin(), nb.end());
    ASSERT_EQ(nb.size(), pos);
    for (std::size_t q = 0; q < pos; ++q) EXPECT_EQ(nb[q], static_cast<int>(q));
  }
}

TEST(VecchiaStructure, CollinearNearestPredecessor) {
  const Locations pts{{0.0, 0.0}, {0.1, 0.0}, {0.2, 0.0}};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto s = build_vecchia(pts, kStd, 1, seed);
    for (std::size_t pos = 1; pos < 3; ++pos) {
      const auto& self = pts[static_cast<std::size_t>(s.ordering[pos])];
      double best = 1e9;
      int arg = -1;
      for (std::size_t q = 0; q < pos; ++q) {
        const double d = distance(self, pts[static_cast<std::size_t>(s.ordering[q])]);
        if (d < best) {
          best = d;
          arg = static_cast<int>(q);
        }
      }
      ASSERT_EQ(s.neighbors[pos].size(), 1u);
      EXPECT_EQ(s.neighbors[pos][0], arg);
    }
  }
}

TEST(VecchiaStructure, CorrelationModeFollowsAnisotropy) {
  const auto spec = CovarianceSpec::anisotropic(1.0, 0.05 / 2.74, 0.2 / 2.74, 1.5, 0.5);
  EXPECT_EQ(default_neighbor_distance(spec), NeighborDistance::correlation);
  const Point o{0.5, 0.5}, along_x{0.6, 0.5}, along_y{0.5, 0.6};
  auto dist = [&](const Point& a, const Point& b) {
    return distance(neighbor_coordinates(spec, NeighborDistance::correlation, a),
                    neighbor_coordinates(spec, NeighborDistance::correlation, b));
  };
  EXPECT_GT(dist(o, along_x), dist(o, along_y));
  // the query point sees the y-offset point as its only neighbor
  const Locations pts{along_x, along_y, o};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = build_vecchia(pts, spec, 1, seed);
    if (s.ordering[2] != 2) continue;
    EXPECT_EQ(s.ordering[static_cast<std::size_t>(s.neighbors[2][0])], 1);
  }
}

TEST(VecchiaStructure, RejectsZeroNeighbors) {
  EXPECT_THROW(build_vecchia(uniform_points(5, 1), kStd, 0, 1), DomainError);
}

TEST(VecchiaLoglik, ExactLimit) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto d = draw_dataset(kStd, 200, seed);
    const auto s = build_vecchia(d.locations, kStd, 199, seed);
    EXPECT_LT(rel_diff(vecchia_loglik(s, kStd, d), loglik_exact(kStd, d)), 1e-8);
  }
}

TEST(VecchiaLoglik, TwoPointsOneNeighborIsExact) {
  const auto d = draw_dataset(kStd, 2, 3);
  const auto s = build_vecchia(d.locations, kStd, 1, 0);
  const Eigen::MatrixXd c = build_cov(kStd, d.locations, true);
  const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(0, 1);
  const double quad = (c(1, 1) * d.y[0] * d.y[0] - 2 * c(0, 1) * d.y[0] * d.y[1] + c(0, 0) * d.y[1] * d.y[1]) / det;
  const double oracle = -0.5 * quad - 0.5 * std::log(det) - std::log(2 * M_PI);
  EXPECT_NEAR(vecchia_loglik(s, kStd, d), oracle, 1e-12);
}

TEST(VecchiaLoglik, AccuracyImprovesWithNeighbors) {
  const auto d = draw_dataset(kStd, 400, 7);
  const double exact = loglik_exact(kStd, d);
  const double e2 = std::abs(vecchia_loglik(build_vecchia(d.locations, kStd, 2, 1), kStd, d) - exact);
  const double e30 = std::abs(vecchia_loglik(build_vecchia(d.locations, kStd, 30, 1), kStd, d) - exact);
  EXPECT_LT(e30, e2);
}

TEST(VecchiaLoglik, ThreadCountDoesNotChangeResult) {
  const auto d = draw_dataset(kStd, 300, 8);
  const auto s = build_vecchia(d.locations, kStd, 10, 1);
  EXPECT_EQ(vecchia_loglik(s, kStd, d, 1), vecchia_loglik(s, kStd, d, 3));
}

TEST(VecchiaPredict, FullConditioningIsExact) {
  const auto d = draw_dataset(kStd, 200, 9);
  const auto test = uniform_points(50, 10);
  const auto s = build_vecchia(d.locations, kStd, 20, 1);
  for (auto flavor : {Flavor::latent, Flavor::observable}) {
    const auto v = vecchia_predict(s, kStd, d, test, flavor, 200);
    const auto e = predict_exact(kStd, d, test, flavor);
    EXPECT_LT(max_rel_diff(v.mean, e.mean), 1e-8);
    EXPECT_LT(max_rel_diff(v.variance, e.variance), 1e-8);
  }
}

TEST(VecchiaPredict, CoincidentPointWithoutNugget) {
  auto spec = kStd;
  spec.sigma_n2 = 0.0;
  const auto d = draw_dataset(CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.2), 40, 11);
  const auto s = build_vecchia(d.locations, spec, 5, 1);
  const Locations test{d.locations[13]};
  const auto p = vecchia_predict(s, spec, d, test, Flavor::latent, 1);
  EXPECT_NEAR(p.mean[0], d.y[13], 1e-12);
  EXPECT_NEAR(p.variance[0], 0.0, 1e-12);
}

TEST(VecchiaPredict, MoreNeighborsCloserToExact) {
  const auto full = simulate_dataset(kStd, 500, 12);
  const auto train = full.subset(Split::train);
  const auto test = full.subset(Split::test_interp).locations;
  const auto exact = predict_exact(kStd, train, test, Flavor::latent);
  const auto s = build_vecchia(train.locations, kStd, 20, 1);
  const double kl5 = mean_kl(vecchia_predict(s, kStd, train, test, Flavor::latent, 5), exact);
  const double kl20 = mean_kl(vecchia_predict(s, kStd, train, test, Flavor::latent, 20), exact);
  EXPECT_LT(kl20, kl5);
}
