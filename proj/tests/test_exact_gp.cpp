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

#include <cmath>

#include "gpbench/exact_gp.hpp"
#include "test_util.hpp"

using namespace gpbench;
using namespace gpbench::testing;

namespace {

const CovarianceSpec kStd = CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.5);

Dataset single(double y) {
  Dataset d;
  d.locations = {{0.5, 0.5}};
  d.y = Eigen::VectorXd::Constant(1, y);
  d.split = {Split::train};
  return d;
}

// Central differences on the parameter vector with relative step h.
Eigen::VectorXd fd_gradient(const CovarianceSpec& spec, const Dataset& d, double h) {
  const Eigen::VectorXd p = spec.params();
  Eigen::VectorXd g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Eigen::VectorXd up = p, down = p;
    const double step = h * std::abs(p[i]);
    up[i] += step;
    down[i] -= step;
    g[i] = (loglik_exact(spec.with_params(up), d) - loglik_exact(spec.with_params(down), d)) / (2 * step);
  }
  return g;
}

}  // namespace

TEST(ExactLoglik, SinglePoint) {
  EXPECT_NEAR(loglik_exact(CovarianceSpec::isotropic(1.0, 0.1, 1.5, 0.5), single(0.0)), -1.121671, 1e-6);
  EXPECT_NEAR(loglik_exact(CovarianceSpec::isotropic(0.5, 0.1, 1.5, 0.5), single(0.0)), -0.91894, 1e-5);
  EXPECT_DOUBLE_EQ(loglik_exact(CovarianceSpec::isotropic(1.0, 0.1, 1.5, 0.5), single(0.0)),
                   -0.5 * std::log(2 * M_PI * 1.5));
}

TEST(ExactLoglik, MatchesEigenOracle) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto d = draw_dataset(kStd, 120, seed);
    const double oracle = dense_loglik(build_cov(kStd, d.locations, true), d.y);
    EXPECT_LT(rel_diff(loglik_exact(kStd, d), oracle), 1e-10);
  }
}

TEST(ExactGradient, ScalarNugget) {
  const auto spec = CovarianceSpec::isotropic(1.0, 0.1, 1.5, 0.5);
  const auto g = grad_loglik_exact(spec, single(0.0));
  EXPECT_NEAR(g[0], -0.5 / 1.5, 1e-14);
  EXPECT_NEAR(g[1], -0.5 / 1.5, 1e-14);
  EXPECT_EQ(g[2], 0.0);
}

TEST(ExactGradient, MatchesFiniteDifferences) {
  for (const auto& spec : {kStd, CovarianceSpec::isotropic(0.8, 0.1, 0.5, 0.3),
                           CovarianceSpec::anisotropic(1.2, 0.05, 0.12, 2.5, 0.4)}) {
    const auto d = draw_dataset(spec, 50, 17);
    const auto lg = loglik_and_grad_exact(spec, d);
    EXPECT_DOUBLE_EQ(lg.value, loglik_exact(spec, d));
    const auto fd = fd_gradient(spec, d, 1e-5);
    for (Eigen::Index i = 0; i < fd.size(); ++i) {
      EXPECT_LT(rel_diff(lg.gradient[i], fd[i]), 1e-5) << "component " << i;
    }
  }
}

TEST(ExactGradient, ZeroDataIsTraceTerm) {
  auto d = draw_dataset(kStd, 30, 4);
  d.y.setZero();
  const auto g = grad_loglik_exact(kStd, d);
  const Eigen::MatrixXd inv = build_cov(kStd, d.locations, true).inverse();
  for (std::size_t i = 0; i < kStd.num_params(); ++i) {
    const Eigen::MatrixXd dk = build_cov_derivative(kStd, d.locations, i);
    EXPECT_NEAR(g[static_cast<Eigen::Index>(i)], -0.5 * (inv * dk).trace(), 1e-9);
  }
}

TEST(ExactPredict, JointGaussianConditioningOracle) {
  const auto d = draw_dataset(kStd, 200, 8);
  const auto test = uniform_points(40, 9);
  // joint covariance of (f(test), y(train)) partitioned and solved by LU
  const Eigen::Index n = 200, t = 40;
  Locations all = test;
  all.insert(all.end(), d.locations.begin(), d.locations.end());
  Eigen::MatrixXd joint = build_cov(kStd, all);
  joint.bottomRightCorner(n, n).diagonal().array() += kStd.sigma_n2;
  const Eigen::MatrixXd s12 = joint.topRightCorner(t, n);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(joint.bottomRightCorner(n, n));
  const Eigen::VectorXd mean = s12 * lu.solve(d.y);
  const Eigen::MatrixXd cond = joint.topLeftCorner(t, t) - s12 * lu.solve(s12.transpose());

  const auto p = predict_exact(kStd, d, test, Flavor::latent);
  EXPECT_LT((p.mean - mean).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((p.variance - cond.diagonal()).cwiseAbs().maxCoeff(), 1e-10);
  const auto o = predict_exact(kStd, d, test, Flavor::observable);
  EXPECT_LT((o.variance - p.variance).array().abs().maxCoeff() - kStd.sigma_n2, 1e-14);
  EXPECT_TRUE(((o.variance - p.variance).array() - kStd.sigma_n2).abs().maxCoeff() < 1e-14);
  EXPECT_TRUE((p.variance.array() >= 0.0).all() && (p.variance.array() <= kStd.sigma2).all());
}

TEST(ExactPredict, InterpolatesWithoutNugget) {
  auto spec = kStd;
  spec.sigma_n2 = 1e-10;
  const auto d = draw_dataset(CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.01), 30, 5);
  const Locations test{d.locations[7]};
  const auto p = predict_exact(spec, d, test, Flavor::latent);
  EXPECT_NEAR(p.mean[0], d.y[7], 1e-6);
  EXPECT_NEAR(p.variance[0], 0.0, 1e-6);
}

TEST(ExactPredict, RevertsToPriorFarAway) {
  const auto d = draw_dataset(kStd, 50, 6);
  const Locations test{{50.0, 50.0}};
  const auto p = predict_exact(kStd, d, test, Flavor::latent);
  EXPECT_NEAR(p.mean[0], 0.0, 1e-12);
  EXPECT_NEAR(p.variance[0], kStd.sigma2, 1e-12);
}
