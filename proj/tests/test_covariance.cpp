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
#include <numbers>

#include "gpbench/covariance.hpp"
#include "gpbench/errors.hpp"
#include "test_util.hpp"

using namespace gpbench;
using gpbench::testing::uniform_points;
using gpbench::testing::max_rel_diff;

namespace {

// General Matern correlation through the modified Bessel function.
double bessel_matern(double nu, double r) {
  if (r == 0.0) return 1.0;
  const double z = std::sqrt(2.0 * nu) * r;
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) * std::cyl_bessel_k(nu, z);
}

}  // namespace

TEST(Matern, ClosedFormsMatchBesselOracle) {
  for (double nu : {0.5, 1.5, 2.5}) {
    for (double r = 0.0; r <= 6.0; r += 0.05) {
      EXPECT_NEAR(matern_correlation(nu, r), bessel_matern(nu, r), 1e-12) << "nu=" << nu << " r=" << r;
    }
  }
}

TEST(Matern, SlopeMatchesCentralDifference) {
  for (double nu : {0.5, 1.5, 2.5}) {
    const auto order = matern_order(nu);
    for (double r = 0.05; r <= 5.0; r += 0.1) {
      const double h = 1e-6;
      const double fd = (matern_correlation(order, r + h) - matern_correlation(order, r - h)) / (2 * h);
      EXPECT_NEAR(matern_correlation_slope(order, r), fd, 1e-8);
    }
  }
}

TEST(Matern, EffectiveRangeExample) {
  const auto s = CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.5);
  EXPECT_NEAR(matern(s, 0.2), 0.05, 2e-3);
}

TEST(Matern, ValueAtZeroIsVariance) {
  const auto s = CovarianceSpec::isotropic(2.3, 0.1, 2.5, 0.5);
  EXPECT_DOUBLE_EQ(matern(s, 0.0), 2.3);
}

TEST(Matern, ExponentialAtUnitDistance) {
  const auto s = CovarianceSpec::isotropic(1.0, 1.0, 0.5, 0.0);
  EXPECT_NEAR(matern(s, 1.0), 0.367879, 1e-6);
  EXPECT_DOUBLE_EQ(matern(s, 1.0), std::exp(-1.0));
}

TEST(Matern, RejectsOtherSmoothness) {
  EXPECT_THROW(matern_order(1.0), UnsupportedSmoothness);
  EXPECT_THROW(CovarianceSpec::isotropic(1.0, 0.1, 3.5, 0.1), UnsupportedSmoothness);
}

TEST(Matern, NegativeDistanceIsDomainError) {
  const CovarianceSpec s;
  EXPECT_THROW(matern(s, -0.1), DomainError);
}

TEST(CovarianceSpec, Invariants) {
  EXPECT_THROW(CovarianceSpec::isotropic(-1.0, 0.1, 1.5, 0.1), DomainError);
  EXPECT_THROW(CovarianceSpec::isotropic(1.0, 0.0, 1.5, 0.1), DomainError);
  EXPECT_THROW(CovarianceSpec::isotropic(1.0, 0.1, 1.5, -0.1), DomainError);
  EXPECT_THROW(CovarianceSpec::anisotropic(1.0, 0.1, 0.0, 1.5, 0.1), DomainError);
  EXPECT_NO_THROW(CovarianceSpec::isotropic(0.0, 0.1, 1.5, 0.0));
}

TEST(CovarianceSpec, ParamsRoundTrip) {
  const auto iso = CovarianceSpec::isotropic(1.5, 0.2, 1.5, 0.3);
  EXPECT_EQ(iso.num_params(), 3u);
  const Eigen::Vector3d p(0.3, 1.5, 0.2);
  EXPECT_EQ(iso.params(), Eigen::VectorXd(p));
  const auto ard = CovarianceSpec::anisotropic(1.0, 0.1, 0.3, 0.5, 0.2);
  EXPECT_EQ(ard.num_params(), 4u);
  const auto back = ard.with_params(ard.params() * 2.0);
  EXPECT_DOUBLE_EQ(back.rho_y, 0.6);
  EXPECT_DOUBLE_EQ(back.sigma_n2, 0.4);
  EXPECT_EQ(back.nu, 0.5);
  EXPECT_THROW(iso.with_params(Eigen::VectorXd::Ones(4)), DimensionMismatch);
}

TEST(Matern, AnisotropicUsesScaledEuclideanDistance) {
  const auto s = CovarianceSpec::anisotropic(1.0, 0.05 / 2.74, 0.2 / 2.74, 1.5, 0.0);
  const Point o{0, 0};
  const double r = std::sqrt(std::pow(0.03 / s.rho_x, 2) + std::pow(0.04 / s.rho_y, 2));
  EXPECT_DOUBLE_EQ(matern(s, o, {0.03, 0.04}), matern_correlation(1.5, r));
  // shorter range along x: the same offset decorrelates faster along x
  EXPECT_LT(matern(s, o, {0.1, 0}), matern(s, o, {0, 0.1}));
  EXPECT_THROW(matern(s, 0.1), DomainError);
}

TEST(Matern, AnisotropicWithEqualRangesIsIsotropic) {
  const auto pts = uniform_points(30, 12);
  for (double nu : {0.5, 1.5, 2.5}) {
    const auto ard = CovarianceSpec::anisotropic(0.8, 0.1, 0.1, nu, 0.0);
    const auto iso = CovarianceSpec::isotropic(0.8, 0.1, nu, 0.0);
    EXPECT_LT(max_rel_diff(build_cov(ard, pts), build_cov(iso, pts)), 1e-14);
  }
}

TEST(Matern, AnisotropicCovarianceIsPositiveDefinite) {
  const auto pts = uniform_points(750, 5);
  for (double nu : {0.5, 1.5, 2.5}) {
    const auto ard = CovarianceSpec::anisotropic(1.0, 0.05 / 2.74, 0.2 / 2.74, nu, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_cov(ard, pts), Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues()[0], -1e-10) << nu;
  }
}

TEST(Kernel, DerivativesMatchFiniteDifferences) {
  const auto pts = uniform_points(6, 3);
  for (const auto& spec : {CovarianceSpec::isotropic(1.3, 0.15, 1.5, 0.2),
                           CovarianceSpec::isotropic(0.7, 0.3, 0.5, 0.2),
                           CovarianceSpec::anisotropic(1.1, 0.1, 0.25, 2.5, 0.2)}) {
    const Kernel k(spec);
    for (std::size_t idx = 1; idx < spec.num_params(); ++idx) {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = 0; j < pts.size(); ++j) {
          const double h = 1e-6 * spec.params()[static_cast<Eigen::Index>(idx)];
          Eigen::VectorXd up = spec.params(), down = spec.params();
          up[static_cast<Eigen::Index>(idx)] += h;
          down[static_cast<Eigen::Index>(idx)] -= h;
          const double fd = (Kernel(spec.with_params(up))(pts[i], pts[j]) -
                             Kernel(spec.with_params(down))(pts[i], pts[j])) / (2 * h);
          EXPECT_NEAR(k.derivative(pts[i], pts[j], idx), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
      }
    }
    EXPECT_EQ(k.derivative(pts[0], pts[1], 0), 0.0);
  }
}

TEST(Wendland, Boundaries) {
  const TaperSpec t{0.1, WendlandOrder::k1};
  EXPECT_DOUBLE_EQ(taper_value(t, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(taper_value(t, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(taper_value(t, 0.25), 0.0);
}

TEST(Wendland, PolynomialsAtHalfRange) {
  // t = 1/2 evaluated by hand: (1/2)^2, (1/2)^4 * 3, (1/2)^6 * (1 + 3 + 35/12)
  EXPECT_DOUBLE_EQ(taper_value({0.1, WendlandOrder::k0}, 0.05), 0.25);
  EXPECT_DOUBLE_EQ(taper_value({0.1, WendlandOrder::k1}, 0.05), 3.0 / 16.0);
  EXPECT_NEAR(taper_value({0.1, WendlandOrder::k2}, 0.05), (4.0 + 35.0 / 12.0) / 64.0, 1e-15);
}

TEST(Wendland, TaperedMaternIsPositiveDefinite) {
  const auto pts = uniform_points(150, 11);
  const auto spec = CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.0);
  for (auto shape : {WendlandOrder::k1, WendlandOrder::k2}) {
    const Eigen::MatrixXd c = build_cov(spec, pts, false, TaperSpec{0.15, shape});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(BuildCov, SinglePointWithNugget) {
  const auto spec = CovarianceSpec::isotropic(1.0, 0.1, 1.5, 0.5);
  const Locations a{{0, 0}};
  const Eigen::MatrixXd c = build_cov(spec, a, a, true);
  ASSERT_EQ(c.rows(), 1);
  EXPECT_DOUBLE_EQ(c(0, 0), 1.5);
}

TEST(BuildCov, DuplicateLocationsGiveRankOne) {
  const auto spec = CovarianceSpec::isotropic(2.0, 0.1, 1.5, 0.5);
  const Locations a{{0.3, 0.3}, {0.3, 0.3}};
  const Eigen::MatrixXd c = build_cov(spec, a);
  EXPECT_TRUE(c.isApproxToConstant(2.0));
}

TEST(BuildCov, SmallestEigenvalueAtLeastNugget) {
  const auto spec = CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.5);
  const auto pts = uniform_points(50, 5);
  const Eigen::MatrixXd c = build_cov(spec, pts, true);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.5 - 1e-12);
  EXPECT_TRUE(c.isApprox(c.transpose()));
}

TEST(BuildCov, NuggetNeedsSameList) {
  const auto spec = CovarianceSpec::isotropic(1.0, 0.1, 1.5, 0.5);
  const Locations a{{0, 0}}, b{{1, 1}};
  EXPECT_THROW(build_cov(spec, a, b, true), DimensionMismatch);
}

TEST(BuildCov, CrossCovarianceShape) {
  const auto spec = CovarianceSpec::isotropic(1.0, 0.1, 1.5, 0.5);
  const auto a = uniform_points(4, 1), b = uniform_points(7, 2);
  const Eigen::MatrixXd c = build_cov(spec, a, b);
  ASSERT_EQ(c.rows(), 4);
  ASSERT_EQ(c.cols(), 7);
  EXPECT_DOUBLE_EQ(c(2, 5), matern(spec, a[2], b[5]));
}

TEST(BuildCov, DerivativeIdentityForNugget) {
  const auto spec = CovarianceSpec::isotropic(1.0, 0.1, 1.5, 0.5);
  const auto a = uniform_points(5, 1);
  EXPECT_TRUE(build_cov_derivative(spec, a, 0).isIdentity());
  const Eigen::MatrixXd d1 = build_cov_derivative(spec, a, 1);
  EXPECT_TRUE(d1.isApprox(build_cov(spec, a) / spec.sigma2));
}

TEST(BuildCov, SparseEqualsDenseTapered) {
  const auto spec = CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.5);
  const auto pts = uniform_points(300, 9);
  const TaperSpec taper{0.12, WendlandOrder::k1};
  const SparseMatrix s = build_cov_sparse(spec, pts, taper, true);
  s.validate();
  const Eigen::MatrixXd dense = build_cov(spec, pts, true, taper);
  EXPECT_LT(gpbench::testing::max_rel_diff(s.to_dense(), dense), 1e-15);
  // every stored pair lies strictly inside the range
  for (Eigen::Index i = 0; i < s.rows; ++i) {
    for (int p = s.row_offsets[i]; p < s.row_offsets[i + 1]; ++p) {
      EXPECT_LT(distance(pts[i], pts[s.col_indices[p]]), taper.range);
    }
  }
}
