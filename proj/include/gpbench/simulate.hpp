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
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "gpbench/covariance.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/dense_cholesky.hpp"
#include "gpbench/errors.hpp"
#include "gpbench/log.hpp"
#include "gpbench/random.hpp"

namespace gpbench {

/// Simulation presets. All use sigma2 = 1, sigma_n2 = 0.5, nu = 1.5 and an
/// effective range of 0.2 unless the preset changes one of them.
enum class Scenario { standard, small_range, large_range, low_nugget, aniso, nu05, nu25 };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::standard: return "std";
    case Scenario::small_range: return "small_range";
    case Scenario::large_range: return "large_range";
    case Scenario::low_nugget: return "low_nugget";
    case Scenario::aniso: return "aniso";
    case Scenario::nu05: return "nu05";
    case Scenario::nu25: return "nu25";
  }
  return "std";
}

inline Scenario parse_scenario(std::string_view s) {
  for (auto sc : {Scenario::standard, Scenario::small_range, Scenario::large_range, Scenario::low_nugget,
                  Scenario::aniso, Scenario::nu05, Scenario::nu25}) {
    if (to_string(sc) == s) return sc;
  }
  throw DomainError("unknown scenario '" + std::string(s) + "'");
}

inline CovarianceSpec scenario_spec(Scenario s) {
  switch (s) {
    case Scenario::standard: return CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.5);
    case Scenario::small_range: return CovarianceSpec::isotropic(1.0, 0.05 / 2.74, 1.5, 0.5);
    case Scenario::large_range: return CovarianceSpec::isotropic(1.0, 0.5 / 2.74, 1.5, 0.5);
    case Scenario::low_nugget: return CovarianceSpec::isotropic(1.0, 0.2 / 2.74, 1.5, 0.1);
    case Scenario::aniso: return CovarianceSpec::anisotropic(1.0, 0.05 / 2.74, 0.2 / 2.74, 1.5, 0.5);
    case Scenario::nu05: return CovarianceSpec::isotropic(1.0, 0.2 / 3.0, 0.5, 0.5);
    case Scenario::nu25: return CovarianceSpec::isotropic(1.0, 0.2 / 2.65, 2.5, 0.5);
  }
  return CovarianceSpec{};
}

/// Above this many total locations the latent field is sampled as
/// training values first and test blocks conditionally on them.
inline constexpr std::size_t kJointSamplingLimit = 30000;

namespace detail {

inline Point uniform_outside_upper_quadrant(Rng& rng) {
  for (;;) {
    const Point p{uniform01(rng), uniform01(rng)};
    if (!(p.x >= 0.5 && p.y >= 0.5)) return p;
  }
}

// Cholesky of a latent covariance (no nugget), which is often numerically
// singular for smooth kernels and dense designs: escalate a diagonal jitter
// from 1e-10 to 1e-6 times sigma2 until the factorization succeeds.
inline DenseCholesky latent_cholesky(Eigen::MatrixXd k, double sigma2) {
  try {
    return DenseCholesky(k, false);
  } catch (const FactorizationFailed&) {
  }
  for (double rel = 1e-10; rel <= 1e-6 * 1.0001; rel *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += rel * sigma2;
    try {
      DenseCholesky c(std::move(kj), false);
      std::ostringstream msg;
      msg << "latent covariance needed jitter " << rel * sigma2 << " for sampling";
      log_warning(msg.str());
      return c;
    } catch (const FactorizationFailed&) {
    }
  }
  throw FactorizationFailed(-1, "simulation: latent covariance not factorizable even with jitter");
}

inline Eigen::VectorXd standard_normals(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = standard_normal(rng);
  return z;
}

}  // namespace detail

/// Training and interpolation sets (N each) uniform on [0,1]^2 minus
/// [0.5,1]^2, extrapolation set (N) uniform on [0.5,1]^2; one latent GP
/// draw over all 3N points plus N(0, sigma_n2) noise. Deterministic per seed.
inline Dataset simulate_dataset(const CovarianceSpec& spec, std::size_t n, std::uint64_t seed,
                                std::size_t joint_limit = kJointSamplingLimit) {
  if (n < 1) throw DomainError("simulate: N must be >= 1");
  spec.validate();
  Rng rng(seed);
  Dataset d;
  d.locations.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) d.locations.push_back(detail::uniform_outside_upper_quadrant(rng));
  for (std::size_t i = 0; i < n; ++i) d.locations.push_back(detail::uniform_outside_upper_quadrant(rng));
  for (std::size_t i = 0; i < n; ++i) d.locations.push_back({uniform(rng, 0.5, 1.0), uniform(rng, 0.5, 1.0)});
  d.split.assign(n, Split::train);
  d.split.resize(2 * n, Split::test_interp);
  d.split.resize(3 * n, Split::test_extrap);

  const auto total = static_cast<Eigen::Index>(3 * n);
  const auto nt = static_cast<Eigen::Index>(n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(total);
  if (spec.sigma2 > 0.0) {
    if (static_cast<std::size_t>(total) <= joint_limit) {
      const auto chol = detail::latent_cholesky(build_cov(spec, d.locations), spec.sigma2);
      f = chol.matrix_l() * detail::standard_normals(rng, total);
    } else {
      const std::span<const Point> all(d.locations);
      const auto train = all.first(n);
      const auto chol = detail::latent_cholesky(build_cov(spec, train), spec.sigma2);
      f.head(nt) = chol.matrix_l() * detail::standard_normals(rng, nt);
      const Eigen::VectorXd a = chol.solve(Eigen::VectorXd(f.head(nt)));
      constexpr Eigen::Index kBlock = 2000;
      for (Eigen::Index start = nt; start < total; start += kBlock) {
        const Eigen::Index len = std::min(kBlock, total - start);
        const auto block = all.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len));
        const Eigen::MatrixXd cross = build_cov(spec, train, block);
        const Eigen::MatrixXd v = chol.solve_lower(cross);
        const Eigen::MatrixXd cond = build_cov(spec, block) - v.transpose() * v;
        const auto cchol = detail::latent_cholesky(cond, spec.sigma2);
        f.segment(start, len) = cross.transpose() * a + cchol.matrix_l() * detail::standard_normals(rng, len);
      }
    }
  }
  const double noise_sd = std::sqrt(spec.sigma_n2);
  d.y = f + noise_sd * detail::standard_normals(rng, total);
  d.latent = std::move(f);
  return d;
}

inline Dataset simulate_dataset(Scenario scenario, std::size_t n, std::uint64_t seed) {
  return simulate_dataset(scenario_spec(scenario), n, seed);
}

}  // namespace gpbench
