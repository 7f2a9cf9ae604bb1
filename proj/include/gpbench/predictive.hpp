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
#include <string>

#include "gpbench/errors.hpp"
#include "gpbench/log.hpp"

namespace gpbench {

enum class Flavor { latent, observable };

inline const char* to_string(Flavor f) { return f == Flavor::latent ? "latent" : "observable"; }

/// Per-point Gaussian predictive marginals. Observable variances are the
/// latent ones plus the nugget.
struct PredictiveDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Flavor flavor = Flavor::latent;

  Eigen::Index size() const { return mean.size(); }
};

/// Tolerance below zero that is treated as rounding noise in a variance.
inline constexpr double kVarianceClampTolerance = 1e-10;

/// Clamps latent variances in (-tol, 0) to zero (one warning per call) and
/// rejects anything more negative; then adds the nugget for the observable
/// flavor.
inline PredictiveDistribution make_predictive(Eigen::VectorXd mean, Eigen::VectorXd latent_variance,
                                              Flavor flavor, double sigma_n2,
                                              const char* method) {
  Eigen::Index clamped = 0;
  for (Eigen::Index i = 0; i < latent_variance.size(); ++i) {
    double& v = latent_variance[i];
    if (v < 0.0) {
      if (v <= -kVarianceClampTolerance) {
        throw NumericalError(std::string(method) + ": negative predictive variance " +
                             std::to_string(v) + " at point " + std::to_string(i));
      }
      v = 0.0;
      ++clamped;
    }
  }
  if (clamped > 0) {
    log_warning(std::string(method) + ": clamped " + std::to_string(clamped) +
                " slightly negative predictive variance(s) to 0");
  }
  if (flavor == Flavor::observable) latent_variance.array() += sigma_n2;
  return {std::move(mean), std::move(latent_variance), flavor};
}

}  // namespace gpbench
