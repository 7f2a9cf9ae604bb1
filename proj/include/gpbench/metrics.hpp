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
#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>
#include <vector>

#include "gpbench/errors.hpp"
#include "gpbench/predictive.hpp"

namespace gpbench {

struct PredictionScores {
  double rmse = 0.0;
  double log_score = 0.0;  // mean Gaussian negative log-likelihood
  double crps = 0.0;
};

inline double standard_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Closed-form CRPS of N(mu, sd^2) at observation y.
inline double crps_gaussian(double mu, double sd, double y) {
  if (sd <= 0.0) return std::abs(y - mu);
  const double z = (y - mu) / sd;
  return sd * (-1.0 / std::sqrt(std::numbers::pi) + 2.0 * standard_normal_pdf(z) +
               z * (2.0 * standard_normal_cdf(z) - 1.0));
}

/// Gaussian negative log density of y under N(mu, var). A zero variance
/// with a nonzero residual scores +inf.
inline double gaussian_nll(double mu, double var, double y) {
  const double r = y - mu;
  if (var <= 0.0) {
    return r == 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  }
  return 0.5 * r * r / var + 0.5 * std::log(2.0 * std::numbers::pi * var);
}

/// RMSE, log-score and CRPS of `pred` against `truth`.
///
/// Observable-flavored predictions already carry the nugget and are scored
/// as they are. For latent-flavored predictions the scoring variance is
/// sigma_p^2 + sigma_n2_hat: pass 0 to score the latent process, or the
/// estimated nugget to score observations with latent predictions.
inline PredictionScores score_predictions(const PredictiveDistribution& pred, const Eigen::VectorXd& truth,
                                          double sigma_n2_hat = 0.0) {
  if (pred.mean.size() != truth.size() || pred.variance.size() != truth.size()) {
    throw DimensionMismatch("score_predictions: prediction and truth lengths differ");
  }
  if (truth.size() == 0) throw DomainError("score_predictions: no points");
  const double extra = pred.flavor == Flavor::latent ? sigma_n2_hat : 0.0;
  double se = 0.0, nll = 0.0, crps = 0.0;
  bool pos_inf = false;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const double var = pred.variance[i] + extra;
    const double r = truth[i] - pred.mean[i];
    se += r * r;
    const double l = gaussian_nll(pred.mean[i], var, truth[i]);
    if (l == std::numeric_limits<double>::infinity()) pos_inf = true;
    nll += l;
    crps += crps_gaussian(pred.mean[i], std::sqrt(std::max(var, 0.0)), truth[i]);
  }
  const double n = static_cast<double>(truth.size());
  PredictionScores s;
  s.rmse = std::sqrt(se / n);
  s.log_score = pos_inf ? std::numeric_limits<double>::infinity() : nll / n;
  s.crps = crps / n;
  return s;
}

/// KL(N(mu_q, sd_q^2) || N(mu_p, sd_p^2)) =
/// log(sd_p/sd_q) + (sd_q^2 + (mu_q - mu_p)^2) / (2 sd_p^2) - 1/2.
/// q is the approximate distribution, p the exact one.
inline double kl_gaussian(double mu_q, double sd_q, double mu_p, double sd_p) {
  if (!(sd_q > 0.0) || !(sd_p > 0.0)) throw DomainError("kl_gaussian: standard deviations must be > 0");
  if (mu_q == mu_p && sd_q == sd_p) return 0.0;
  // Same expression arranged as 1/2 (x - log1p(x)) + dm^2 / (2 sd_p^2) with
  // x = (sd_q/sd_p)^2 - 1, which stays accurate for nearly equal inputs.
  const double dm = mu_q - mu_p;
  const double ratio = sd_q / sd_p;
  const double x = (ratio - 1.0) * (ratio + 1.0);
  const double v = 0.5 * (x - std::log1p(x)) + dm * dm / (2.0 * sd_p * sd_p);
  return std::max(v, 0.0);
}

/// Agreement of an approximate predictive distribution with the exact one.
struct ExactComparison {
  double rmse_mean = 0.0;
  double rmse_variance = 0.0;
  double mean_kl = 0.0;
};

inline ExactComparison compare_to_exact(const PredictiveDistribution& approx, const PredictiveDistribution& exact) {
  if (approx.size() != exact.size()) throw DimensionMismatch("compare_to_exact: sizes differ");
  if (approx.size() == 0) throw DomainError("compare_to_exact: no points");
  ExactComparison c;
  const double n = static_cast<double>(approx.size());
  c.rmse_mean = std::sqrt((approx.mean - exact.mean).squaredNorm() / n);
  c.rmse_variance = std::sqrt((approx.variance - exact.variance).squaredNorm() / n);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < approx.size(); ++i) {
    kl += kl_gaussian(approx.mean[i], std::sqrt(approx.variance[i]), exact.mean[i], std::sqrt(exact.variance[i]));
  }
  c.mean_kl = kl / n;
  return c;
}

struct EstimateSummary {
  double bias = 0.0;
  double mse = 0.0;
  double se_bias = 0.0;
  double se_mse = 0.0;
};

/// Bias and MSE per parameter over repetitions, with standard errors
/// (sample SD / sqrt(reps)) of the deviations and squared deviations.
inline std::vector<EstimateSummary> aggregate_estimates(const std::vector<Eigen::VectorXd>& estimates,
                                                        const Eigen::VectorXd& truth) {
  if (estimates.size() < 2) throw DomainError("aggregate_estimates: need at least 2 repetitions");
  const auto p = truth.size();
  const double reps = static_cast<double>(estimates.size());
  std::vector<EstimateSummary> out(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> dev, sq;
    for (const auto& e : estimates) {
      if (e.size() != p) throw DimensionMismatch("aggregate_estimates: parameter vector length mismatch");
      dev.push_back(e[j] - truth[j]);
      sq.push_back(dev.back() * dev.back());
    }
    auto mean_sd = [&](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= reps;
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      return std::pair{m, std::sqrt(ss / (reps - 1.0))};
    };
    const auto [bias, sd_dev] = mean_sd(dev);
    const auto [mse, sd_sq] = mean_sd(sq);
    auto& s = out[static_cast<std::size_t>(j)];
    s.bias = bias;
    s.mse = mse;
    s.se_bias = sd_dev / std::sqrt(reps);
    s.se_mse = sd_sq / std::sqrt(reps);
  }
  return out;
}

}  // namespace gpbench
