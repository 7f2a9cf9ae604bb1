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
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "gpbench/covariance.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/errors.hpp"
#include "gpbench/geometry.hpp"
#include "gpbench/methods.hpp"

namespace gpbench {

struct FitResult {
  CovarianceSpec spec_hat;
  double loglik_at_optimum = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::vector<double> trajectory;  // loglik after each accepted step, init first
};

struct FitOptions {
  double rel_tolerance = 1e-8;       // relative loglik change
  double grad_tolerance = 1e-5;      // inf-norm of the log-parameter gradient
  int max_iterations = 1000;
  double fd_step = 1e-4;             // central differences, log-space
  double max_log_step = 2.0;         // cap on any coordinate of a step
  int max_backtracks = 40;
};

/// Starting values: sigma_n2 = sigma2 = var(y)/2 and a range with
/// correlation 0.5 at the 0.3-quantile of pairwise distances.
inline CovarianceSpec default_init(const Dataset& train, KernelFamily family, double nu) {
  const auto order = matern_order(nu);
  const double mean = train.y.mean();
  const double var = train.size() > 1
                         ? (train.y.array() - mean).square().sum() / static_cast<double>(train.size() - 1)
                         : 1.0;
  const double q = std::max(pairwise_distance_quantile(train.locations, 0.3), 1e-6);
  double lo = 0.0, hi = 50.0;  // c(r) = 0.5 by bisection
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (matern_correlation(order, mid) > 0.5 ? lo : hi) = mid;
  }
  const double rho = q / (0.5 * (lo + hi));
  const double half = std::max(var / 2.0, 1e-8);
  if (family == KernelFamily::matern_ard) return CovarianceSpec::anisotropic(half, rho, rho, nu, half);
  return CovarianceSpec::isotropic(half, rho, nu, half);
}

namespace detail {

struct Objective {
  MethodModel& model;
  const CovarianceSpec& base;
  const FitOptions& opt;

  CovarianceSpec at(const Eigen::VectorXd& log_params) const {
    return base.with_params(log_params.array().exp().matrix());
  }

  double value(const Eigen::VectorXd& x) const {
    try {
      const double v = model.loglik(at(x));
      return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  }

  // Value and gradient with respect to the log-parameters.
  std::pair<double, Eigen::VectorXd> value_and_gradient(const Eigen::VectorXd& x, double known_value) const {
    if (model.analytic_gradient()) {
      const auto lg = model.loglik_and_gradient(at(x));
      return {lg.value, lg.gradient.cwiseProduct(x.array().exp().matrix())};
    }
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd up = x, down = x;
      up[i] += opt.fd_step;
      down[i] -= opt.fd_step;
      g[i] = (value(up) - value(down)) / (2.0 * opt.fd_step);
    }
    return {known_value, g};
  }
};

}  // namespace detail

/// Maximizes the method's log-likelihood over the log of
/// (sigma_n2, sigma2, rho[, rho_y]) with nu held fixed.
///
/// Ascent directions come from a BFGS approximation of the inverse
/// Hessian (falling back to the plain gradient when it is not an ascent
/// direction) and every step passes an Armijo backtracking line search, so
/// the accepted log-likelihood sequence never decreases. Gradients are
/// analytic for the exact method and central differences otherwise.
/// Stops when the relative change is below rel_tolerance and the gradient
/// inf-norm is below grad_tolerance (converged), when no step improves the
/// objective, or at max_iterations.
inline FitResult fit_params(MethodModel& model, const CovarianceSpec& init, bool fix_nu = true,
                            const FitOptions& opt = {}) {
  if (!fix_nu) throw DomainError("estimating the smoothness nu is not supported");
  init.validate();
  const auto start = std::chrono::steady_clock::now();
  const detail::Objective obj{model, init, opt};
  model.prepare(init);

  Eigen::VectorXd x = init.params().array().log().matrix();
  if (!x.allFinite()) throw DomainError("fit_params: initial parameters must be > 0");
  double f = obj.value(x);
  if (!std::isfinite(f)) throw NumericalError("fit_params: log-likelihood not finite at the initial parameters");

  FitResult res;
  res.trajectory.push_back(f);
  auto [f0, g] = obj.value_and_gradient(x, f);
  f = f0;
  const auto p = x.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p, p);  // inverse Hessian of -f
  bool h_is_identity = true;
  double last_change = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (last_change < opt.rel_tolerance && g.lpNorm<Eigen::Infinity>() < opt.grad_tolerance) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d = h * g;
    if (!(g.dot(d) > 0.0)) {
      h.setIdentity();
      h_is_identity = true;
      d = g;
    }
    const double dmax = d.lpNorm<Eigen::Infinity>();
    if (dmax > opt.max_log_step) d *= opt.max_log_step / dmax;
    if (dmax == 0.0) {
      res.converged = true;
      break;
    }

    const double slope = g.dot(d);
    double t = 1.0;
    double f_new = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int b = 0; b <= opt.max_backtracks; ++b, t *= 0.5) {
      x_new = x + t * d;
      f_new = obj.value(x_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * t * slope && f_new >= f) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!h_is_identity) {  // retry along the raw gradient
        h.setIdentity();
        h_is_identity = true;
        continue;
      }
      res.converged = g.lpNorm<Eigen::Infinity>() < opt.grad_tolerance;
      break;
    }

    auto [fv, g_new] = obj.value_and_gradient(x_new, f_new);
    f_new = fv;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g - g_new;  // gradient change of -f
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
      h = (eye - rho * s * yv.transpose()) * h * (eye - rho * yv * s.transpose()) + rho * s * s.transpose();
      h_is_identity = false;
    }
    last_change = std::abs(f_new - f) / std::max(std::abs(f), 1.0);
    x = x_new;
    f = f_new;
    g = g_new;
    res.trajectory.push_back(f);
    res.iterations = iter + 1;
  }
  if (!res.converged && last_change < opt.rel_tolerance && g.lpNorm<Eigen::Infinity>() < opt.grad_tolerance) {
    res.converged = true;
  }
  res.spec_hat = obj.at(x);
  res.loglik_at_optimum = f;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline FitResult fit_params(const MethodConfig& method, const Dataset& train, const CovarianceSpec& init,
                            bool fix_nu = true, const FitOptions& opt = {}) {
  MethodModel model(method, train);
  return fit_params(model, init, fix_nu, opt);
}

}  // namespace gpbench
