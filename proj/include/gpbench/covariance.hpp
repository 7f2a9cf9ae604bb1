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
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpbench/errors.hpp"
#include "gpbench/geometry.hpp"
#include "gpbench/sparse.hpp"

namespace gpbench {

enum class KernelFamily { matern_iso, matern_ard };

/// The three half-integer smoothness values with closed-form kernels.
enum class MaternOrder { nu_0_5, nu_1_5, nu_2_5 };

inline MaternOrder matern_order(double nu) {
  if (nu == 0.5) return MaternOrder::nu_0_5;
  if (nu == 1.5) return MaternOrder::nu_1_5;
  if (nu == 2.5) return MaternOrder::nu_2_5;
  throw UnsupportedSmoothness(nu);
}

/// Matern covariance parameters plus nugget.
///
/// matern_iso uses `rho`; matern_ard uses `rho_x`/`rho_y` and leaves `rho`
/// at zero. The parameter vector used for likelihood gradients and fitting
/// is (sigma_n2, sigma2, rho) or (sigma_n2, sigma2, rho_x, rho_y).
struct CovarianceSpec {
  KernelFamily family = KernelFamily::matern_iso;
  double sigma2 = 1.0;
  double rho = 0.2 / 2.74;
  double rho_x = 0.0;
  double rho_y = 0.0;
  double nu = 1.5;
  double sigma_n2 = 0.5;

  static CovarianceSpec isotropic(double sigma2, double rho, double nu, double sigma_n2) {
    CovarianceSpec s;
    s.family = KernelFamily::matern_iso;
    s.sigma2 = sigma2;
    s.rho = rho;
    s.nu = nu;
    s.sigma_n2 = sigma_n2;
    s.validate();
    return s;
  }

  static CovarianceSpec anisotropic(double sigma2, double rho_x, double rho_y, double nu,
                                    double sigma_n2) {
    CovarianceSpec s;
    s.family = KernelFamily::matern_ard;
    s.sigma2 = sigma2;
    s.rho = 0.0;
    s.rho_x = rho_x;
    s.rho_y = rho_y;
    s.nu = nu;
    s.sigma_n2 = sigma_n2;
    s.validate();
    return s;
  }

  bool is_ard() const { return family == KernelFamily::matern_ard; }

  void validate() const {
    matern_order(nu);
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw DomainError("sigma2 must be finite and >= 0");
    if (!(sigma_n2 >= 0.0) || !std::isfinite(sigma_n2)) throw DomainError("sigma_n2 must be finite and >= 0");
    if (is_ard()) {
      if (!(rho_x > 0.0) || !(rho_y > 0.0) || !std::isfinite(rho_x) || !std::isfinite(rho_y)) {
        throw DomainError("matern_ard requires rho_x > 0 and rho_y > 0");
      }
      if (rho != 0.0) throw DomainError("matern_ard must not set the isotropic range rho");
    } else {
      if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("matern_iso requires rho > 0");
      if (rho_x != 0.0 || rho_y != 0.0) {
        throw DomainError("matern_iso must not set the per-axis ranges rho_x/rho_y");
      }
    }
  }

  std::size_t num_params() const { return is_ard() ? 4 : 3; }

  Eigen::VectorXd params() const {
    Eigen::VectorXd p(num_params());
    p[0] = sigma_n2;
    p[1] = sigma2;
    if (is_ard()) {
      p[2] = rho_x;
      p[3] = rho_y;
    } else {
      p[2] = rho;
    }
    return p;
  }

  CovarianceSpec with_params(const Eigen::VectorXd& p) const {
    if (static_cast<std::size_t>(p.size()) != num_params()) {
      throw DimensionMismatch("parameter vector has wrong length");
    }
    CovarianceSpec s = *this;
    s.sigma_n2 = p[0];
    s.sigma2 = p[1];
    if (is_ard()) {
      s.rho_x = p[2];
      s.rho_y = p[3];
    } else {
      s.rho = p[2];
    }
    return s;
  }

  std::vector<std::string> param_names() const {
    if (is_ard()) return {"sigma_n2", "sigma2", "rho_x", "rho_y"};
    return {"sigma_n2", "sigma2", "rho"};
  }
};

/// Correlation c(r) at scaled distance r >= 0.
inline double matern_correlation(MaternOrder order, double r) {
  switch (order) {
    case MaternOrder::nu_0_5:
      return std::exp(-r);
    case MaternOrder::nu_1_5: {
      const double a = std::sqrt(3.0) * r;
      return (1.0 + a) * std::exp(-a);
    }
    case MaternOrder::nu_2_5: {
      const double a = std::sqrt(5.0) * r;
      return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

/// dc/dr.
inline double matern_correlation_slope(MaternOrder order, double r) {
  switch (order) {
    case MaternOrder::nu_0_5:
      return -std::exp(-r);
    case MaternOrder::nu_1_5:
      return -3.0 * r * std::exp(-std::sqrt(3.0) * r);
    case MaternOrder::nu_2_5: {
      const double a = std::sqrt(5.0) * r;
      return -(5.0 / 3.0) * r * (1.0 + a) * std::exp(-a);
    }
  }
  return 0.0;
}

inline double matern_correlation(double nu, double r) {
  if (r < 0.0) throw DomainError("negative distance");
  return matern_correlation(matern_order(nu), r);
}

/// Scaled distance entering the Matern argument. For matern_ard this is
/// sqrt((dx/rho_x)^2 + (dy/rho_y)^2).
inline double scaled_distance(const CovarianceSpec& spec, const Point& a, const Point& b) {
  if (spec.is_ard()) return std::hypot((a.x - b.x) / spec.rho_x, (a.y - b.y) / spec.rho_y);
  return distance(a, b) / spec.rho;
}

/// sigma2 * c(d / rho), isotropic only. No nugget.
inline double matern(const CovarianceSpec& spec, double d) {
  if (spec.is_ard()) throw DomainError("matern_ard needs a location pair, not a distance");
  if (!(d >= 0.0)) throw DomainError("negative or non-finite distance");
  return spec.sigma2 * matern_correlation(matern_order(spec.nu), d / spec.rho);
}

/// sigma2 * c(r(a, b)). No nugget.
inline double matern(const CovarianceSpec& spec, const Point& a, const Point& b) {
  return spec.sigma2 * matern_correlation(matern_order(spec.nu), scaled_distance(spec, a, b));
}

/// Pre-validated kernel for tight loops.
class Kernel {
 public:
  explicit Kernel(const CovarianceSpec& spec) : spec_(spec), order_(matern_order(spec.nu)) {
    spec_.validate();
  }

  const CovarianceSpec& spec() const { return spec_; }
  MaternOrder order() const { return order_; }

  double operator()(const Point& a, const Point& b) const {
    return spec_.sigma2 * matern_correlation(order_, scaled_distance(spec_, a, b));
  }

  /// Derivative of k(a, b) with respect to parameter `index` of
  /// CovarianceSpec::params() (index 0, the nugget, gives 0 here).
  double derivative(const Point& a, const Point& b, std::size_t index) const {
    switch (index) {
      case 0:
        return 0.0;
      case 1:
        return matern_correlation(order_, scaled_distance(spec_, a, b));
      default:
        break;
    }
    const double r = scaled_distance(spec_, a, b);
    const double slope = spec_.sigma2 * matern_correlation_slope(order_, r);
    if (!spec_.is_ard()) return slope * (-r / spec_.rho);
    if (r == 0.0) return 0.0;
    const double u = index == 2 ? (a.x - b.x) / spec_.rho_x : (a.y - b.y) / spec_.rho_y;
    const double rho = index == 2 ? spec_.rho_x : spec_.rho_y;
    return slope * (-u * u / (rho * r));
  }

 private:
  CovarianceSpec spec_;
  MaternOrder order_;
};

/// Wendland taper functions. k1 is (1 - t)^4_+ (1 + 4t), t = d / range.
enum class WendlandOrder { k0, k1, k2 };

struct TaperSpec {
  double range = 0.1;
  WendlandOrder shape = WendlandOrder::k1;

  void validate() const {
    if (!(range > 0.0)) throw DomainError("taper range must be > 0");
  }
};

inline double wendland(WendlandOrder shape, double t) {
  if (t >= 1.0) return 0.0;
  const double u = 1.0 - t;
  switch (shape) {
    case WendlandOrder::k0:
      return u * u;
    case WendlandOrder::k1: {
      const double u2 = u * u;
      return u2 * u2 * (1.0 + 4.0 * t);
    }
    case WendlandOrder::k2: {
      const double u3 = u * u * u;
      return u3 * u3 * (1.0 + 6.0 * t + 35.0 / 3.0 * t * t);
    }
  }
  return 0.0;
}

inline double taper_value(const TaperSpec& taper, double d) {
  if (!(d >= 0.0)) throw DomainError("negative or non-finite distance");
  return wendland(taper.shape, d / taper.range);
}

/// Covariance matrix between location lists A and B, optionally tapered and
/// with the nugget on the diagonal (only when A and B are the same list).
inline Eigen::MatrixXd build_cov(const CovarianceSpec& spec, std::span<const Point> a,
                                 std::span<const Point> b, bool add_nugget = false,
                                 const std::optional<TaperSpec>& taper = std::nullopt) {
  if (add_nugget && !(a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin()))) {
    throw DimensionMismatch("build_cov: nugget requires identical location lists");
  }
  if (taper) taper->validate();
  const Kernel k(spec);
  const bool symmetric = a.data() == b.data() && a.size() == b.size();
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto m = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index start = symmetric ? j : 0;
    for (Eigen::Index i = start; i < n; ++i) {
      double v = k(a[i], b[j]);
      if (taper) v *= taper_value(*taper, distance(a[i], b[j]));
      out(i, j) = v;
      if (symmetric) out(j, i) = v;
    }
  }
  if (add_nugget) out.diagonal().array() += spec.sigma_n2;
  return out;
}

inline Eigen::MatrixXd build_cov(const CovarianceSpec& spec, std::span<const Point> a,
                                 bool add_nugget = false,
                                 const std::optional<TaperSpec>& taper = std::nullopt) {
  return build_cov(spec, a, a, add_nugget, taper);
}

/// d Sigma / d theta_index for Sigma = K(A, A) + sigma_n2 I.
inline Eigen::MatrixXd build_cov_derivative(const CovarianceSpec& spec, std::span<const Point> a,
                                            std::size_t index) {
  const auto n = static_cast<Eigen::Index>(a.size());
  if (index == 0) return Eigen::MatrixXd::Identity(n, n);
  const Kernel k(spec);
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      out(i, j) = out(j, i) = k.derivative(a[i], a[j], index);
    }
  }
  return out;
}

/// Tapered covariance of A with itself in sparse form. Stores exactly the
/// pairs with distance < taper range (plus the diagonal).
inline SparseMatrix build_cov_sparse(const CovarianceSpec& spec, std::span<const Point> a,
                                     const TaperSpec& taper, bool add_nugget = true) {
  taper.validate();
  const Kernel k(spec);
  BoundingBox box;
  box.extend(a);
  SpatialGrid grid(box, taper.range);
  for (std::size_t i = 0; i < a.size(); ++i) grid.insert(static_cast<int>(i), a[i]);
  std::vector<std::vector<SparseMatrix::Entry>> rows(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    grid.for_each_within(a[i], taper.range, [&](int j, double d) {
      double v = k(a[i], a[j]) * taper_value(taper, d);
      if (static_cast<std::size_t>(j) == i && add_nugget) v += spec.sigma_n2;
      rows[i].emplace_back(j, v);
    });
  }
  const auto n = static_cast<Eigen::Index>(a.size());
  return SparseMatrix::from_rows(n, n, std::move(rows));
}

}  // namespace gpbench
