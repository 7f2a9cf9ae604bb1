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
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpbench/errors.hpp"
#include "gpbench/geometry.hpp"

namespace gpbench {

enum class Split { train, test_interp, test_extrap };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::test_interp:
      return "test_interp";
    case Split::test_extrap:
      return "test_extrap";
  }
  return "train";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test_interp") return Split::test_interp;
  if (s == "test_extrap") return Split::test_extrap;
  throw DomainError("unknown split label '" + std::string(s) + "'");
}

/// Locations with responses. `latent` holds the noise-free process values
/// when known (simulated data); `covariates` feeds the optional linear mean.
struct Dataset {
  Locations locations;
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> latent;
  std::optional<Eigen::MatrixXd> covariates;
  std::vector<Split> split;

  std::size_t size() const { return locations.size(); }
  bool has_latent() const { return latent.has_value(); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(locations.size());
    if (y.size() != n || static_cast<Eigen::Index>(split.size()) != n) {
      throw DimensionMismatch("dataset: locations, responses and split labels differ in length");
    }
    if (latent && latent->size() != n) throw DimensionMismatch("dataset: latent length mismatch");
    if (covariates && covariates->rows() != n) {
      throw DimensionMismatch("dataset: covariate rows differ from number of locations");
    }
    for (const auto& p : locations) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DomainError("dataset: non-finite coordinate");
    }
  }

  /// Points carrying the given split label, in their original order.
  Dataset subset(Split which) const {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < size(); ++i) {
      if (split[i] == which) idx.push_back(static_cast<Eigen::Index>(i));
    }
    return rows(idx);
  }

  Dataset rows(const std::vector<Eigen::Index>& idx) const {
    Dataset out;
    const auto m = static_cast<Eigen::Index>(idx.size());
    out.locations.reserve(idx.size());
    out.y.resize(m);
    if (latent) out.latent = Eigen::VectorXd(m);
    if (covariates) out.covariates = Eigen::MatrixXd(m, covariates->cols());
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::Index i = idx[k];
      out.locations.push_back(locations[i]);
      out.y[k] = y[i];
      if (latent) (*out.latent)[k] = (*latent)[i];
      if (covariates) out.covariates->row(k) = covariates->row(i);
      out.split.push_back(split[i]);
    }
    return out;
  }
};

inline constexpr std::string_view kDatasetCsvHeader = "x,y,value,latent,split";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes `x,y,value,latent,split` with 17 significant digits; the latent
/// column is empty when unknown.
inline void write_dataset_csv(const Dataset& d, std::ostream& out) {
  d.validate();
  out << kDatasetCsvHeader << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << format_double(d.locations[i].x) << ',' << format_double(d.locations[i].y) << ','
        << format_double(d.y[static_cast<Eigen::Index>(i)]) << ',';
    if (d.latent) out << format_double((*d.latent)[static_cast<Eigen::Index>(i)]);
    out << ',' << to_string(d.split[i]) << '\n';
  }
}

inline void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_dataset_csv(d, out);
}

namespace detail {
inline double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(line, "invalid number '" + s + "' in dataset CSV");
  }
}
}  // namespace detail

/// Reads the format written by write_dataset_csv. The latent column must be
/// either filled on every row or empty on every row.
inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(1, "dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetCsvHeader) {
    throw ConfigError(1, "dataset CSV header must be '" + std::string(kDatasetCsvHeader) + "'");
  }
  Dataset d;
  std::vector<double> ys, lat;
  std::size_t lineno = 1;
  std::optional<bool> with_latent;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw ConfigError(lineno, "expected 5 fields, found " + std::to_string(f.size()));
    d.locations.push_back({detail::parse_number(f[0], lineno), detail::parse_number(f[1], lineno)});
    ys.push_back(detail::parse_number(f[2], lineno));
    const bool has = !f[3].empty();
    if (with_latent && *with_latent != has) {
      throw ConfigError(lineno, "latent column must be filled on all rows or on none");
    }
    with_latent = has;
    if (has) lat.push_back(detail::parse_number(f[3], lineno));
    try {
      d.split.push_back(parse_split(f[4]));
    } catch (const DomainError& e) {
      throw ConfigError(lineno, e.what());
    }
  }
  d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  if (with_latent.value_or(false)) {
    d.latent = Eigen::Map<Eigen::VectorXd>(lat.data(), static_cast<Eigen::Index>(lat.size()));
  }
  d.validate();
  return d;
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open dataset '" + path + "'");
  return read_dataset_csv(in);
}

/// Design matrix [1, x, y].
inline Eigen::MatrixXd intercept_and_coordinates(const Locations& locs) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(locs.size()), 3);
  for (std::size_t i = 0; i < locs.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) << 1.0, locs[i].x, locs[i].y;
  }
  return x;
}

/// Linear mean fitted by ordinary least squares; the GP then models the
/// residuals with zero mean.
struct LinearMean {
  Eigen::VectorXd coefficients;

  static LinearMean fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw DimensionMismatch("linear mean: design rows differ from responses");
    return {x.colPivHouseholderQr().solve(y)};
  }

  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const {
    if (x.cols() != coefficients.size()) throw DimensionMismatch("linear mean: design width mismatch");
    return x * coefficients;
  }
};

}  // namespace gpbench
