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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "gpbench/covariance.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/errors.hpp"
#include "gpbench/exact_gp.hpp"
#include "gpbench/kmeans.hpp"
#include "gpbench/lowrank.hpp"
#include "gpbench/predictive.hpp"
#include "gpbench/tapering.hpp"
#include "gpbench/vecchia.hpp"

namespace gpbench {

enum class MethodKind { exact, vecchia, fitc, fsa, taper };

inline std::string_view to_string(MethodKind k) {
  switch (k) {
    case MethodKind::exact: return "exact";
    case MethodKind::vecchia: return "vecchia";
    case MethodKind::fitc: return "fitc";
    case MethodKind::fsa: return "fsa";
    case MethodKind::taper: return "taper";
  }
  return "exact";
}

inline MethodKind parse_method(std::string_view s) {
  for (auto k : {MethodKind::exact, MethodKind::vecchia, MethodKind::fitc, MethodKind::fsa, MethodKind::taper}) {
    if (to_string(k) == s) return k;
  }
  throw DomainError("unknown method '" + std::string(s) + "'");
}

/// One approximation with its tuning parameters resolved to concrete values.
struct MethodConfig {
  MethodKind kind = MethodKind::exact;
  int neighbors = 20;                 // vecchia
  std::optional<int> predict_neighbors;  // vecchia; defaults to `neighbors`
  std::size_t n_inducing = 0;         // fitc, fsa
  double taper_range = 0.0;           // fsa, taper
  WendlandOrder taper_shape = WendlandOrder::k1;
  std::uint64_t seed = 0;             // ordering / kmeans++ seed
  int threads = 1;

  TaperSpec taper() const { return TaperSpec{taper_range, taper_shape}; }

  void validate(std::size_t n_train) const {
    switch (kind) {
      case MethodKind::exact:
        break;
      case MethodKind::vecchia:
        if (neighbors < 1) throw DomainError("vecchia: neighbors must be >= 1");
        break;
      case MethodKind::fsa:
        taper().validate();
        [[fallthrough]];
      case MethodKind::fitc:
        if (n_inducing < 1 || n_inducing > n_train) {
          throw DomainError("inducing point count must lie in [1, N]");
        }
        break;
      case MethodKind::taper:
        taper().validate();
        break;
    }
  }
};

/// A method bound to one training set. Pattern-only work (Vecchia ordering
/// and neighbors, inducing points, sparse symbolic analyses) is done on
/// first use and reused for every later parameter value.
class MethodModel {
 public:
  MethodModel(MethodConfig cfg, Dataset train) : cfg_(cfg), train_(std::move(train)) {
    cfg_.validate(train_.size());
  }

  const MethodConfig& config() const { return cfg_; }
  const Dataset& train() const { return train_; }
  bool analytic_gradient() const { return cfg_.kind == MethodKind::exact; }

  /// Seconds spent in the last sparse symbolic analysis (0 when reused).
  double last_symbolic_seconds() const { return last_symbolic_seconds_; }

  /// Average nonzeros per row of the last sparse (tapered) matrix, 0 if none.
  double last_nnz_per_row() const { return last_nnz_per_row_; }

  /// Builds pattern-only structures without evaluating anything.
  void prepare(const CovarianceSpec& spec) {
    switch (cfg_.kind) {
      case MethodKind::vecchia:
        if (!vecchia_) vecchia_ = build_vecchia(train_.locations, spec, cfg_.neighbors, cfg_.seed);
        break;
      case MethodKind::fitc:
      case MethodKind::fsa:
        if (!inducing_) inducing_ = kmeanspp(train_.locations, cfg_.n_inducing, cfg_.seed);
        break;
      default:
        break;
    }
  }

  double loglik(const CovarianceSpec& spec) {
    prepare(spec);
    last_symbolic_seconds_ = 0.0;
    switch (cfg_.kind) {
      case MethodKind::exact:
        return loglik_exact(spec, train_);
      case MethodKind::vecchia:
        return vecchia_loglik(*vecchia_, spec, train_, cfg_.threads);
      case MethodKind::fitc:
        return LowRankGp(*inducing_, std::nullopt, spec, train_, nullptr, cfg_.threads).loglik();
      case MethodKind::fsa: {
        const LowRankGp gp(*inducing_, cfg_.taper(), spec, train_, symbolic_, cfg_.threads);
        symbolic_ = gp.symbolic();
        last_nnz_per_row_ = gp.residual_nnz_per_row();
        return gp.loglik();
      }
      case MethodKind::taper: {
        const TaperedGp gp(cfg_.taper(), spec, train_, symbolic_, cfg_.threads);
        last_symbolic_seconds_ = gp.timings().symbolic_seconds;
        symbolic_ = gp.symbolic();
        last_nnz_per_row_ = gp.nnz_per_row();
        return gp.loglik();
      }
    }
    return 0.0;
  }

  LoglikGradient loglik_and_gradient(const CovarianceSpec& spec) const {
    if (!analytic_gradient()) throw DomainError("analytic gradient only available for the exact method");
    return loglik_and_grad_exact(spec, train_);
  }

  PredictiveDistribution predict(const CovarianceSpec& spec, std::span<const Point> test, Flavor flavor) {
    prepare(spec);
    last_symbolic_seconds_ = 0.0;
    switch (cfg_.kind) {
      case MethodKind::exact:
        return predict_exact(spec, train_, test, flavor);
      case MethodKind::vecchia:
        return vecchia_predict(*vecchia_, spec, train_, test, flavor,
                               cfg_.predict_neighbors.value_or(cfg_.neighbors), cfg_.threads);
      case MethodKind::fitc:
        return LowRankGp(*inducing_, std::nullopt, spec, train_, nullptr, cfg_.threads).predict(test, flavor);
      case MethodKind::fsa: {
        const LowRankGp gp(*inducing_, cfg_.taper(), spec, train_, symbolic_, cfg_.threads);
        symbolic_ = gp.symbolic();
        last_nnz_per_row_ = gp.residual_nnz_per_row();
        return gp.predict(test, flavor);
      }
      case MethodKind::taper: {
        const TaperedGp gp(cfg_.taper(), spec, train_, symbolic_, cfg_.threads);
        last_symbolic_seconds_ = gp.timings().symbolic_seconds;
        symbolic_ = gp.symbolic();
        last_nnz_per_row_ = gp.nnz_per_row();
        return gp.predict(test, flavor);
      }
    }
    return {};
  }

 private:
  MethodConfig cfg_;
  Dataset train_;
  std::optional<VecchiaStructure> vecchia_;
  std::optional<Locations> inducing_;
  SymbolicPtr symbolic_;
  double last_symbolic_seconds_ = 0.0;
  double last_nnz_per_row_ = 0.0;
};

}  // namespace gpbench
