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

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "gpbench/errors.hpp"

namespace gpbench::bench {

// Tuning tiers per method, coarsest first.
struct TierPreset {
  std::string_view name;
  std::string_view description;
  std::vector<int> vecchia_neighbors;
  std::vector<double> taper_nnz;
  std::vector<int> fitc_inducing;
  std::vector<int> fsa_inducing;
  std::vector<double> fsa_nnz;
};

inline const std::vector<TierPreset>& tier_presets() {
  static const std::vector<TierPreset> presets = {
      {"table1", "simulated, effective range 0.2, N = 10,000",
       {5, 10, 20, 40, 80}, {11, 30, 60, 130, 263}, {47, 254, 500, 950, 1500},
       {10, 24, 120, 300, 450}, {5, 8, 28, 100, 150}},
      {"table2", "simulated, effective range 0.2, N = 100,000",
       {5, 10, 20, 40, 80}, {8, 17, 22, 40, 111}, {20, 200, 275, 900, 2000},
       {26, 91, 122, 250, 650}, {6, 11, 15, 27, 76}},
      {"table3", "house prices",
       {5, 10, 20, 40, 80}, {32, 100, 200, 512, 739}, {220, 500, 1000, 2200, 3700},
       {106, 252, 444, 1050, 1900}, {17, 36, 71, 256, 420}},
      {"table4", "Laegern canopy height",
       {5, 10, 20, 40, 80}, {7, 10, 16, 23, 53}, {400, 760, 1100, 1400, 2200},
       {180, 450, 775, 850, 1100}, {1, 7, 10, 16, 29}},
      {"table5", "MODIS 2016",
       {5, 10, 20, 40, 80}, {8, 16, 34, 64, 114}, {380, 800, 1400, 2000, 3000},
       {250, 400, 580, 800, 1100}, {2, 10, 17, 25, 48}},
      {"table6", "MODIS 2023",
       {5, 10, 20, 40, 80}, {4, 8, 10, 14, 31}, {338, 425, 690, 1200, 2200},
       {5, 180, 345, 625, 1100}, {1, 1, 2, 8, 16}},
      {"table7", "simulated, anisotropic, N = 100,000",
       {5, 10, 20, 40, 80}, {8, 17, 22, 40, 111}, {20, 200, 275, 900, 2000},
       {26, 91, 122, 250, 650}, {6, 11, 15, 27, 76}},
  };
  return presets;
}

inline const TierPreset& tier_preset(std::string_view name) {
  for (const auto& p : tier_presets()) {
    if (p.name == name) return p;
  }
  throw DomainError("unknown tier preset '" + std::string(name) + "'");
}

}  // namespace gpbench::bench
