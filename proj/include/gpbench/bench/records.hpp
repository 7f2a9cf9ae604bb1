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
#include <ostream>
#include <string>
#include <string_view>

#include "gpbench/dataset.hpp"

namespace gpbench::bench {

inline constexpr std::string_view kRecordCsvHeader =
    "method,tier,tier_value,task,metric,value,wall_seconds,rep,seed,threads";

struct Record {
  std::string method;
  int tier = 0;
  double tier_value = 0.0;
  std::string task;
  std::string metric;
  double value = 0.0;
  double wall_seconds = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
  int threads = 1;
};

inline void write_record(std::ostream& out, const Record& r) {
  out << r.method << ',' << r.tier << ',' << format_double(r.tier_value) << ',' << r.task << ',' << r.metric
      << ',' << format_double(r.value) << ',' << format_double(r.wall_seconds) << ',' << r.rep << ',' << r.seed
      << ',' << r.threads << '\n';
  out.flush();
}

}  // namespace gpbench::bench
