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

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace gpbench {

// Warnings (jitter retries, variance clamping) go through a replaceable sink.
// The default writes to stderr.
using LogSink = std::function<void(const std::string&)>;

namespace detail {
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
inline LogSink& log_sink() {
  static LogSink sink = [](const std::string& msg) {
    std::cerr << "[gpbench] warning: " << msg << '\n';
  };
  return sink;
}
}  // namespace detail

inline LogSink set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(detail::log_mutex());
  return std::exchange(detail::log_sink(), std::move(sink));
}

inline void log_warning(const std::string& msg) {
  std::lock_guard<std::mutex> lock(detail::log_mutex());
  if (detail::log_sink()) detail::log_sink()(msg);
}

}  // namespace gpbench
