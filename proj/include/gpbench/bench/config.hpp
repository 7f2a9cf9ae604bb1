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

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpbench/errors.hpp"

namespace gpbench::bench {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool valid_key(std::string_view k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const char c = k[i];
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '.';
    if (!ok) return false;
    if (c == '.' && k[i + 1] == '.') return false;
  }
  return true;
}

}  // namespace detail

/// Flat `key = value` configuration. Keys may carry dotted section
/// prefixes (`data.n`). `#` starts a comment; blank lines are ignored.
/// Every lookup marks the key as used so leftovers can be reported.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string_view line = raw;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError(lineno, "expected 'key = value'");
      const auto key = detail::trim(line.substr(0, eq));
      const auto value = detail::trim(line.substr(eq + 1));
      if (!detail::valid_key(key)) throw ConfigError(lineno, "invalid key '" + std::string(key) + "'");
      if (value.empty()) throw ConfigError(lineno, "empty value for '" + std::string(key) + "'");
      auto [it, inserted] = cfg.entries_.try_emplace(std::string(key), Entry{std::string(value), lineno});
      if (!inserted) {
        throw ConfigError(lineno, "duplicate key '" + std::string(key) + "' (first set on line " +
                                      std::to_string(it->second.line) + ")");
      }
    }
    return cfg;
  }

  static ConfigFile parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config '" + path + "'");
    return parse(in);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::size_t size() const { return entries_.size(); }

  /// Line on which `key` was set, 0 when absent.
  std::size_t line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(key);
    return it->second.value;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
  }

  std::string require_string(const std::string& key) const {
    auto v = get(key);
    if (!v) throw ConfigError(0, "missing required key '" + key + "'");
    return *v;
  }

  std::optional<double> get_double(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    return to_double(*v, line_of(key), key);
  }

  double get_double(const std::string& key, double fallback) const { return get_double(key).value_or(fallback); }

  std::optional<long long> get_int(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    return to_int(*v, line_of(key), key);
  }

  long long get_int(const std::string& key, long long fallback) const { return get_int(key).value_or(fallback); }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ConfigError(line_of(key), "'" + key + "' expects true or false, got '" + *v + "'");
  }

  /// Comma separated list; empty items are rejected.
  std::optional<std::vector<std::string>> get_list(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    std::vector<std::string> out;
    std::string_view rest = *v;
    for (;;) {
      const auto comma = rest.find(',');
      const auto item = detail::trim(rest.substr(0, comma));
      if (item.empty()) throw ConfigError(line_of(key), "empty list item in '" + key + "'");
      out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

  std::optional<std::vector<double>> get_double_list(const std::string& key) const {
    const auto items = get_list(key);
    if (!items) return std::nullopt;
    std::vector<double> out;
    for (const auto& s : *items) out.push_back(to_double(s, line_of(key), key));
    return out;
  }

  std::optional<std::vector<long long>> get_int_list(const std::string& key) const {
    const auto items = get_list(key);
    if (!items) return std::nullopt;
    std::vector<long long> out;
    for (const auto& s : *items) out.push_back(to_int(s, line_of(key), key));
    return out;
  }

  /// Throws on the first key that no lookup has touched.
  void reject_unused() const {
    const Entry* first = nullptr;
    std::string name;
    for (const auto& [k, e] : entries_) {
      if (used_.count(k)) continue;
      if (!first || e.line < first->line) {
        first = &e;
        name = k;
      }
    }
    if (first) throw ConfigError(first->line, "unknown key '" + name + "'");
  }

 private:
  static double to_double(const std::string& s, std::size_t line, const std::string& key) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ConfigError(line, "'" + key + "' expects a number, got '" + s + "'");
    }
    return v;
  }

  static long long to_int(const std::string& s, std::size_t line, const std::string& key) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw ConfigError(line, "'" + key + "' expects an integer, got '" + s + "'");
    }
    return v;
  }

  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace gpbench::bench
