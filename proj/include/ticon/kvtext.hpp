// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ticon {

/// Sectioned key=value text:
///
///   # comment
///   [section]
///   key = value
///
/// Keys are addressed as "section.key" (keys before any section header have
/// no prefix). Rendering is canonical: sections in first-use order, keys in
/// insertion order, "key=value" with no padding. Every getter marks its key
/// as consumed so callers can reject unknown keys afterwards.
class KvText {
 public:
  /// Throws ConfigError naming the line for malformed input or duplicates.
  static KvText parse(std::string_view text);

  void set(const std::string& key, std::string value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::uint64_t>(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  /// Keys of the form "<prefix>.<rest>" in insertion order, returned as rest.
  std::vector<std::string> keys_under(const std::string& prefix) const;
  /// Throws ConfigError naming the first key no getter has read.
  void reject_unconsumed() const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  std::string render() const;

 private:
  const std::string* find(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> entries_;
  mutable std::set<std::string> consumed_;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace ticon
