// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/kvtext.hpp"

#include <charconv>
#include <cstdio>
#include <map>

#include "ticon/errors.hpp"

namespace ticon {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) break;
  }
  return buf;
}

KvText KvText::parse(std::string_view text) {
  KvText kv;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = std::string(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.find(full)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
    kv.entries_.emplace_back(full, std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

void KvText::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

void KvText::set(const std::string& key, double value) { set(key, format_double(value)); }
void KvText::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

const std::string* KvText::find(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return &v;
  return nullptr;
}

bool KvText::has(const std::string& key) const { return find(key) != nullptr; }

const std::string& KvText::get(const std::string& key) const {
  const std::string* v = find(key);
  if (!v) throw ConfigError("missing config key '" + key + "'");
  consumed_.insert(key);
  return *v;
}

std::string KvText::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KvText::get_double(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
  }
  return v;
}

double KvText::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t KvText::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  int base = 10;
  std::size_t skip = 0;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    skip = 2;
  }
  const auto [p, ec] = std::from_chars(s.data() + skip, s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size() || s.size() == skip) {
    throw ConfigError("config key '" + key + "': '" + s + "' is not a non-negative integer");
  }
  return v;
}

std::uint64_t KvText::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}

bool KvText::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config key '" + key + "': '" + s + "' is not a boolean");
}

bool KvText::get_bool_or(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> KvText::keys_under(const std::string& prefix) const {
  std::vector<std::string> out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : entries_)
    if (k.rfind(p, 0) == 0) out.push_back(k.substr(p.size()));
  return out;
}

void KvText::reject_unconsumed() const {
  for (const auto& [k, v] : entries_)
    if (!consumed_.count(k)) throw ConfigError("unknown config key '" + k + "'");
}

std::string KvText::render() const {
  // Group by section (text before the first '.') in first-use order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const std::pair<std::string, std::string>*>> groups;
  for (const auto& e : entries_) {
    const auto dot = e.first.find('.');
    const std::string sec = dot == std::string::npos ? "" : e.first.substr(0, dot);
    if (!groups.count(sec)) order.push_back(sec);
    groups[sec].push_back(&e);
  }
  std::string out;
  for (const auto& sec : order) {
    if (!sec.empty()) {
      if (!out.empty()) out += '\n';
      out += "[" + sec + "]\n";
    }
    for (const auto* e : groups[sec]) {
      out += sec.empty() ? e->first : e->first.substr(sec.size() + 1);
      out += "=" + e->second + "\n";
    }
  }
  return out;
}

}  // namespace ticon
