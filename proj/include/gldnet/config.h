// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gldnet {

using KeyValues = std::map<std::string, std::string>;

// Flat "section.key = value" lines; '#' starts a comment. Throws ConfigError
// naming `origin` and the line on malformed or duplicate keys.
KeyValues parse_key_values(std::string_view text, const std::string& origin = "<config>");
KeyValues read_config_file(const std::string& path);
std::string format_key_values(const KeyValues& kv);

// Typed, consuming access to a KeyValues map. Every key must be read by some
// consumer; reject_unknown() reports the rest.
class ConfigReader {
 public:
  explicit ConfigReader(KeyValues kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::optional<std::string> take(const std::string& key);

  std::string get_string(const std::string& key, const std::string& fallback);
  std::size_t get_size(const std::string& key, std::size_t fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback);
  // Value must be one of `choices`.
  std::string get_choice(const std::string& key, const std::string& fallback,
                         const std::vector<std::string>& choices);

  void reject_unknown() const;

 private:
  KeyValues kv_;
  std::set<std::string> used_;
};

std::string join_sizes(const std::vector<std::size_t>& v);

}  // namespace gldnet
