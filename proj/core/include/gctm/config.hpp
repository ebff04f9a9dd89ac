#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gctm {

std::uint64_t fnv1a64(std::string_view data);

// Flat "key = value" configuration with '#' comments. CLI flags override
// file values via apply_override("key=value").
class Config {
 public:
  Config() = default;

  static Config load(const std::string& path);
  static Config from_string(const std::string& text, const std::string& origin = "<inline>");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void apply_override(const std::string& key_eq_value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  // Accepts plain decimals plus the "e^x" hyperparameter notation.
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          std::vector<std::uint64_t> fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  // Sorted "key=value" lines limited to keys with one of the given prefixes
  // (all keys when empty); the basis for stage hashing.
  std::string canonical_string(const std::vector<std::string>& prefixes = {}) const;
  std::uint64_t hash(const std::vector<std::string>& prefixes = {}) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace gctm
