#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace omnitraj {

/// Flat `key = value` configuration, one entry per line. Blank lines and
/// lines starting with '#' are ignored. Keys are kept sorted so that
/// serialization is canonical.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, std::int64_t value) { values_[key] = std::to_string(value); }
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, const char* value) { values_[key] = value; }

  // Copies every entry of `other` over this config.
  void merge(const KeyValueConfig& other);

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Round-trip-exact decimal rendering of a double.
std::string format_double(double value);

}  // namespace omnitraj
