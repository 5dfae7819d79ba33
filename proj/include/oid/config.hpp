#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oid {

// Flat `key = value` text configuration. Lines starting with '#' and blank
// lines are ignored; list values are comma separated. Keys are dotted
// (`model.shells`, `design.max_inputs`).
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text,
                              const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  // Keys that no getter has asked for.
  std::vector<std::string> unused_keys() const;
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

 private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string origin_;
};

}  // namespace oid
