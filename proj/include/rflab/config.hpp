#pragma once

// Flat key-value run configuration.
//
// A config file is a single JSON object whose values are scalars (number,
// string, bool) or arrays of numbers. Each command declares its schema as a
// table of keys with default values; a file may override any subset of them,
// and any key outside the schema is rejected. The value type of every key is
// fixed by its default.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rflab {

struct ConfigKey {
  std::string name;
  nlohmann::json default_value;
  std::string doc;
};

using ConfigSchema = std::vector<ConfigKey>;

class RunConfig {
 public:
  /// All defaults of `schema`.
  explicit RunConfig(const ConfigSchema& schema);

  /// Defaults overridden by the keys in `doc` (a JSON object).
  static RunConfig from_json(const ConfigSchema& schema, const nlohmann::json& doc);
  static RunConfig from_file(const ConfigSchema& schema, const std::filesystem::path& path);

  /// Replace one value; the key must exist and the type must match.
  void set(const std::string& key, const nlohmann::json& value);

  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  const nlohmann::json& values() const { return values_; }

  /// Writes the fully resolved config (every key, sorted) as
  /// `<dir>/config.resolved.json`.
  std::filesystem::path write_resolved(const std::filesystem::path& dir) const;

 private:
  const nlohmann::json& at(const std::string& key) const;

  nlohmann::json values_;
};

}  // namespace rflab
