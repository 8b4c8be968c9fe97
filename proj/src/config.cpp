#include "rflab/config.hpp"

#include "rflab/errors.hpp"

#include <fstream>

namespace rflab {

namespace {

using nlohmann::json;

bool is_integer(const json& v) { return v.is_number_integer(); }

// True when `value` may replace `def` (same kind; integers may stand in for
// reals, and reals with integral value may stand in for integers).
bool compatible(const json& def, const json& value) {
  if (def.is_boolean()) return value.is_boolean();
  if (def.is_string()) return value.is_string();
  if (def.is_number_integer()) return is_integer(value) && (value.is_number_unsigned() || value.get<std::int64_t>() >= 0);
  if (def.is_number()) return value.is_number();
  if (def.is_array()) {
    if (!value.is_array()) return false;
    if (!def.empty() && def.front().is_string()) {
      for (const auto& e : value) {
        if (!e.is_string()) return false;
      }
      return true;
    }
    const bool ints = !def.empty() && def.front().is_number_integer();
    for (const auto& e : value) {
      if (ints ? !(is_integer(e) && (e.is_number_unsigned() || e.get<std::int64_t>() >= 0)) : !e.is_number()) {
        return false;
      }
    }
    return true;
  }
  return false;
}

std::string kind(const json& def) {
  if (def.is_boolean()) return "bool";
  if (def.is_string()) return "string";
  if (def.is_number_integer()) return "non-negative integer";
  if (def.is_number()) return "number";
  if (def.is_array()) {
    if (!def.empty() && def.front().is_string()) return "array of strings";
    return !def.empty() && def.front().is_number_integer() ? "array of integers" : "array of numbers";
  }
  return "value";
}

}  // namespace

RunConfig::RunConfig(const ConfigSchema& schema) : values_(json::object()) {
  for (const auto& k : schema) {
    if (values_.contains(k.name)) throw ConfigError("schema declares '" + k.name + "' twice");
    values_[k.name] = k.default_value;
  }
}

RunConfig RunConfig::from_json(const ConfigSchema& schema, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object of key/value pairs");
  RunConfig cfg(schema);
  for (const auto& [key, value] : doc.items()) cfg.set(key, value);
  return cfg;
}

RunConfig RunConfig::from_file(const ConfigSchema& schema, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(schema, doc);
}

void RunConfig::set(const std::string& key, const json& value) {
  if (!values_.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  const json& def = values_[key];
  if (!compatible(def, value)) {
    throw ConfigError("config key '" + key + "' expects " + kind(def) + ", got " + value.dump());
  }
  values_[key] = value;
}

const json& RunConfig::at(const std::string& key) const {
  if (!values_.contains(key)) throw ConfigError("config key '" + key + "' is not part of this command's schema");
  return values_.at(key);
}

double RunConfig::get_double(const std::string& key) const { return at(key).get<double>(); }
std::uint64_t RunConfig::get_u64(const std::string& key) const { return at(key).get<std::uint64_t>(); }
std::size_t RunConfig::get_size(const std::string& key) const { return at(key).get<std::size_t>(); }
std::string RunConfig::get_string(const std::string& key) const { return at(key).get<std::string>(); }
bool RunConfig::get_bool(const std::string& key) const { return at(key).get<bool>(); }
std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  return at(key).get<std::vector<double>>();
}
std::vector<std::size_t> RunConfig::get_sizes(const std::string& key) const {
  return at(key).get<std::vector<std::size_t>>();
}
std::vector<std::string> RunConfig::get_strings(const std::string& key) const {
  return at(key).get<std::vector<std::string>>();
}

std::filesystem::path RunConfig::write_resolved(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto path = dir / "config.resolved.json";
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  // nlohmann::json prints reals in shortest round-trip form, so reloading
  // this file reproduces every value exactly.
  out << values_.dump(2) << '\n';
  return path;
}

}  // namespace rflab
