#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ymmb {

/// Independent generator for a named purpose ("survey", "h-choice", "bank", "shooting", ...).
std::mt19937_64 substream(std::uint64_t root, const std::string& name);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line) : std::runtime_error(format(what, line)), line_(line) {}
  int line() const { return line_; }

 private:
  static std::string format(const std::string& what, int line) {
    return line > 0 ? "line " + std::to_string(line) + ": " + what : what;
  }
  int line_;
};

using ConfigValue = std::variant<bool, long long, double, std::string>;

/// Flat `key = value` file with optional [section] headers (keys become section.key),
/// '#' comments, quoted strings, integers, floats and booleans.
class Config {
 public:
  /// Parses text; keys outside `allowed` are rejected with the offending line.
  static Config parse(const std::string& text, const std::vector<std::string>& allowed);
  static Config load(const std::string& path, const std::vector<std::string>& allowed);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  const std::map<std::string, ConfigValue>& values() const { return values_; }
  /// Source line of a key, 0 if absent.
  int line(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
  }

 private:
  std::map<std::string, ConfigValue> values_;
  std::map<std::string, int> lines_;
};

/// Keys accepted by the pipeline configuration.
const std::vector<std::string>& pipeline_config_keys();

}  // namespace ymmb
