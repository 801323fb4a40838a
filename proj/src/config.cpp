#include "ymmb/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ymmb {

std::mt19937_64 substream(std::uint64_t root, const std::string& name) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

ConfigValue parse_value(const std::string& raw, int line) {
  if (raw.empty()) throw ConfigError("missing value", line);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ConfigError("unterminated string", line);
    return raw.substr(1, raw.size() - 2);
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  try {
    std::size_t pos = 0;
    if (raw.find_first_of(".eE") == std::string::npos || raw.find("0x") == 0) {
      const long long v = std::stoll(raw, &pos, 0);
      if (pos == raw.size()) return v;
    }
    pos = 0;
    const double d = std::stod(raw, &pos);
    if (pos == raw.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("cannot parse value '" + raw + "'", line);
}

}  // namespace

Config Config::parse(const std::string& text, const std::vector<std::string>& allowed) {
  Config c;
  std::istringstream in(text);
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", n);
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) throw ConfigError("invalid section name '" + section + "'", n);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", n);
    std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'", n);
    if (!section.empty()) key = section + "." + key;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "'", n);
    if (c.values_.count(key)) throw ConfigError("duplicate key '" + key + "'", n);
    c.values_[key] = parse_value(trim(line.substr(eq + 1)), n);
    c.lines_[key] = n;
  }
  return c;
}

Config Config::load(const std::string& path, const std::vector<std::string>& allowed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), allowed);
}

double Config::number(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto d = std::get_if<double>(&it->second)) return *d;
  if (auto i = std::get_if<long long>(&it->second)) return static_cast<double>(*i);
  throw ConfigError("'" + key + "' must be a number", lines_.at(key));
}

long long Config::integer(const std::string& key, long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto i = std::get_if<long long>(&it->second)) return *i;
  throw ConfigError("'" + key + "' must be an integer", lines_.at(key));
}

bool Config::boolean(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto b = std::get_if<bool>(&it->second)) return *b;
  throw ConfigError("'" + key + "' must be true or false", lines_.at(key));
}

std::string Config::string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError("'" + key + "' must be a string", lines_.at(key));
}

const std::vector<std::string>& pipeline_config_keys() {
  static const std::vector<std::string> keys{
      "seed",
      "backend",
      "survey.starts",
      "survey.ascent",
      "survey.saddle_search",
      "survey.cluster_tol",
      "flow.tol_g",
      "flow.s_max",
      "flow.h_initial",
      "flow.h_max",
      "flow.max_steps",
      "cascade.eps_shoot",
      "cascade.delta_match",
      "cascade.eps_h",
      "cascade.rho",
      "cascade.sweep_samples",
      "h.attempts",
      "h.starts",
  };
  return keys;
}

}  // namespace ymmb
