// key = value configuration files.
#pragma once

#include "seqot/core.hpp"
#include "seqot/text.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <string>

namespace seqot {

using ConfigMap = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment, blank lines are ignored.
inline ConfigMap parse_config(std::istream& in, const std::string& source = "<config>") {
  ConfigMap out;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError(source + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError(source + ":" + std::to_string(line_no) + ": empty key");
    out[std::move(key)] = trim(line.substr(eq + 1));
  }
  return out;
}

inline ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open config file");
  return parse_config(in, path);
}

inline double config_double(const ConfigMap& m, const std::string& key, double fallback) {
  auto it = m.find(key);
  if (it == m.end()) return fallback;
  double v = 0.0;
  if (!detail::parse_double(it->second, v)) throw InputError("config: '" + key + "' is not a number: " + it->second);
  return v;
}

inline long long config_int(const ConfigMap& m, const std::string& key, long long fallback) {
  auto it = m.find(key);
  if (it == m.end()) return fallback;
  long long v = 0;
  if (!detail::parse_int(it->second, v)) throw InputError("config: '" + key + "' is not an integer: " + it->second);
  return v;
}

inline bool config_bool(const ConfigMap& m, const std::string& key, bool fallback) {
  auto it = m.find(key);
  if (it == m.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InputError("config: '" + key + "' is not a boolean: " + v);
}

inline std::string config_string(const ConfigMap& m, const std::string& key, const std::string& fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

}  // namespace seqot
