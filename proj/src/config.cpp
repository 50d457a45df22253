#include "capflow/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace capflow {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

Config Config::from_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    if (cfg.kv_.count(key))
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    cfg.kv_[key] = val;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

std::string Config::str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end())
    throw ConfigError("missing required config field: " + key);
  return it->second;
}

std::string Config::str(const std::string& key,
                        const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double Config::num(const std::string& key) const {
  const std::string v = str(key);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("config field " + key + ": not a number: '" + v + "'");
  return x;
}

double Config::num(const std::string& key, double fallback) const {
  return has(key) ? num(key) : fallback;
}

int Config::integer(const std::string& key) const {
  const double x = num(key);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw ConfigError("config field " + key + ": not an integer: '" +
                      str(key) + "'");
  return i;
}

int Config::integer(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : fallback;
}

void Config::require(const std::vector<std::string>& keys) const {
  std::string missing;
  for (const auto& k : keys)
    if (!has(k)) missing += (missing.empty() ? "" : ", ") + k;
  if (!missing.empty())
    throw ConfigError("missing required config field(s): " + missing);
}

}  // namespace capflow
