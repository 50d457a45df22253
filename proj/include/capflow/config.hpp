#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace capflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value configuration with dotted section names
/// (grid.Nx=128, params.sigma=1.0, study.name=taylor, seed=7).
/// '#' starts a comment; blank lines are ignored; later assignments to the
/// same key are an error.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_text(const std::string& text);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  /// Required lookups throw ConfigError naming the missing field.
  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;

  /// Throws ConfigError listing every missing key.
  void require(const std::vector<std::string>& keys) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace capflow
