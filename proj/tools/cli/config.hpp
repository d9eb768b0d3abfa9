#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cage::cli {

/// Flat `key = value` configuration. `#` starts a comment. Unknown keys and
/// duplicate keys are rejected when the file is parsed.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source);
  static Config load(const std::string& path);

  const std::string& source() const { return source_; }
  /// Directory containing the config file; relative paths resolve against it.
  const std::string& base_dir() const { return base_dir_; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string str(const std::string& key, const std::string& fallback) const;
  std::string required(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
  std::optional<double> maybe_real(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> reals(const std::string& key) const;
  /// Resolved path, or empty when the key is absent.
  std::string path(const std::string& key) const;

  /// Canonical `key=value` lines for the given keys (absent keys skipped).
  std::string canonical(const std::vector<std::string>& keys) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  void set(const std::string& key, const std::string& value);

  static const std::vector<std::string>& known_keys();

 private:
  std::string source_;
  std::string base_dir_;
  std::map<std::string, std::string> values_;
};

}  // namespace cage::cli
