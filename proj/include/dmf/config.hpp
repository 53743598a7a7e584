#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dmf/model.hpp"

namespace dmf {

enum class KeyType { integer, real, boolean, text };

struct KeySpec {
  std::string key;
  KeyType type;
  std::string default_value;
};

/// Every recognized key with its type and default.
const std::vector<KeySpec>& config_schema();

/// Flat "dotted.key = value" configuration. Lines starting with # are
/// comments; unknown keys and ill-typed values are rejected with the source
/// line (files) or the offending assignment (overrides).
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::istream& in, const std::string& source = "<config>");
  static RunConfig load_file(const std::string& path);

  /// Throws InvalidInput "<key>: ..." for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// "key=value".
  void apply_override(const std::string& assignment);

  const std::string& text(const std::string& key) const;
  long long integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  /// Comma-separated reals; empty text gives an empty list.
  std::vector<double> reals(const std::string& key) const;
  /// ';'-separated items, trimmed, empties dropped.
  std::vector<std::string> items(const std::string& key) const;
  /// ';'-separated groups of comma-separated reals.
  std::vector<std::vector<double>> real_groups(const std::string& key) const;

  KeyType type_of(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// The model block, validated.
  ModelSpec model() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dmf
