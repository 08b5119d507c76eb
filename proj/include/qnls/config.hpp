#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnls/model.hpp"

namespace qnls {

/// Flat key/value store read from INI-style text:
///
///   [model]
///   h.kind = powersum
///   f1.terms = [[1, 3]]
///
/// gives the key "model.h.kind". Values are kept as text; list values use
/// JSON array syntax.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  const std::string& raw(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  /// "key=value"
  void apply_override(const std::string& assignment);
  /// Set one element of a JSON-array value, e.g. "model.f1.terms[0][1]".
  void set_path(const std::string& path, const std::string& value);
  bool path_exists(const std::string& path) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<PowerTerm> get_terms(const std::string& key) const;

  /// Throws ConfigError listing every missing key.
  void require(const std::vector<std::string>& keys) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  std::string to_ini() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// model.h.kind, model.h.terms, model.f1.terms, model.f2.terms, model.f_exp.terms
NonlinearityModel model_from_config(const Config& cfg);

}  // namespace qnls
