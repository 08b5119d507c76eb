#include "qnls/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "qnls/error.hpp"

namespace qnls {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

json parse_json_value(const std::string& key, const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: cannot parse '{}' ({})", key, text, e.what()));
  }
}

double finite_number(const std::string& key, const json& v) {
  if (!v.is_number()) throw ConfigError(fmt::format("{}: expected a number, got {}", key, v.dump()));
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(fmt::format("{}: value must be finite", key));
  return d;
}

// "model.f1.terms[0][1]" -> ("model.f1.terms", {0, 1})
std::pair<std::string, std::vector<std::size_t>> split_path(const std::string& path) {
  const auto bracket = path.find('[');
  if (bracket == std::string::npos) return {path, {}};
  std::vector<std::size_t> idx;
  std::size_t pos = bracket;
  while (pos < path.size()) {
    if (path[pos] != '[') throw ConfigError(fmt::format("malformed parameter path '{}'", path));
    const auto close = path.find(']', pos);
    if (close == std::string::npos) throw ConfigError(fmt::format("malformed parameter path '{}'", path));
    const auto digits = path.substr(pos + 1, close - pos - 1);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) {
      throw ConfigError(fmt::format("malformed index in parameter path '{}'", path));
    }
    idx.push_back(std::stoul(digits));
    pos = close + 1;
  }
  return {path.substr(0, bracket), idx};
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream is(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("{}:{}: unterminated section header", origin, lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}: expected key = value", origin, lineno));
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", origin, lineno));
    cfg.entries_[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path.string());
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& Config::raw(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(fmt::format("missing key: {}", key));
  return it->second;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(fmt::format("override '{}' is not key=value", assignment));
  const auto key = trim(assignment.substr(0, eq));
  const auto value = trim(assignment.substr(eq + 1));
  if (key.find('[') != std::string::npos) {
    set_path(key, value);
  } else {
    set(key, value);
  }
}

bool Config::path_exists(const std::string& path) const {
  const auto [key, idx] = split_path(path);
  if (!has(key)) return false;
  if (idx.empty()) return true;
  json node;
  try {
    node = json::parse(raw(key));
  } catch (const json::exception&) {
    return false;
  }
  for (auto i : idx) {
    if (!node.is_array() || i >= node.size()) return false;
    node = node[i];
  }
  return true;
}

void Config::set_path(const std::string& path, const std::string& value) {
  const auto [key, idx] = split_path(path);
  if (idx.empty()) {
    set(key, value);
    return;
  }
  if (!path_exists(path)) throw ConfigError(fmt::format("parameter path '{}' does not exist", path));
  json root = json::parse(raw(key));
  json* node = &root;
  for (auto i : idx) node = &(*node)[i];
  *node = parse_json_value(path, value);
  set(key, root.dump());
}

std::string Config::get_string(const std::string& key) const {
  auto v = raw(key);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const auto& text = raw(key);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, text));
  }
  if (used != text.size()) throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, text));
  if (!std::isfinite(v)) throw ConfigError(fmt::format("{}: value must be finite", key));
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
  if (!has(key) || lower(raw(key)) == "none" || raw(key).empty()) return std::nullopt;
  return get_double(key);
}

long Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (v != std::floor(v)) throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, raw(key)));
  return static_cast<long>(v);
}

long Config::get_int(const std::string& key, long fallback) const { return has(key) ? get_int(key) : fallback; }

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = lower(raw(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, raw(key)));
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const auto v = parse_json_value(key, raw(key));
  if (!v.is_array()) throw ConfigError(fmt::format("{}: expected a list", key));
  std::vector<double> out;
  for (const auto& x : v) out.push_back(finite_number(key, x));
  return out;
}

std::vector<PowerTerm> Config::get_terms(const std::string& key) const {
  if (!has(key)) return {};
  const auto v = parse_json_value(key, raw(key));
  if (!v.is_array()) throw ConfigError(fmt::format("{}: expected [[coeff, exponent], ...]", key));
  std::vector<PowerTerm> out;
  for (const auto& t : v) {
    if (!t.is_array() || t.size() != 2) throw ConfigError(fmt::format("{}: each term must be [coeff, exponent]", key));
    out.push_back({finite_number(key, t[0]), finite_number(key, t[1])});
  }
  return out;
}

void Config::require(const std::vector<std::string>& keys) const {
  std::vector<std::string> missing;
  for (const auto& k : keys) {
    if (!has(k)) missing.push_back(k);
  }
  if (missing.empty()) return;
  std::string list;
  for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
  throw ConfigError(fmt::format("missing required keys: {}", list));
}

std::string Config::to_ini() const {
  // group by first path component so the output reads back identically
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [k, v] : entries_) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      sections[""].emplace_back(k, v);
    } else {
      sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
    }
  }
  std::string out;
  for (const auto& [name, kvs] : sections) {
    if (!name.empty()) out += fmt::format("[{}]\n", name);
    for (const auto& [k, v] : kvs) out += fmt::format("{} = {}\n", k, v);
    out += "\n";
  }
  return out;
}

NonlinearityModel model_from_config(const Config& cfg) {
  NonlinearityModel m;
  const auto kind = lower(cfg.get_string("model.h.kind", "zero"));
  const auto h_terms = cfg.get_terms("model.h.terms");
  if (kind == "zero") {
    m.h_kind = HKind::Zero;
  } else if (kind == "powersum" || kind == "power") {
    m.h_kind = HKind::PowerSum;
  } else if (kind == "exponential" || kind == "exp") {
    m.h_kind = HKind::Exponential;
  } else if (kind == "rational") {
    m.h_kind = HKind::Rational;
  } else {
    throw ConfigError(fmt::format("model.h.kind: unknown family '{}'", kind));
  }
  m.h_terms = h_terms;
  m.f1_terms = cfg.get_terms("model.f1.terms");
  m.f2_terms = cfg.get_terms("model.f2.terms");
  if (cfg.has("model.f_exp.terms")) {
    const auto v = parse_json_value("model.f_exp.terms", cfg.raw("model.f_exp.terms"));
    if (!v.is_array()) throw ConfigError("model.f_exp.terms: expected [[sign, a, k], ...]");
    for (const auto& t : v) {
      if (!t.is_array() || t.size() != 3) throw ConfigError("model.f_exp.terms: each term must be [sign, a, k]");
      const double sign = finite_number("model.f_exp.terms", t[0]);
      m.f_exp_terms.push_back({sign >= 0 ? 1 : -1, finite_number("model.f_exp.terms", t[1]),
                               finite_number("model.f_exp.terms", t[2])});
    }
  }
  m.validate();
  return m;
}

}  // namespace qnls
