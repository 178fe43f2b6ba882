#pragma once

// Plain-text key=value configuration files.
//
//   # reference ring
//   capacitance_f = 1e-13
//   inductance_h  = 3e-10
//   beta          = 2
//
// Blank lines and lines starting with '#' are ignored. Keys are unique.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/errors.hpp"

namespace squidqct {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

/// Whole-string decimal parse. Underflow to a subnormal or zero is accepted;
/// overflow and trailing text are not.
inline bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  if (errno == ERANGE && std::abs(x) > 1.0) return false;
  out = x;
  return true;
}

}  // namespace detail

class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text) {
    KeyValueConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = detail::trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      std::string key = detail::trim(std::string_view(t).substr(0, eq));
      std::string value = detail::trim(std::string_view(t).substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key)) throw ConfigError("duplicate key '" + key + "'");
      cfg.order_.push_back(key);
      cfg.values_.emplace(std::move(key), std::move(value));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const { return to_double(key, require(key)); }

  double number_or(const std::string& key, double fallback) const {
    auto v = get(key);
    return v ? to_double(key, *v) : fallback;
  }

  std::uint64_t integer_or(const std::string& key, std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    const auto* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end)
      throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + *v + "'");
    return out;
  }

  void set(const std::string& key, std::string value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = std::move(value);
  }

  /// Every key must belong to `known`; names the first stranger otherwise.
  void require_known(const std::set<std::string>& known) const {
    for (const auto& k : order_)
      if (!known.count(k)) throw ConfigError("unknown key '" + k + "'");
  }

  const std::vector<std::string>& keys() const { return order_; }

  std::string to_text() const {
    std::string out;
    for (const auto& k : order_) out += k + " = " + values_.at(k) + "\n";
    return out;
  }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    if (!detail::parse_double(v, x)) throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return x;
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Keys understood by circuit_from_config.
inline const std::set<std::string>& circuit_keys() {
  static const std::set<std::string> keys = {
      "capacitance_f",     "inductance_h",      "resistance_ohm", "beta",
      "critical_current_a", "drive_current_a",  "drive_omega_rad_s",
      "drive_omega_ratio", "bias_flux_phi0",    "scale_a",        "scale_b"};
  return keys;
}

struct ResolvedCircuit {
  CircuitParams base;      // as written in the file
  ScalingFactors scaling;  // scale_a / scale_b
  CircuitParams scaled;    // apply_scaling(base, scaling); what every run uses
};

inline ResolvedCircuit circuit_from_config(const KeyValueConfig& cfg,
                                           const PhysicalConstants& k = PhysicalConstants::codata2018()) {
  auto exactly_one = [&](const char* first, const char* second) {
    const bool a = cfg.has(first), b = cfg.has(second);
    if (a && b)
      throw ConfigError(std::string("keys '") + first + "' and '" + second +
                        "' are mutually exclusive");
    if (!a && !b)
      throw ConfigError(std::string("missing required key '") + first + "' (or '" + second + "')");
    return a;
  };

  ResolvedCircuit r;
  CircuitParams& p = r.base;
  p.C = cfg.number("capacitance_f");
  p.L = cfg.number("inductance_h");
  p.R = cfg.number("resistance_ohm");
  if (!(p.L > 0.0)) throw ConfigError("key 'inductance_h' must be positive");
  if (!(p.C > 0.0)) throw ConfigError("key 'capacitance_f' must be positive");
  if (!(p.R > 0.0)) throw ConfigError("key 'resistance_ohm' must be positive");

  if (exactly_one("beta", "critical_current_a"))
    p.I_c = critical_current_for_beta(cfg.number("beta"), p.L, k);
  else
    p.I_c = cfg.number("critical_current_a");

  p.I_d = cfg.number_or("drive_current_a", 0.0);

  if (exactly_one("drive_omega_rad_s", "drive_omega_ratio"))
    p.omega_d = cfg.number("drive_omega_rad_s");
  else
    p.omega_d = cfg.number("drive_omega_ratio") / std::sqrt(p.L * p.C);

  p.Phi_x = cfg.number_or("bias_flux_phi0", 0.0) * k.phi0;
  validate(p);

  r.scaling.a = cfg.number_or("scale_a", 1.0);
  r.scaling.b = cfg.number_or("scale_b", 1.0);
  r.scaled = apply_scaling(p, r.scaling);
  return r;
}

}  // namespace squidqct
