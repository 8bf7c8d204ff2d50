#pragma once

// Kinetic parameter set for the intrinsic-pathway coagulation models and its
// INI-style configuration file format.
//
// Units: first-order rates in 1/min, bimolecular rates in 1/(nM min),
// concentrations in nM, lengths in mm, D in mm^2/min.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coagwave {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rate constants, Michaelis constants, diffusion and plasma levels.
///
/// The reduced-model rates default to the standard parameter table. The
/// prothrombinase rate `k2_bar` has no published value; its default is the
/// calibration described in config/default.ini. Full-model fields default to
/// placeholders derived from the reduced rates through k_i = r_i * V_i^0.
struct CoagParams {
  // reduced / shared rates
  double k11 = 0.000011;
  double h11 = 0.5;
  double k10 = 0.00033;
  double k10_bar = 500.0;
  double h10 = 1.0;
  double k9 = 20.0;
  double h9 = 0.2;
  double k89 = 100.0;
  double h89 = 100.0;
  double k8 = 0.00001;
  double h8 = 0.31;
  double k5 = 0.17;
  double h5 = 0.31;
  double k510 = 100.0;
  double h510 = 100.0;
  double k2 = 2.45;
  double h2 = 2.3;
  double k2_bar = 13.364;  // calibrated, see config/default.ini
  double K2m = 58.0;
  double K2m_bar = 210.0;
  double D = 0.0037;
  double T0 = 1400.0;

  // full 14-equation model: plasma levels of the inactive forms
  double V0_5 = 20.0;
  double V0_8 = 0.7;
  double V0_9 = 90.0;
  double V0_10 = 170.0;
  double V0_11 = 30.0;
  // bimolecular activation rates, defaults satisfy k_i = r_i V_i^0
  double r11 = 0.000011 / 30.0;
  double r5 = 0.17 / 20.0;
  double r8 = 0.00001 / 0.7;
  double r9 = 20.0 / 90.0;
  double r10 = 0.00033 / 170.0;
  double r10_bar = 500.0 / 170.0;
  double r2 = 2.45 * 58.0 / 1400.0;
  double r2_bar = 13.364 * 210.0 / 1400.0;
  // full-model inhibition
  double q8 = 0.31;
  double q9 = 0.2;
  double q10 = 1.0;

  // Multiplier applied to k9 when mapping factor IX activity (%) to a rate:
  // k9(activity) = k9 * fix_activity_scale * activity / 100.
  double fix_activity_scale = 100.0;

  /// Plasma level of the inactive form paired with activated factor `i`
  /// (i = 2 is prothrombin, whose level is T0).
  [[nodiscard]] double plasma_level(int i) const {
    switch (i) {
      case 2: return T0;
      case 5: return V0_5;
      case 8: return V0_8;
      case 9: return V0_9;
      case 10: return V0_10;
      case 11: return V0_11;
      default: throw std::out_of_range("no plasma level for factor " + std::to_string(i));
    }
  }
};

namespace detail {

struct ParamField {
  std::string_view section;
  std::string_view key;
  double CoagParams::*member;
  std::string_view unit;
};

inline const std::vector<ParamField>& param_fields() {
  static const std::vector<ParamField> fields = {
      {"rates", "k11", &CoagParams::k11, "1/min"},
      {"rates", "h11", &CoagParams::h11, "1/min"},
      {"rates", "k10", &CoagParams::k10, "1/min"},
      {"rates", "k10_bar", &CoagParams::k10_bar, "1/min"},
      {"rates", "h10", &CoagParams::h10, "1/min"},
      {"rates", "k9", &CoagParams::k9, "1/min"},
      {"rates", "h9", &CoagParams::h9, "1/min"},
      {"rates", "k89", &CoagParams::k89, "1/(nM min)"},
      {"rates", "h89", &CoagParams::h89, "1/min"},
      {"rates", "k8", &CoagParams::k8, "1/min"},
      {"rates", "h8", &CoagParams::h8, "1/min"},
      {"rates", "k5", &CoagParams::k5, "1/min"},
      {"rates", "h5", &CoagParams::h5, "1/min"},
      {"rates", "k510", &CoagParams::k510, "1/(nM min)"},
      {"rates", "h510", &CoagParams::h510, "1/min"},
      {"rates", "k2", &CoagParams::k2, "1/min"},
      {"rates", "h2", &CoagParams::h2, "1/min"},
      {"rates", "k2_bar", &CoagParams::k2_bar, "1/min"},
      {"rates", "K2m", &CoagParams::K2m, "nM"},
      {"rates", "K2m_bar", &CoagParams::K2m_bar, "nM"},
      {"rates", "D", &CoagParams::D, "mm^2/min"},
      {"rates", "T0", &CoagParams::T0, "nM"},
      {"full_model", "V0_5", &CoagParams::V0_5, "nM"},
      {"full_model", "V0_8", &CoagParams::V0_8, "nM"},
      {"full_model", "V0_9", &CoagParams::V0_9, "nM"},
      {"full_model", "V0_10", &CoagParams::V0_10, "nM"},
      {"full_model", "V0_11", &CoagParams::V0_11, "nM"},
      {"full_model", "r11", &CoagParams::r11, "1/(nM min)"},
      {"full_model", "r5", &CoagParams::r5, "1/(nM min)"},
      {"full_model", "r8", &CoagParams::r8, "1/(nM min)"},
      {"full_model", "r9", &CoagParams::r9, "1/(nM min)"},
      {"full_model", "r10", &CoagParams::r10, "1/(nM min)"},
      {"full_model", "r10_bar", &CoagParams::r10_bar, "1/(nM min)"},
      {"full_model", "r2", &CoagParams::r2, "1/min"},
      {"full_model", "r2_bar", &CoagParams::r2_bar, "1/min"},
      {"full_model", "q8", &CoagParams::q8, "1/min"},
      {"full_model", "q9", &CoagParams::q9, "1/min"},
      {"full_model", "q10", &CoagParams::q10, "1/min"},
      {"calibration", "fix_activity_scale", &CoagParams::fix_activity_scale, "-"},
  };
  return fields;
}

}  // namespace detail

/// Names accepted by set_param / --param overrides.
inline std::vector<std::string> param_names() {
  std::vector<std::string> out;
  for (const auto& f : detail::param_fields()) out.emplace_back(f.key);
  return out;
}

inline double get_param(const CoagParams& p, std::string_view key) {
  for (const auto& f : detail::param_fields())
    if (f.key == key) return p.*(f.member);
  throw ConfigError("unknown parameter '" + std::string(key) + "'");
}

inline void set_param(CoagParams& p, std::string_view key, double value) {
  for (const auto& f : detail::param_fields()) {
    if (f.key == key) {
      p.*(f.member) = value;
      return;
    }
  }
  throw ConfigError("unknown parameter '" + std::string(key) + "'");
}

/// Throws ConfigError unless every rate, concentration and D is finite and > 0.
inline void validate(const CoagParams& p) {
  for (const auto& f : detail::param_fields()) {
    const double v = p.*(f.member);
    if (!std::isfinite(v) || v <= 0.0) {
      std::ostringstream os;
      os << "parameter " << f.section << "." << f.key << " must be positive (got " << v << ")";
      if (f.key == "k2_bar")
        os << "; k2_bar has no published value, run `coagwave calibrate` to fit it to a "
              "target wave speed";
      throw ConfigError(os.str());
    }
  }
}

struct ConsistencyIssue {
  std::string rate;
  double reduced_value;
  double full_value;  // r_i * V_i^0
};

/// Compares the reduced first-order rates with r_i * V_i^0 from the full model.
inline std::vector<ConsistencyIssue> rate_consistency(const CoagParams& p, double rel_tol = 1e-9) {
  const struct {
    const char* name;
    double k, r, v;
  } rows[] = {
      {"k11", p.k11, p.r11, p.V0_11}, {"k5", p.k5, p.r5, p.V0_5},
      {"k8", p.k8, p.r8, p.V0_8},     {"k9", p.k9, p.r9, p.V0_9},
      {"k10", p.k10, p.r10, p.V0_10}, {"k10_bar", p.k10_bar, p.r10_bar, p.V0_10},
  };
  std::vector<ConsistencyIssue> issues;
  for (const auto& row : rows) {
    const double full = row.r * row.v;
    if (std::abs(full - row.k) > rel_tol * std::abs(row.k)) issues.push_back({row.name, row.k, full});
  }
  return issues;
}

/// Simulation domain defaults carried by the [domain] section.
struct DomainConfig {
  double length = 5.0;          // mm
  int nodes = 1001;
  double t_end = 40.0;          // min
  double snapshot_every = 1.0;  // min
};

struct Config {
  CoagParams params;
  DomainConfig domain;
};

namespace detail {

inline double parse_double(const std::string& section, const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (text.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": cannot parse '" + text + "' as a number");
  }
}

}  // namespace detail

/// Parses an INI document with sections [rates], [full_model], [domain] and
/// [calibration]. Keys not listed here are rejected; omitted keys keep their
/// defaults.
inline Config parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  Config cfg;
  bool has_k2_bar = false;
  for (const auto& [section, body] : tree) {
    if (section == "domain") {
      for (const auto& [key, node] : body) {
        const double v = detail::parse_double(section, key, node.data());
        if (key == "length") cfg.domain.length = v;
        else if (key == "nodes") cfg.domain.nodes = static_cast<int>(std::lround(v));
        else if (key == "t_end") cfg.domain.t_end = v;
        else if (key == "snapshot_every") cfg.domain.snapshot_every = v;
        else throw ConfigError("unknown key [domain] " + key);
      }
      continue;
    }
    if (section != "rates" && section != "full_model" && section != "calibration")
      throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      bool found = false;
      for (const auto& f : detail::param_fields()) {
        if (f.section == section && f.key == key) {
          cfg.params.*(f.member) = detail::parse_double(section, key, node.data());
          has_k2_bar = has_k2_bar || key == "k2_bar";
          found = true;
          break;
        }
      }
      if (!found) throw ConfigError("unknown key [" + section + "] " + key);
    }
  }
  if (!has_k2_bar)
    throw ConfigError(
        "[rates] k2_bar is missing. It has no published value: run `coagwave calibrate --write <config>` to fit it "
        "to the reference wave speed (0.05 mm/min), or set it explicitly");
  validate(cfg.params);
  if (cfg.domain.nodes < 3 || cfg.domain.length <= 0 || cfg.domain.t_end <= 0 ||
      cfg.domain.snapshot_every <= 0)
    throw ConfigError("[domain] requires nodes >= 3 and positive length, t_end, snapshot_every");
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Serializes every parameter in a canonical order (used for hashing and for
/// writing a config back out).
inline std::string to_ini(const Config& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  std::string_view current;
  for (const auto& f : detail::param_fields()) {
    if (f.section != current) {
      if (!current.empty()) os << "\n";
      os << "[" << f.section << "]\n";
      current = f.section;
    }
    os << f.key << " = " << cfg.params.*(f.member) << "\n";
  }
  os << "\n[domain]\n"
     << "length = " << cfg.domain.length << "\n"
     << "nodes = " << cfg.domain.nodes << "\n"
     << "t_end = " << cfg.domain.t_end << "\n"
     << "snapshot_every = " << cfg.domain.snapshot_every << "\n";
  return os.str();
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string config_hash(const Config& cfg) { return fnv1a_hex(to_ini(cfg)); }

/// Applies "KEY=VALUE" overrides. Domain keys are accepted as domain.length etc.
inline void apply_override(Config& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must be KEY=VALUE: " + std::string(assignment));
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  const double v = detail::parse_double("override", key, text);
  if (key == "domain.length" || key == "L") cfg.domain.length = v;
  else if (key == "domain.nodes" || key == "N") cfg.domain.nodes = static_cast<int>(std::lround(v));
  else if (key == "domain.t_end" || key == "t_end") cfg.domain.t_end = v;
  else if (key == "domain.snapshot_every" || key == "snapshot_every") cfg.domain.snapshot_every = v;
  else set_param(cfg.params, key, v);
}

}  // namespace coagwave
