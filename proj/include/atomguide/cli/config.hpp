#pragma once

// Run configuration: a flat JSON object validated against a per-subcommand
// key table. Validation collects every problem before reporting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atomguide/constants.hpp"

namespace atomguide::cli {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view schema_version = "1.0";

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"guide", "evolve", "dressed", "bands", "transmit", "scales",
                                              "control-scan"};
  return names;
}

struct ConfigError {
  std::string path;  // key name, empty for the document itself
  std::string message;
};

inline std::string format_errors(const std::vector<ConfigError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    out += "config error";
    if (!e.path.empty()) out += " at \"" + e.path + "\"";
    out += ": " + e.message + "\n";
  }
  return out;
}

/// Thrown by the runner when a configuration fails validation.
class ConfigInvalid : public std::runtime_error {
 public:
  explicit ConfigInvalid(std::vector<ConfigError> errors)
      : std::runtime_error(format_errors(errors)), errors_(std::move(errors)) {}
  const std::vector<ConfigError>& errors() const { return errors_; }

 private:
  std::vector<ConfigError> errors_;
};

enum class Kind { number, integer, string };

struct KeySpec {
  std::string name;
  Kind kind = Kind::number;
  std::vector<std::string> commands;
  bool required = false;
  std::optional<Json> fallback;   // default value
  std::string fallback_from;      // default copied from another key
  std::optional<double> lower;
  std::optional<double> upper;
  bool lower_open = false;
  bool upper_open = false;
  std::vector<std::string> choices;
  std::string when_key;  // the key is only used when when_key is one of when_in
  std::vector<std::string> when_in;
  std::string units;
  std::string help;

  bool applies_to(const std::string& command) const {
    return std::find(commands.begin(), commands.end(), command) != commands.end();
  }

  std::string expectation() const {
    std::string s;
    switch (kind) {
      case Kind::number: s = "a number"; break;
      case Kind::integer: s = "an integer"; break;
      case Kind::string: s = "a string"; break;
    }
    auto fmt = [](double v) {
      std::ostringstream os;
      os << v;
      return os.str();
    };
    if (lower && upper)
      s += " in " + std::string(lower_open ? "(" : "[") + fmt(*lower) + ", " + fmt(*upper) + (upper_open ? ")" : "]");
    else if (lower)
      s += std::string(lower_open ? " > " : " >= ") + fmt(*lower);
    else if (upper)
      s += std::string(upper_open ? " < " : " <= ") + fmt(*upper);
    if (!choices.empty()) {
      s += ", one of";
      for (std::size_t i = 0; i < choices.size(); ++i) s += (i ? ", \"" : " \"") + choices[i] + "\"";
    }
    if (!units.empty()) s += " (" + units + ")";
    return s;
  }
};

namespace detail {

// Small builder so the table below stays readable.
struct Key {
  KeySpec s;
  Key(std::string name, Kind kind, std::vector<std::string> commands) {
    s.name = std::move(name);
    s.kind = kind;
    s.commands = std::move(commands);
  }
  Key& required() { s.required = true; return *this; }
  Key& fallback(Json v) { s.fallback = std::move(v); return *this; }
  Key& fallback_from(std::string k) { s.fallback_from = std::move(k); return *this; }
  Key& positive() { s.lower = 0.0; s.lower_open = true; return *this; }
  Key& non_negative() { s.lower = 0.0; return *this; }
  Key& at_least(double v) { s.lower = v; return *this; }
  Key& open_range(double lo, double hi) {
    s.lower = lo;
    s.upper = hi;
    s.lower_open = s.upper_open = true;
    return *this;
  }
  Key& choices(std::vector<std::string> c) { s.choices = std::move(c); return *this; }
  Key& when(std::string key, std::vector<std::string> values) {
    s.when_key = std::move(key);
    s.when_in = std::move(values);
    return *this;
  }
  Key& units(std::string u) { s.units = std::move(u); return *this; }
  Key& help(std::string h) { s.help = std::move(h); return *this; }
  operator KeySpec() const { return s; }
};

}  // namespace detail

/// Every configuration key, in canonical order.
inline const std::vector<KeySpec>& config_schema() {
  using detail::Key;
  constexpr double pi = std::numbers::pi;
  const double rb87 = constants::rubidium87_mass;
  const std::vector<std::string> guide{"guide"}, evolve{"evolve"}, dressed{"dressed"};
  const std::vector<std::string> lattice{"bands", "transmit"}, bands{"bands"}, transmit{"transmit"};
  const std::vector<std::string> scan{"control-scan"};
  const std::vector<std::string> builtin{"constant", "linear_sweep", "gaussian_pulse"};
  const std::vector<std::string> sampled_lattice{"cosine", "dressed_two_level", "dressed_lambda"};

  static const std::vector<KeySpec> table{
      // guide
      Key("j", Kind::number, guide).fallback(0.5).positive().help("spin quantum number (half-integer)"),
      Key("m", Kind::number, guide).fallback_from("j").help("initial J3 eigenvalue along the starting direction"),
      Key("path", Kind::string, guide).fallback("helix").choices({"helix", "centerline"}),
      Key("helix_theta", Kind::number, guide).fallback(pi / 3).open_range(0.0, pi).when("path", {"helix"}).units("rad"),
      Key("helix_rate", Kind::number, guide).fallback(1.0).positive().when("path", {"helix"}).units("rad/s"),
      Key("turns", Kind::number, guide).fallback(3.0).positive().when("path", {"helix"}),
      Key("samples_per_turn", Kind::integer, guide).fallback(2000).at_least(8).when("path", {"helix"}),
      Key("lead_in_turns", Kind::number, guide).fallback(0.5).non_negative().when("path", {"helix"}),
      Key("centerline_csv", Kind::string, guide).required().when("path", {"centerline"})
          .help("CSV with header t,x,y,z (s, m)"),
      Key("mass", Kind::number, guide).fallback(rb87).positive().when("path", {"centerline"}).units("kg"),
      // evolve
      Key("profile", Kind::string, evolve).fallback("constant")
          .choices({"constant", "linear_sweep", "gaussian_pulse", "csv"}),
      Key("t_start", Kind::number, evolve).fallback(0.0).when("profile", builtin).units("s"),
      Key("t_end", Kind::number, evolve).required().when("profile", builtin).units("s"),
      Key("samples", Kind::integer, evolve).fallback(2001).at_least(2).when("profile", builtin),
      Key("delta", Kind::number, evolve).fallback(0.0).when("profile", builtin).units("rad/s"),
      Key("delta_rate", Kind::number, evolve).fallback(0.0).when("profile", {"linear_sweep"}).units("rad/s^2"),
      Key("coupling_re", Kind::number, evolve).required().when("profile", builtin).units("rad/s"),
      Key("coupling_im", Kind::number, evolve).fallback(0.0).when("profile", builtin).units("rad/s"),
      Key("center", Kind::number, evolve).fallback(0.0).when("profile", {"linear_sweep", "gaussian_pulse"}).units("s"),
      Key("width", Kind::number, evolve).fallback(0.0).non_negative().when("profile", {"linear_sweep"}).units("s")
          .help("Gaussian envelope width; 0 keeps the coupling constant"),
      Key("width", Kind::number, evolve).required().positive().when("profile", {"gaussian_pulse"}).units("s"),
      Key("drive_csv", Kind::string, evolve).required().when("profile", {"csv"})
          .help("CSV with header t,delta,re_V,im_V (s, rad/s)"),
      Key("initial", Kind::string, evolve).fallback("ground").choices({"ground", "excited"}),
      Key("varsigma0", Kind::number, evolve).open_range(0.0, pi).units("rad"),
      Key("zeta0", Kind::number, evolve).units("rad"),
      // dressed
      Key("model", Kind::string, dressed).required().choices({"classical", "two_level", "lambda"}),
      Key("period", Kind::number, dressed).required().positive().units("m"),
      Key("x_points", Kind::integer, dressed).fallback(201).at_least(2),
      Key("delta", Kind::number, dressed).fallback(0.0).when("model", {"classical", "two_level"}).units("rad/s"),
      Key("coupling", Kind::number, dressed).required().when("model", {"classical"}).units("rad/s"),
      Key("photons", Kind::integer, dressed).fallback(0).non_negative().when("model", {"two_level"}),
      Key("omega", Kind::number, dressed).required().positive().when("model", {"two_level"}).units("rad/s"),
      Key("g0", Kind::number, dressed).required().when("model", {"two_level"}).units("rad/s"),
      Key("n1", Kind::integer, dressed).fallback(0).non_negative().when("model", {"lambda"}),
      Key("n2", Kind::integer, dressed).fallback(0).non_negative().when("model", {"lambda"}),
      Key("g1", Kind::number, dressed).required().when("model", {"lambda"}).units("rad/s"),
      Key("g2", Kind::number, dressed).required().when("model", {"lambda"}).units("rad/s"),
      Key("e0", Kind::number, dressed).fallback(0.0).when("model", {"lambda"}).units("rad/s"),
      // bands, transmit
      Key("period", Kind::number, lattice).required().positive().units("m"),
      Key("mass", Kind::number, lattice).fallback(rb87).positive().units("kg"),
      Key("potential", Kind::string, lattice).fallback("cosine")
          .choices({"cosine", "csv", "dressed_two_level", "dressed_lambda"}),
      Key("depth_er", Kind::number, lattice).required().when("potential", {"cosine"}).units("E_r")
          .help("U(x) = depth_er E_r cos(2 pi x / period)"),
      Key("potential_samples", Kind::integer, lattice).fallback(256).at_least(64).when("potential", sampled_lattice),
      Key("potential_csv", Kind::string, lattice).required().when("potential", {"csv"})
          .help("CSV with header x,U (m, J) covering one period on a uniform grid"),
      Key("photons", Kind::integer, lattice).fallback(0).non_negative().when("potential", {"dressed_two_level"}),
      Key("delta", Kind::number, lattice).fallback(0.0).when("potential", {"dressed_two_level"}).units("rad/s"),
      Key("g0", Kind::number, lattice).required().when("potential", {"dressed_two_level"}).units("rad/s"),
      Key("n1", Kind::integer, lattice).fallback(0).non_negative().when("potential", {"dressed_lambda"}),
      Key("n2", Kind::integer, lattice).fallback(0).non_negative().when("potential", {"dressed_lambda"}),
      Key("g1", Kind::number, lattice).required().when("potential", {"dressed_lambda"}).units("rad/s"),
      Key("g2", Kind::number, lattice).required().when("potential", {"dressed_lambda"}).units("rad/s"),
      Key("e0", Kind::number, lattice).fallback(0.0).when("potential", {"dressed_lambda"}).units("rad/s"),
      Key("branch", Kind::string, lattice).fallback("U_minus").choices({"U_minus", "U_plus"})
          .when("potential", {"dressed_two_level"}),
      Key("branch", Kind::string, lattice).fallback("E_minus").choices({"E_minus", "E_zero", "E_plus"})
          .when("potential", {"dressed_lambda"}),
      Key("plane_waves", Kind::integer, bands).fallback(41).at_least(3).help("odd"),
      Key("q_points", Kind::integer, bands).fallback(65).at_least(64),
      Key("max_bands", Kind::integer, bands).fallback(6).at_least(1),
      Key("periods", Kind::integer, transmit).fallback(10).at_least(1),
      Key("e_min_er", Kind::number, transmit).required().positive().units("E_r"),
      Key("e_max_er", Kind::number, transmit).required().positive().units("E_r"),
      Key("energy_points", Kind::integer, transmit).fallback(401).at_least(2),
      Key("lead_level_er", Kind::number, transmit).units("E_r").help("defaults to the period mean of U"),
      // scales
      Key("wavelength", Kind::number, {"scales"}).required().positive().units("m"),
      Key("mass", Kind::number, {"scales"}).fallback(rb87).positive().units("kg"),
      // control-scan
      Key("period", Kind::number, scan).required().positive().units("m"),
      Key("mass", Kind::number, scan).fallback(rb87).positive().units("kg"),
      Key("n1", Kind::integer, scan).fallback(0).non_negative(),
      Key("n2", Kind::integer, scan).fallback(0).non_negative(),
      Key("g1", Kind::number, scan).required().units("rad/s"),
      Key("e0", Kind::number, scan).fallback(0.0).units("rad/s"),
      Key("g2_min", Kind::number, scan).fallback(0.0).non_negative().units("rad/s"),
      Key("g2_max", Kind::number, scan).required().positive().units("rad/s"),
      Key("g2_points", Kind::integer, scan).fallback(11).at_least(2),
      Key("branch", Kind::string, scan).fallback("E_minus").choices({"E_minus", "E_zero", "E_plus"}),
      Key("plane_waves", Kind::integer, scan).fallback(31).at_least(3).help("odd"),
      Key("q_points", Kind::integer, scan).fallback(65).at_least(64),
      Key("max_bands", Kind::integer, scan).fallback(4).at_least(2),
  };
  return table;
}

/// A validated configuration. `values` holds every key in effect (defaults
/// filled in), `supplied` only what the file contained; both in schema order.
struct RunConfig {
  std::string schema;
  std::string subcommand;
  Json values = Json::object();
  Json supplied = Json::object();
  std::vector<std::string> defaults_applied;

  bool has(const std::string& key) const { return values.contains(key); }
  double number(const std::string& key) const { return values.at(key).get<double>(); }
  long long integer(const std::string& key) const { return values.at(key).get<long long>(); }
  const std::string& text(const std::string& key) const { return values.at(key).get_ref<const std::string&>(); }
  std::optional<double> optional_number(const std::string& key) const {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }

  Json defaults() const {
    Json d = Json::object();
    for (const auto& k : defaults_applied) d[k] = values.at(k);
    return d;
  }
};

struct Validation {
  std::optional<RunConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return config.has_value(); }
};

/// Canonical text of the supplied keys; parsing it again gives the same config.
inline std::string serialize(const RunConfig& c) {
  Json doc = Json::object();
  doc["schema_version"] = c.schema;
  doc["subcommand"] = c.subcommand;
  for (const auto& [k, v] : c.supplied.items()) doc[k] = v;
  return doc.dump(2) + "\n";
}

/// FNV-1a 64 of the effective configuration (defaults included).
inline std::string config_digest(const RunConfig& c) {
  Json doc = Json::object();
  doc["schema_version"] = c.schema;
  doc["subcommand"] = c.subcommand;
  doc["values"] = c.values;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

namespace detail {

inline bool check_value(const KeySpec& spec, const nlohmann::json& v) {
  double x = 0.0;
  switch (spec.kind) {
    case Kind::string:
      if (!v.is_string()) return false;
      return spec.choices.empty() ||
             std::find(spec.choices.begin(), spec.choices.end(), v.get<std::string>()) != spec.choices.end();
    case Kind::integer:
      if (!v.is_number_integer()) return false;
      x = static_cast<double>(v.get<long long>());
      break;
    case Kind::number:
      if (!v.is_number()) return false;
      x = v.get<double>();
      if (!std::isfinite(x)) return false;
      break;
  }
  if (spec.lower && (spec.lower_open ? !(x > *spec.lower) : !(x >= *spec.lower))) return false;
  if (spec.upper && (spec.upper_open ? !(x < *spec.upper) : !(x <= *spec.upper))) return false;
  return true;
}

inline std::string join_quoted(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", \"" : "\"") + v[i] + "\"";
  return s;
}

}  // namespace detail

/// Validates a configuration document. The subcommand comes from the command
/// line or, if absent there, from the "subcommand" key; when both are given
/// they must agree.
inline Validation validate_config(std::string_view text, std::optional<std::string> subcommand = std::nullopt) {
  Validation out;
  auto fail = [&](std::string path, std::string message) { out.errors.push_back({std::move(path), std::move(message)}); };

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    fail("", std::string("invalid JSON: ") + e.what());
    return out;
  }
  if (!doc.is_object()) {
    fail("", "the configuration must be a JSON object");
    return out;
  }

  RunConfig cfg;
  if (!doc.contains("schema_version")) {
    fail("schema_version", "required key is missing (expected \"" + std::string(schema_version) + "\")");
  } else if (!doc["schema_version"].is_string() || doc["schema_version"].get<std::string>() != schema_version) {
    fail("schema_version", "unsupported schema version " + doc["schema_version"].dump() + " (expected \"" +
                               std::string(schema_version) + "\")");
  } else {
    cfg.schema = schema_version;
  }

  std::optional<std::string> command = subcommand;
  if (doc.contains("subcommand")) {
    const auto& s = doc["subcommand"];
    if (!s.is_string()) {
      fail("subcommand", "expected a string, got " + s.dump());
    } else if (command && *command != s.get<std::string>()) {
      fail("subcommand", "config is for \"" + s.get<std::string>() + "\" but the command line asks for \"" +
                             *command + "\"");
    } else {
      command = s.get<std::string>();
    }
  }
  const auto& names = subcommands();
  if (!command) {
    if (!doc.contains("subcommand")) fail("subcommand", "required key is missing (expected one of " + detail::join_quoted(names) + ")");
    return out;
  }
  if (std::find(names.begin(), names.end(), *command) == names.end()) {
    fail("subcommand", "unknown subcommand \"" + *command + "\" (expected one of " + detail::join_quoted(names) + ")");
    return out;
  }
  cfg.subcommand = *command;

  std::vector<const KeySpec*> specs;
  for (const auto& s : config_schema())
    if (s.applies_to(cfg.subcommand)) specs.push_back(&s);

  // Selector values (keys other keys depend on); unresolved if invalid.
  std::map<std::string, std::optional<std::string>> selector;
  for (const auto* s : specs) {
    if (s->when_key.empty() || selector.count(s->when_key)) continue;
    const KeySpec* sel = nullptr;
    for (const auto* c : specs)
      if (c->name == s->when_key) sel = c;
    std::optional<std::string> value;
    if (doc.contains(s->when_key)) {
      if (detail::check_value(*sel, doc[s->when_key])) value = doc[s->when_key].get<std::string>();
    } else if (sel->fallback) {
      value = sel->fallback->get<std::string>();
    }
    selector[s->when_key] = value;
  }
  // 1 active, 0 inactive, -1 unknown because its selector is invalid
  auto active = [&](const KeySpec& s) {
    if (s.when_key.empty()) return 1;
    const auto& v = selector.at(s.when_key);
    if (!v) return -1;
    return std::find(s.when_in.begin(), s.when_in.end(), *v) != s.when_in.end() ? 1 : 0;
  };

  for (const auto& [key, value] : doc.items()) {
    if (key == "schema_version" || key == "subcommand") continue;
    std::vector<const KeySpec*> matches;
    for (const auto* s : specs)
      if (s->name == key) matches.push_back(s);
    if (matches.empty()) {
      fail(key, "unknown key for subcommand \"" + cfg.subcommand + "\"");
      continue;
    }
    const KeySpec* use = nullptr;
    bool unknown = false;
    for (const auto* s : matches) {
      const int a = active(*s);
      if (a == 1) use = s;
      if (a == -1) unknown = true;
    }
    if (!use) {
      if (unknown) continue;
      const auto& w = matches.front()->when_key;
      std::vector<std::string> allowed;
      for (const auto* s : matches) allowed.insert(allowed.end(), s->when_in.begin(), s->when_in.end());
      fail(key, "only used when \"" + w + "\" is one of " + detail::join_quoted(allowed) + " (it is \"" +
                    *selector.at(w) + "\")");
      continue;
    }
    if (!detail::check_value(*use, value)) fail(key, "expected " + use->expectation() + ", got " + value.dump());
  }

  std::set<std::string> emitted;
  for (const auto* s : specs) {
    if (active(*s) != 1 || emitted.count(s->name)) continue;
    emitted.insert(s->name);
    if (doc.contains(s->name)) {
      cfg.supplied[s->name] = doc[s->name];
      cfg.values[s->name] = doc[s->name];
    } else if (s->required) {
      fail(s->name, "required key is missing (expected " + s->expectation() + ")");
    } else if (s->fallback) {
      cfg.values[s->name] = *s->fallback;
      cfg.defaults_applied.push_back(s->name);
    } else if (!s->fallback_from.empty() && cfg.values.contains(s->fallback_from)) {
      cfg.values[s->name] = cfg.values[s->fallback_from];
      cfg.defaults_applied.push_back(s->name);
    }
  }

  if (out.errors.empty()) {
    auto num = [&](const char* k) { return cfg.values.at(k).get<double>(); };
    if (cfg.subcommand == "guide") {
      const double j = num("j"), m = num("m");
      const double twice = 2.0 * j;
      if (std::abs(twice - std::round(twice)) > 1e-12) {
        fail("j", "expected a positive half-integer, got " + cfg.values["j"].dump());
      } else {
        const double k = j - m;
        if (std::abs(k - std::round(k)) > 1e-12 || k < -1e-12 || k > twice + 1e-12)
          fail("m", "expected one of -j, -j+1, ..., j for j = " + cfg.values["j"].dump() + ", got " +
                        cfg.values["m"].dump());
      }
    }
    if (cfg.subcommand == "evolve" && cfg.has("t_end") && !(num("t_end") > num("t_start")))
      fail("t_end", "must be greater than t_start");
    if (cfg.subcommand == "transmit" && !(num("e_max_er") > num("e_min_er")))
      fail("e_max_er", "must be greater than e_min_er");
    if (cfg.subcommand == "control-scan" && !(num("g2_max") > num("g2_min")))
      fail("g2_max", "must be greater than g2_min");
    if (cfg.has("plane_waves") && cfg.integer("plane_waves") % 2 == 0)
      fail("plane_waves", "expected an odd integer, got " + cfg.values["plane_waves"].dump());
  }

  if (!out.errors.empty()) {
    std::stable_sort(out.errors.begin(), out.errors.end(),
                     [](const ConfigError& a, const ConfigError& b) { return a.path < b.path; });
    return out;
  }
  out.config = std::move(cfg);
  return out;
}

}  // namespace atomguide::cli
