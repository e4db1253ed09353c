#pragma once
// Run configuration: a small INI-style text format with [offspring], [weight]
// and [run] sections, strict key validation, rational literals for exact
// zero-mass witnesses, canonical re-serialization, and a stable 64-bit hash
// of the resolved configuration for embedding in output artifacts.

#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "brw/distributions.hpp"

namespace brw {

inline constexpr const char* kConfigSchema = "brw-config/1";
inline constexpr const char* kReportSchema = "brw-report/1";

// A numeric literal that may have been written as an exact fraction "a/b".
struct RationalValue {
  double value = 0;
  long long num = 0;
  long long den = 0;  // zero when the literal was not a fraction
  bool is_rational = false;
};

using ConfigSection = std::map<std::string, std::string>;

struct RunConfig {
  ConfigSection offspring;  // raw key=value pairs, validated on construction
  ConfigSection weight;

  // [run] section, fully resolved (defaults applied, flags folded in).
  std::uint64_t seed = 1;
  std::size_t reps = 100;
  std::size_t depth = 8;
  std::uint64_t budget = 1'000'000;
  unsigned threads = 1;
  double epsilon = 1.0;
  double cap = 100'000;  // offspring cap for per-node enumeration
  std::string format = "csv";
  std::string out_dir = ".";
  bool collapse = false;      // collapse a zero-atom weight before analysis
  std::string alpha = "auto";  // option exponent: "auto" or a number
  std::vector<std::size_t> depths;  // ratio-study ladder; empty = 4..10
  std::vector<double> r_grid;       // speed-event half-widths; empty = default
  double delta = 0.25;              // lower-envelope slack exponent
  bool toy = false;                 // counterexample: toy period lengths
  std::vector<double> periods;      // counterexample: explicit period lengths
  std::string omega = "sqrt";       // counterexample audit divergence scale
  std::string conditioning = "none";

  bool has_offspring() const { return !offspring.empty(); }
  bool has_weight() const { return !weight.empty(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] inline void config_error(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) config_error("trailing characters in numeric value for '" + key + "'");
    return x;
  } catch (const std::invalid_argument&) {
    config_error("expected a number for '" + key + "', got '" + v + "'");
  } catch (const std::out_of_range&) {
    config_error("number out of range for '" + key + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) config_error("trailing characters in integer value for '" + key + "'");
    return x;
  } catch (const std::invalid_argument&) {
    config_error("expected an integer for '" + key + "', got '" + v + "'");
  } catch (const std::out_of_range&) {
    config_error("integer out of range for '" + key + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  config_error("expected a boolean for '" + key + "', got '" + v + "'");
}

inline RationalValue parse_rational(const std::string& key, const std::string& v) {
  RationalValue r;
  std::size_t slash = v.find('/');
  if (slash != std::string::npos) {
    std::string a = trim(v.substr(0, slash)), b = trim(v.substr(slash + 1));
    r.num = static_cast<long long>(parse_u64(key, a));
    r.den = static_cast<long long>(parse_u64(key, b));
    if (r.den == 0) config_error("zero denominator for '" + key + "'");
    r.value = static_cast<double>(r.num) / static_cast<double>(r.den);
    r.is_rational = true;
    return r;
  }
  r.value = parse_double(key, v);
  return r;
}

inline std::vector<std::string> split_list(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(v);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v, ',')) out.push_back(parse_double(key, item));
  return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v, ','))
    out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
  return out;
}

// "a:b, c:d" pair lists (piecewise tail points, weight atoms).
inline std::vector<std::pair<double, double>> parse_pair_list(const std::string& key,
                                                              const std::string& v) {
  std::vector<std::pair<double, double>> out;
  for (const auto& item : split_list(v, ',')) {
    std::size_t colon = item.find(':');
    if (colon == std::string::npos) config_error("expected 'a:b' pairs for '" + key + "'");
    out.emplace_back(parse_double(key, trim(item.substr(0, colon))),
                     parse_double(key, trim(item.substr(colon + 1))));
  }
  return out;
}

inline void check_keys(const char* section, const ConfigSection& sec,
                       const std::vector<std::string>& allowed) {
  for (const auto& [k, v] : sec) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || k == a;
    if (!ok) config_error(std::string("unknown key '") + k + "' in [" + section + "]");
  }
}

inline std::string section_value(const ConfigSection& sec, const std::string& key) {
  auto it = sec.find(key);
  if (it == sec.end()) config_error("missing key '" + key + "'");
  return it->second;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// distribution construction from config sections
// ---------------------------------------------------------------------------

namespace detail {

inline OffspringDist offspring_from_keys(const ConfigSection& sec, const std::string& prefix);

inline OffspringDist offspring_family(const ConfigSection& sec, const std::string& prefix,
                                      const std::string& family) {
  auto val = [&](const char* k) { return section_value(sec, prefix + k); };
  if (family == "power_tail") return OffspringDist::power_tail(parse_double("beta", val("beta")));
  if (family == "log_tail") return OffspringDist::log_tail();
  if (family == "geometric") return OffspringDist::geometric(parse_double("mean", val("mean")));
  if (family == "deterministic")
    return OffspringDist::deterministic(
        static_cast<long long>(parse_u64("k", val("k"))));
  if (family == "piecewise_tail") {
    std::vector<PiecewisePoint> pts;
    for (auto [a, b] : parse_pair_list("points", val("points")))
      pts.push_back(PiecewisePoint{a, b});
    return OffspringDist::piecewise_tail(std::move(pts));
  }
  if (family == "collapsed") {
    auto base = offspring_from_keys(sec, prefix + "base_");
    auto p = parse_rational("p", val("p"));
    return OffspringDist::collapsed(std::make_shared<OffspringDist>(std::move(base)), p.value);
  }
  config_error("unknown offspring family '" + family + "'");
}

inline OffspringDist offspring_from_keys(const ConfigSection& sec, const std::string& prefix) {
  return offspring_family(sec, prefix, unquote(section_value(sec, prefix + "family")));
}

// Keys a family consumes, used for unknown-key rejection (prefix-free level).
inline std::vector<std::string> offspring_allowed(const ConfigSection& sec,
                                                  const std::string& prefix) {
  std::string family = unquote(section_value(sec, prefix + "family"));
  std::vector<std::string> keys = {prefix + "family"};
  if (family == "power_tail") keys.push_back(prefix + "beta");
  if (family == "geometric") keys.push_back(prefix + "mean");
  if (family == "deterministic") keys.push_back(prefix + "k");
  if (family == "piecewise_tail") keys.push_back(prefix + "points");
  if (family == "collapsed") {
    keys.push_back(prefix + "p");
    for (auto& k : offspring_allowed(sec, prefix + "base_")) keys.push_back(k);
  }
  return keys;
}

inline WeightDist weight_from_keys(const ConfigSection& sec, const std::string& prefix);

inline WeightDist weight_family(const ConfigSection& sec, const std::string& prefix,
                                const std::string& family) {
  auto val = [&](const char* k) { return section_value(sec, prefix + k); };
  if (family == "uniform01") return WeightDist::uniform01();
  if (family == "exponential")
    return WeightDist::exponential(parse_double("rate", val("rate")));
  if (family == "point_mass")
    return WeightDist::point_mass(parse_double("point", val("point")));
  if (family == "double_exp_small") return WeightDist::double_exp_small();
  if (family == "log_inverse")
    return WeightDist::log_inverse(parse_double("alpha", val("alpha")));
  if (family == "atomic") {
    std::vector<WeightAtom> atoms;
    for (auto [pos, mass] : parse_pair_list("atoms", val("atoms")))
      atoms.push_back(WeightAtom{LogReal::from_linear(pos), LogReal::from_linear(mass)});
    return WeightDist::atomic(std::move(atoms));
  }
  if (family == "mixture_zero") {
    auto p = parse_rational("zero_p", val("zero_p"));
    auto base = weight_from_keys(sec, prefix + "base_");
    if (p.is_rational) return WeightDist::mixture_zero(p.value, std::move(base), p.num, p.den);
    return WeightDist::mixture_zero(p.value, std::move(base));
  }
  config_error("unknown weight family '" + family + "'");
}

inline WeightDist weight_from_keys(const ConfigSection& sec, const std::string& prefix) {
  return weight_family(sec, prefix, unquote(section_value(sec, prefix + "family")));
}

inline std::vector<std::string> weight_allowed(const ConfigSection& sec,
                                               const std::string& prefix) {
  std::string family = unquote(section_value(sec, prefix + "family"));
  std::vector<std::string> keys = {prefix + "family"};
  if (family == "exponential") keys.push_back(prefix + "rate");
  if (family == "point_mass") keys.push_back(prefix + "point");
  if (family == "log_inverse") keys.push_back(prefix + "alpha");
  if (family == "atomic") keys.push_back(prefix + "atoms");
  if (family == "mixture_zero") {
    keys.push_back(prefix + "zero_p");
    for (auto& k : weight_allowed(sec, prefix + "base_")) keys.push_back(k);
  }
  return keys;
}

}  // namespace detail

inline OffspringDist make_offspring(const RunConfig& cfg) {
  if (!cfg.has_offspring()) detail::config_error("no [offspring] section");
  return detail::offspring_from_keys(cfg.offspring, "");
}

inline WeightDist make_weight(const RunConfig& cfg) {
  if (!cfg.has_weight()) detail::config_error("no [weight] section");
  return detail::weight_from_keys(cfg.weight, "");
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

namespace detail {

inline void apply_run_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "reps") {
    cfg.reps = static_cast<std::size_t>(parse_u64(key, value));
  } else if (key == "depth" || key == "generations") {
    cfg.depth = static_cast<std::size_t>(parse_u64(key, value));
  } else if (key == "budget") {
    cfg.budget = parse_u64(key, value);
  } else if (key == "threads") {
    cfg.threads = static_cast<unsigned>(parse_u64(key, value));
  } else if (key == "epsilon") {
    cfg.epsilon = parse_double(key, value);
    if (!(cfg.epsilon > 0)) config_error("epsilon must be positive");
  } else if (key == "cap") {
    cfg.cap = parse_double(key, value);
  } else if (key == "format") {
    if (value != "csv" && value != "json") config_error("format must be csv or json");
    cfg.format = value;
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "collapse") {
    cfg.collapse = parse_bool(key, value);
  } else if (key == "alpha") {
    if (value != "auto") parse_double(key, value);  // validate numeric form
    cfg.alpha = value;
  } else if (key == "depths") {
    cfg.depths = parse_size_list(key, value);
  } else if (key == "r_grid") {
    cfg.r_grid = parse_double_list(key, value);
  } else if (key == "delta") {
    cfg.delta = parse_double(key, value);
  } else if (key == "toy") {
    cfg.toy = parse_bool(key, value);
  } else if (key == "periods") {
    cfg.periods = parse_double_list(key, value);
  } else if (key == "omega") {
    if (value != "sqrt" && value != "log") config_error("omega must be sqrt or log");
    cfg.omega = value;
  } else if (key == "conditioning") {
    if (value != "none" && value != "restart")
      config_error("conditioning must be none or restart");
    cfg.conditioning = value;
  } else {
    config_error("unknown key '" + key + "' in [run]");
  }
}

inline void parse_pair_into(ConfigSection& sec, const std::string& line) {
  std::size_t eq = line.find('=');
  if (eq == std::string::npos) config_error("expected key = value, got '" + line + "'");
  std::string key = trim(line.substr(0, eq));
  std::string value = unquote(trim(line.substr(eq + 1)));
  if (key.empty()) config_error("empty key in '" + line + "'");
  if (sec.count(key)) config_error("duplicate key '" + key + "'");
  sec[key] = value;
}

}  // namespace detail

// Applies one [run] key with full validation; command-line overrides route
// through this so a flag and the equivalent config line behave identically.
inline void apply_run_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  detail::apply_run_key(cfg, key, value);
}

// Parses the INI-style text. Sections may carry inline pairs on the header
// line ([offspring] family="power_tail" beta=0.5) or one pair per line.
// Unknown sections and unknown keys are rejected; present sections are
// validated eagerly by constructing their distributions once.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  ConfigSection run_raw;
  ConfigSection* current = nullptr;
  std::string current_name;

  std::istringstream is(text);
  std::string raw;
  while (std::getline(is, raw)) {
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      std::size_t close = line.find(']');
      if (close == std::string::npos) detail::config_error("unterminated section header");
      std::string name = detail::trim(line.substr(1, close - 1));
      if (name == "offspring") {
        current = &cfg.offspring;
      } else if (name == "weight") {
        current = &cfg.weight;
      } else if (name == "run") {
        current = &run_raw;
      } else {
        detail::config_error("unknown section [" + name + "]");
      }
      current_name = name;
      // Inline pairs on the header line, whitespace separated.
      std::string rest = detail::trim(line.substr(close + 1));
      while (!rest.empty()) {
        std::size_t eq = rest.find('=');
        if (eq == std::string::npos) detail::config_error("expected key = value after section");
        std::size_t val_end = rest.find_first_of(" \t", eq + 2);
        if (rest[eq + 1] == '"' || (eq + 2 < rest.size() && rest[eq + 1] == ' ')) {
          // quoted or spaced values: find closing quote
          std::size_t q1 = rest.find('"', eq);
          if (q1 != std::string::npos) {
            std::size_t q2 = rest.find('"', q1 + 1);
            if (q2 == std::string::npos) detail::config_error("unterminated quote");
            val_end = rest.find_first_of(" \t", q2);
          }
        }
        std::string pair = val_end == std::string::npos ? rest : rest.substr(0, val_end);
        detail::parse_pair_into(*current, pair);
        rest = val_end == std::string::npos ? "" : detail::trim(rest.substr(val_end));
      }
      continue;
    }
    if (!current) detail::config_error("key outside any section: '" + line + "'");
    detail::parse_pair_into(*current, line);
  }

  for (const auto& [k, v] : run_raw) detail::apply_run_key(cfg, k, v);

  if (cfg.has_offspring()) {
    detail::check_keys("offspring", cfg.offspring,
                       detail::offspring_allowed(cfg.offspring, ""));
    (void)make_offspring(cfg);  // eager validation
  }
  if (cfg.has_weight()) {
    detail::check_keys("weight", cfg.weight, detail::weight_allowed(cfg.weight, ""));
    (void)make_weight(cfg);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// canonical serialization and hashing
// ---------------------------------------------------------------------------

namespace detail {

inline bool bare_token(const std::string& v) {
  if (v.empty()) return false;
  for (char c : v)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+' ||
          c == '/' || c == ':' || c == ',' || c == 'e' || c == 'E' || c == '_'))
      return false;
  return true;
}

inline void emit_pair(std::ostringstream& os, const std::string& k, const std::string& v) {
  bool numeric_ish = !v.empty() && (std::isdigit(static_cast<unsigned char>(v[0])) ||
                                    v[0] == '-' || v[0] == '+' || v[0] == '.');
  if (numeric_ish && bare_token(v)) {
    os << k << " = " << v << "\n";
  } else {
    os << k << " = \"" << v << "\"\n";
  }
}

template <class T>
inline std::string join_list(const std::vector<T>& xs) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ",";
    os << xs[i];
  }
  return os.str();
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

// Deterministic resolved form: fixed section order, sorted keys, every [run]
// field present. Parsing the canonical text reproduces the same RunConfig.
inline std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "# schema = " << kConfigSchema << "\n";
  if (cfg.has_offspring()) {
    os << "[offspring]\n";
    for (const auto& [k, v] : cfg.offspring) detail::emit_pair(os, k, v);
  }
  if (cfg.has_weight()) {
    os << "[weight]\n";
    for (const auto& [k, v] : cfg.weight) detail::emit_pair(os, k, v);
  }
  os << "[run]\n";
  detail::emit_pair(os, "alpha", cfg.alpha);
  os << "budget = " << cfg.budget << "\n";
  os << "cap = " << detail::format_double(cfg.cap) << "\n";
  detail::emit_pair(os, "collapse", cfg.collapse ? "true" : "false");
  detail::emit_pair(os, "conditioning", cfg.conditioning);
  os << "delta = " << detail::format_double(cfg.delta) << "\n";
  os << "depth = " << cfg.depth << "\n";
  if (!cfg.depths.empty()) os << "depths = " << detail::join_list(cfg.depths) << "\n";
  os << "epsilon = " << detail::format_double(cfg.epsilon) << "\n";
  detail::emit_pair(os, "format", cfg.format);
  detail::emit_pair(os, "omega", cfg.omega);
  detail::emit_pair(os, "out_dir", cfg.out_dir);
  if (!cfg.periods.empty()) os << "periods = " << detail::join_list(cfg.periods) << "\n";
  if (!cfg.r_grid.empty()) os << "r_grid = " << detail::join_list(cfg.r_grid) << "\n";
  os << "reps = " << cfg.reps << "\n";
  os << "seed = " << cfg.seed << "\n";
  // threads is an execution detail, not part of the experiment identity:
  // outputs are byte-identical across parallelism degrees, so it is kept out
  // of the canonical form, the hash, and every artifact header.
  detail::emit_pair(os, "toy", cfg.toy ? "true" : "false");
  return os.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const RunConfig& cfg) {
  static const char* hex = "0123456789abcdef";
  std::uint64_t h = fnv1a64(canonical_config(cfg));
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace brw
