#pragma once

// Flat key=value experiment configuration.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "silt/error.hpp"
#include "silt/function_space.hpp"
#include "silt/operators.hpp"

namespace silt {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"gram-checks", "dyson",       "mean",       "moments",      "chaos-series",
                                                 "fw",          "clark-delta", "clark-wiener", "clark-general"};
  return names;
}

inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct ExperimentConfig {
  std::string experiment;
  std::string op = "identity";
  int k = 2;
  int p = 1;
  std::vector<double> eps;            // empty: experiment default
  std::size_t n = 256;
  std::vector<std::size_t> n_schedule;  // grid per eps stage; empty: n for all
  std::size_t n_paths = 10000;
  std::size_t n_mc = 1000000;
  std::uint64_t seed = kDefaultSeed;
  std::string output;  // prefix of <output>.summary.json / .detail.csv; default: experiment name
  std::string h = "const:1";
  double s = 0.25;
  double t = 0.75;
  int n_terms = 50;
  std::size_t shards = 8;
  unsigned threads = 0;

  std::string output_prefix() const { return output.empty() ? experiment : output; }
};

/// Seed default from SILT_SEED when set.
inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("SILT_SEED")) {
    const std::string s(env);
    std::size_t used = 0;
    try {
      const unsigned long long v = std::stoull(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError("SILT_SEED must be a non-negative integer (got '" + s + "')");
  }
  return kDefaultSeed;
}

inline ExperimentConfig default_config() {
  ExperimentConfig c;
  c.seed = default_seed();
  return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& v, const std::string& where, const std::string& key) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw InputError(where + ": " + key + " expects a number, got '" + v + "'");
  return x;
}

inline long long to_int(const std::string& v, const std::string& where, const std::string& key) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw InputError(where + ": " + key + " expects an integer, got '" + v + "'");
  return x;
}

inline long long positive(long long x, const std::string& where, const std::string& key) {
  if (x <= 0) throw InputError(where + ": " + key + " must be positive (got " + std::to_string(x) + ")");
  return x;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

/// Sets one key; `where` names the source ("line 3", "--k") for messages.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw, const std::string& where) {
  using namespace detail;
  const std::string v = trim(raw);
  if (key == "experiment") {
    c.experiment = v;
  } else if (key == "op") {
    if (v.empty()) throw InputError(where + ": op is empty");
    c.op = v;
  } else if (key == "k") {
    c.k = static_cast<int>(to_int(v, where, key));
    if (c.k < 1) throw InputError(where + ": k must be >= 1");
  } else if (key == "p") {
    c.p = static_cast<int>(positive(to_int(v, where, key), where, key));
  } else if (key == "eps") {
    c.eps.clear();
    for (const auto& item : split_list(v)) {
      const double e = to_double(item, where, key);
      if (e < 0.0) throw InputError(where + ": eps values must be >= 0 (got " + item + ")");
      c.eps.push_back(e);
    }
  } else if (key == "n") {
    c.n = static_cast<std::size_t>(positive(to_int(v, where, key), where, key));
  } else if (key == "n_schedule") {
    c.n_schedule.clear();
    for (const auto& item : split_list(v)) c.n_schedule.push_back(static_cast<std::size_t>(positive(to_int(item, where, key), where, key)));
  } else if (key == "n_paths") {
    c.n_paths = static_cast<std::size_t>(positive(to_int(v, where, key), where, key));
  } else if (key == "n_mc") {
    c.n_mc = static_cast<std::size_t>(positive(to_int(v, where, key), where, key));
  } else if (key == "seed") {
    const long long s = to_int(v, where, key);
    if (s < 0) throw InputError(where + ": seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "output") {
    c.output = v;
  } else if (key == "h") {
    c.h = v;
  } else if (key == "s") {
    c.s = to_double(v, where, key);
  } else if (key == "t") {
    c.t = to_double(v, where, key);
  } else if (key == "n_terms") {
    c.n_terms = static_cast<int>(positive(to_int(v, where, key), where, key));
  } else if (key == "shards") {
    c.shards = static_cast<std::size_t>(positive(to_int(v, where, key), where, key));
  } else if (key == "threads") {
    const long long t = to_int(v, where, key);
    if (t < 0) throw InputError(where + ": threads must be >= 0");
    c.threads = static_cast<unsigned>(t);
  } else {
    throw InputError(where + ": unknown key '" + key + "'");
  }
}

/// Test function text, sampled on an n-cell grid:
///   const:c         h = c
///   affine:a,b      h(r) = a + b r
///   sin:f           h(r) = sin(2 pi f r)
///   indicator:a,b   h = 1_[a,b)
inline GridFunction parse_test_function(const std::string& text, std::size_t n) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos)
    for (const auto& item : detail::split_list(text.substr(colon + 1))) args.push_back(detail::to_double(item, "h", text));
  auto need = [&](std::size_t m) {
    if (args.size() != m)
      throw InputError("test function '" + text + "' needs " + std::to_string(m) + " parameter(s)");
  };
  if (kind == "const") {
    need(1);
    return GridFunction::sample(n, [&](double) { return args[0]; });
  }
  if (kind == "affine") {
    need(2);
    return GridFunction::sample(n, [&](double r) { return args[0] + args[1] * r; });
  }
  if (kind == "sin") {
    need(1);
    return GridFunction::sample(n, [&](double r) { return std::sin(2.0 * std::numbers::pi * args[0] * r); });
  }
  if (kind == "indicator") {
    need(2);
    const Interval iv(args[0], args[1]);
    return GridFunction::sample(n, [&](double r) { return r >= iv.lo && r < iv.hi ? 1.0 : 0.0; });
  }
  throw InputError("unknown test function '" + text + "' (expected const:, affine:, sin:, indicator:)");
}

/// Cross-field checks once all settings are applied.
inline void finalize_config(const ExperimentConfig& c) {
  if (c.experiment.empty()) throw InputError("experiment name is required");
  bool known = false;
  for (const auto& n : experiment_names()) known = known || n == c.experiment;
  if (!known) throw InputError("unknown experiment '" + c.experiment + "'");
  if (c.n < 2) throw InputError("n must be >= 2");
  if (c.n_mc < 2) throw InputError("n_mc must be >= 2");
  if (c.n_paths < 2) throw InputError("n_paths must be >= 2");
  if (!(c.s >= 0.0 && c.s < c.t && c.t <= 1.0)) throw InputError("need 0 <= s < t <= 1");
  if (!c.n_schedule.empty() && !c.eps.empty() && c.n_schedule.size() != c.eps.size())
    throw InputError("n_schedule needs one grid size per eps value");
  parse_operator(c.op, c.n);
  parse_test_function(c.h, c.n);
}

/// Parses key=value lines ('#' starts a comment), fills defaults and range-checks.
inline ExperimentConfig validate_config(const std::string& raw) {
  ExperimentConfig c = default_config();
  std::istringstream in(raw);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) throw InputError(where + ": expected key=value, got '" + line + "'");
    apply_setting(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1), where);
  }
  finalize_config(c);
  return c;
}

/// Canonical key=value text (fixed key order), the input of the config hash.
inline std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](const auto& v) {
    std::ostringstream ls;
    ls.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) ls << (i ? "," : "") << v[i];
    return ls.str();
  };
  os << "experiment=" << c.experiment << "\nop=" << c.op << "\nk=" << c.k << "\np=" << c.p << "\neps=" << list(c.eps)
     << "\nn=" << c.n << "\nn_schedule=" << list(c.n_schedule) << "\nn_paths=" << c.n_paths << "\nn_mc=" << c.n_mc
     << "\nseed=" << c.seed << "\nh=" << c.h << "\ns=" << c.s << "\nt=" << c.t << "\nn_terms=" << c.n_terms
     << "\nshards=" << c.shards << "\n";
  return os.str();
}

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace silt
