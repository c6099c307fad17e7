#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "experiment.hpp"

namespace asyred {

/// Flat key-value configuration with sections:
///
///   [store]    page_size cache_line num_pages batch_size stripe_data_pages
///   [updater]  period scrub_every samples_per_period concurrent
///   [workload] mode read_fraction pattern zipf_theta io_size threads shared_range
///              ops_per_second duration ycsb
///   [faults]   power_failure_at, and any number of
///              event = <kind> page=<n> [aux=<n>] [trigger=<t>] [seed=<n>] [at=<seconds>]
///   [battery]  watts ultracap_usd_per_kj liion_usd_per_kj
///   [cost]     checksum_ns_per_page parity_ns_per_stripe syscall_ns walk_step_ns dirty_bit_ns
///              invalidation_ns meta_ns_per_page write_op_ns read_op_ns
///   [run]      seed mttf_page_hours
///
/// `#` and `;` start comments. Any key can be overridden by the environment variable
/// ASYRED_<SECTION>_<KEY> (upper case).
using EnvLookup = std::function<const char*(const char*)>;

inline const char* process_env(const char* name) { return std::getenv(name); }

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    out = static_cast<T>(std::strtod(v.c_str(), &end));
    if (v.empty() || end != v.c_str() + v.size()) throw config_error(key + ": expected a number, got '" + v + "'");
  } else {
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw config_error(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw config_error(key + ": expected a boolean, got '" + v + "'");
}

inline FaultEvent parse_fault_event(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  auto k = fault_kind_from_string(kind);
  if (!k) throw config_error("unknown fault kind '" + kind + "'");
  FaultEvent f;
  f.kind = *k;
  bool have_page = false;
  for (std::string tok; in >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw config_error("fault field '" + tok + "' is not key=value");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "page") {
      f.target_page = parse_number<std::size_t>("fault page", val);
      have_page = true;
    } else if (key == "aux") {
      f.aux_page = parse_number<std::size_t>("fault aux", val);
    } else if (key == "trigger") {
      auto t = fault_trigger_from_string(val);
      if (!t) throw config_error("unknown fault trigger '" + val + "'");
      f.trigger = *t;
    } else if (key == "seed") {
      f.payload_seed = parse_number<std::uint64_t>("fault seed", val);
    } else if (key == "at") {
      f.at_seconds = parse_number<double>("fault at", val);
    } else {
      throw config_error("unknown fault field '" + key + "'");
    }
  }
  if (!have_page) throw config_error("fault event needs page=<n>");
  return f;
}

}  // namespace detail

/// Sets one "section.key" option. Throws config_error for unknown keys or bad values.
inline void apply_option(ExperimentConfig& c, const std::string& key, const std::string& v) {
  using detail::parse_bool;
  using detail::parse_number;
  auto sz = [&] { return parse_number<std::size_t>(key, v); };
  auto dbl = [&] { return parse_number<double>(key, v); };

  if (key == "store.page_size") c.store.page_size = sz();
  else if (key == "store.cache_line") c.store.cache_line = sz();
  else if (key == "store.num_pages") c.store.num_pages = sz();
  else if (key == "store.batch_size") c.store.batch_size = sz();
  else if (key == "store.stripe_data_pages") c.stripes.data_pages_per_stripe = sz();
  else if (key == "updater.period") c.period_s = dbl();
  else if (key == "updater.scrub_every") c.scrub_every = sz();
  else if (key == "updater.samples_per_period") c.samples_per_period = sz();
  else if (key == "updater.concurrent") c.concurrent = parse_bool(key, v);
  else if (key == "workload.mode") {
    auto m = access_mode_from_string(v);
    if (!m) throw config_error(key + ": unknown mode '" + v + "'");
    c.workload.mode = *m;
  } else if (key == "workload.read_fraction") c.workload.read_fraction = dbl();
  else if (key == "workload.pattern") {
    auto p = access_pattern_from_string(v);
    if (!p) throw config_error(key + ": unknown pattern '" + v + "'");
    c.workload.pattern = *p;
  } else if (key == "workload.zipf_theta") c.workload.zipf_theta = dbl();
  else if (key == "workload.io_size") c.workload.io_size = sz();
  else if (key == "workload.threads") c.workload.threads = sz();
  else if (key == "workload.shared_range") c.workload.shared_range = parse_bool(key, v);
  else if (key == "workload.ops_per_second") c.ops_per_second = dbl();
  else if (key == "workload.duration") c.duration_s = dbl();
  else if (key == "workload.ycsb") {
    double rf = 0;
    if (v == "a" || v == "A") rf = 0.5;
    else if (v == "b" || v == "B") rf = 0.95;
    else if (v == "c" || v == "C") rf = 1.0;
    else throw config_error(key + ": expected a, b or c");
    const auto keep = c.workload;
    c.workload = make_ycsb_like_mix(rf);
    c.workload.io_size = keep.io_size;
    c.workload.threads = keep.threads;
    c.workload.shared_range = keep.shared_range;
  } else if (key == "faults.event") c.faults.push_back(detail::parse_fault_event(v));
  else if (key == "faults.power_failure_at") c.power_failure_at = dbl();
  else if (key == "battery.watts") c.battery.server_watts = dbl();
  else if (key == "battery.ultracap_usd_per_kj") c.battery.ultracap_usd_per_kj = dbl();
  else if (key == "battery.liion_usd_per_kj") c.battery.liion_usd_per_kj = dbl();
  else if (key == "cost.checksum_ns_per_page") c.cost.checksum_ns_per_page = dbl();
  else if (key == "cost.parity_ns_per_stripe") c.cost.parity_ns_per_stripe = dbl();
  else if (key == "cost.syscall_ns") c.cost.syscall_ns = dbl();
  else if (key == "cost.walk_step_ns") c.cost.walk_step_ns = dbl();
  else if (key == "cost.dirty_bit_ns") c.cost.dirty_bit_ns = dbl();
  else if (key == "cost.invalidation_ns") c.cost.invalidation_ns = dbl();
  else if (key == "cost.meta_ns_per_page") c.cost.meta_ns_per_page = dbl();
  else if (key == "cost.write_op_ns") c.cost.write_op_ns = dbl();
  else if (key == "cost.read_op_ns") c.cost.read_op_ns = dbl();
  else if (key == "run.seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "run.mttf_page_hours") c.mttf_page_hours = dbl();
  else throw config_error("unknown option '" + key + "'");
}

inline const std::vector<std::string>& known_option_keys() {
  static const std::vector<std::string> keys = {
      "store.page_size", "store.cache_line", "store.num_pages", "store.batch_size", "store.stripe_data_pages",
      "updater.period", "updater.scrub_every", "updater.samples_per_period", "updater.concurrent",
      "workload.ycsb", "workload.mode", "workload.read_fraction", "workload.pattern", "workload.zipf_theta",
      "workload.io_size", "workload.threads", "workload.shared_range", "workload.ops_per_second",
      "workload.duration", "faults.power_failure_at", "battery.watts", "battery.ultracap_usd_per_kj",
      "battery.liion_usd_per_kj", "cost.checksum_ns_per_page", "cost.parity_ns_per_stripe", "cost.syscall_ns",
      "cost.walk_step_ns", "cost.dirty_bit_ns", "cost.invalidation_ns", "cost.meta_ns_per_page",
      "cost.write_op_ns", "cost.read_op_ns", "run.seed", "run.mttf_page_hours"};
  return keys;
}

/// Parses configuration text. Options apply in file order, then environment overrides.
inline ExperimentConfig parse_config(std::string_view text, const EnvLookup& env = process_env) {
  ExperimentConfig cfg;
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    const auto cut = raw.find_first_of("#;");
    std::string line = detail::trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw config_error("line " + std::to_string(lineno) + ": expected key = value inside a section");
    const std::string key = section + "." + detail::trim(std::string_view(line).substr(0, eq));
    try {
      apply_option(cfg, key, detail::trim(std::string_view(line).substr(eq + 1)));
    } catch (const config_error& e) {
      throw config_error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (env) {
    for (const auto& key : known_option_keys()) {
      std::string var = "ASYRED_" + detail::upper(key);
      std::replace(var.begin(), var.end(), '.', '_');
      if (const char* v = env(var.c_str())) apply_option(cfg, key, v);
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const EnvLookup& env = process_env) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), env);
}

/// Sweepable parameters: period (seconds), batch_size, threads, stripe_size (pages per stripe,
/// parity included).
inline void apply_sweep_param(ExperimentConfig& c, const std::string& name, const std::string& value) {
  if (name == "period") c.period_s = detail::parse_number<double>(name, value);
  else if (name == "batch_size") c.store.batch_size = detail::parse_number<std::size_t>(name, value);
  else if (name == "threads") c.workload.threads = detail::parse_number<std::size_t>(name, value);
  else if (name == "stripe_size") {
    const auto n = detail::parse_number<std::size_t>(name, value);
    if (n < 2) throw config_error("stripe_size must be at least 2");
    c.stripes.data_pages_per_stripe = n - 1;
  } else throw config_error("cannot sweep '" + name + "'; use period, batch_size, threads or stripe_size");
}

}  // namespace asyred
