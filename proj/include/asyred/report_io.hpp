#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "experiment.hpp"

namespace asyred {

NLOHMANN_JSON_SERIALIZE_ENUM(FaultKind, {{FaultKind::lost_write, "lost_write"},
                                         {FaultKind::misdirected_write, "misdirected_write"},
                                         {FaultKind::misdirected_read, "misdirected_read"},
                                         {FaultKind::rest_corruption, "rest_corruption"},
                                         {FaultKind::bit_flip, "bit_flip"}})
NLOHMANN_JSON_SERIALIZE_ENUM(FaultTrigger, {{FaultTrigger::before_redundancy_update, "before_redundancy_update"},
                                            {FaultTrigger::after_redundancy_update, "after_redundancy_update"},
                                            {FaultTrigger::at_rest, "at_rest"}})
NLOHMANN_JSON_SERIALIZE_ENUM(AccessMode, {{AccessMode::write_only, "write_only"},
                                          {AccessMode::read_only, "read_only"},
                                          {AccessMode::mixed, "mixed"}})
NLOHMANN_JSON_SERIALIZE_ENUM(AccessPattern, {{AccessPattern::uniform_random, "uniform_random"},
                                             {AccessPattern::sequential, "sequential"},
                                             {AccessPattern::zipf, "zipf"}})
NLOHMANN_JSON_SERIALIZE_ENUM(RecoveryOutcome, {{RecoveryOutcome::recovered, "recovered"},
                                               {RecoveryOutcome::unrecoverable_dirty_stripe, "unrecoverable_dirty_stripe"},
                                               {RecoveryOutcome::unrecoverable, "unrecoverable"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StoreConfig, page_size, cache_line, num_pages, batch_size)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StripeConfig, data_pages_per_stripe)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(WorkloadSpec, mode, read_fraction, pattern, zipf_theta, io_size, total_ops,
                                   threads, seed, shared_range)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FaultEvent, kind, target_page, aux_page, trigger, payload_seed, at_seconds)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BatteryModel, server_watts, ultracap_usd_per_kj, liion_usd_per_kj)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BatteryCost, pass_seconds, energy_kj, ultracap_usd, liion_usd)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CostModel, checksum_ns_per_page, parity_ns_per_stripe, syscall_ns, walk_step_ns,
                                   dirty_bit_ns, invalidation_ns, meta_ns_per_page, write_op_ns, read_op_ns)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DirtyBitCounters, get_calls, clear_calls, walk_steps, bits_read, invalidations)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PassStats, pages_checksummed, stripes_reparitied, batches, replayed_batches,
                                   dirty_ops)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PassRecord, index, time_s, stats, simulated_seconds, final_pass)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(WorkloadStats, ops, reads, writes, distinct_pages_touched, distinct_pages_written,
                                   simulated_seconds, thread_ops_per_sec)

// Infinity (no vulnerable stripes) has no JSON spelling; it is written as null.
inline void to_json(nlohmann::json& j, const MttdlReport& m) {
  auto num = [](double v) { return std::isinf(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  j = {{"total_pages", m.total_pages},   {"pages_per_stripe", m.pages_per_stripe},
       {"vulnerable_avg", m.vulnerable_avg}, {"vulnerable_max", m.vulnerable_max},
       {"samples", m.samples},           {"mttf_page", m.mttf_page},
       {"mttdl_none", m.mttdl_none},     {"mttdl_protected", num(m.mttdl_protected)},
       {"improvement", num(m.improvement)}};
}

inline void from_json(const nlohmann::json& j, MttdlReport& m) {
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
  };
  j.at("total_pages").get_to(m.total_pages);
  j.at("pages_per_stripe").get_to(m.pages_per_stripe);
  j.at("vulnerable_avg").get_to(m.vulnerable_avg);
  j.at("vulnerable_max").get_to(m.vulnerable_max);
  j.at("samples").get_to(m.samples);
  j.at("mttf_page").get_to(m.mttf_page);
  j.at("mttdl_none").get_to(m.mttdl_none);
  m.mttdl_protected = num(j.at("mttdl_protected"));
  m.improvement = num(j.at("improvement"));
}

inline void to_json(nlohmann::json& j, const CorruptionReport& c) {
  j = {{"pass", c.pass}, {"page", c.page}, {"stripe", c.stripe}, {"outcome", nullptr}};
  if (c.outcome) j["outcome"] = *c.outcome;
}

inline void from_json(const nlohmann::json& j, CorruptionReport& c) {
  j.at("pass").get_to(c.pass);
  j.at("page").get_to(c.page);
  j.at("stripe").get_to(c.stripe);
  if (j.at("outcome").is_null())
    c.outcome.reset();
  else
    c.outcome = j.at("outcome").get<RecoveryOutcome>();
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"store", c.store},
       {"stripes", c.stripes},
       {"period_s", c.period_s},
       {"scrub_every", c.scrub_every},
       {"workload", c.workload},
       {"ops_per_second", c.ops_per_second},
       {"duration_s", c.duration_s},
       {"samples_per_period", c.samples_per_period},
       {"faults", c.faults},
       {"power_failure_at", nullptr},
       {"battery", c.battery},
       {"cost", c.cost},
       {"mttf_page_hours", c.mttf_page_hours},
       {"concurrent", c.concurrent},
       {"seed", c.seed}};
  if (c.power_failure_at) j["power_failure_at"] = *c.power_failure_at;
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  j.at("store").get_to(c.store);
  j.at("stripes").get_to(c.stripes);
  j.at("period_s").get_to(c.period_s);
  j.at("scrub_every").get_to(c.scrub_every);
  j.at("workload").get_to(c.workload);
  j.at("ops_per_second").get_to(c.ops_per_second);
  j.at("duration_s").get_to(c.duration_s);
  j.at("samples_per_period").get_to(c.samples_per_period);
  j.at("faults").get_to(c.faults);
  if (j.at("power_failure_at").is_null())
    c.power_failure_at.reset();
  else
    c.power_failure_at = j.at("power_failure_at").get<double>();
  j.at("battery").get_to(c.battery);
  j.at("cost").get_to(c.cost);
  j.at("mttf_page_hours").get_to(c.mttf_page_hours);
  j.at("concurrent").get_to(c.concurrent);
  j.at("seed").get_to(c.seed);
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
  j = {{"config", r.config},
       {"passes", r.passes},
       {"workload", r.workload},
       {"corruptions", r.corruptions},
       {"scrub_passes", r.scrub_passes},
       {"faults_injected", r.faults_injected},
       {"silent_corruptions", r.silent_corruptions},
       {"misdirected_reads", r.misdirected_reads},
       {"mttdl", r.mttdl},
       {"battery", nullptr},
       {"dirty_ops", r.dirty_ops},
       {"total_checksums", r.total_checksums},
       {"total_parity", r.total_parity},
       {"checksums_per_write", r.checksums_per_write},
       {"updater_seconds", r.updater_seconds},
       {"effective_ops_per_sec", r.effective_ops_per_sec},
       {"halted", r.halted},
       {"power_failed", r.power_failed},
       {"exit_code", r.exit_code()}};
  if (r.battery) j["battery"] = *r.battery;
}

inline void from_json(const nlohmann::json& j, RunReport& r) {
  j.at("config").get_to(r.config);
  j.at("passes").get_to(r.passes);
  j.at("workload").get_to(r.workload);
  j.at("corruptions").get_to(r.corruptions);
  j.at("scrub_passes").get_to(r.scrub_passes);
  j.at("faults_injected").get_to(r.faults_injected);
  j.at("silent_corruptions").get_to(r.silent_corruptions);
  j.at("misdirected_reads").get_to(r.misdirected_reads);
  j.at("mttdl").get_to(r.mttdl);
  if (j.at("battery").is_null())
    r.battery.reset();
  else
    r.battery = j.at("battery").get<BatteryCost>();
  j.at("dirty_ops").get_to(r.dirty_ops);
  j.at("total_checksums").get_to(r.total_checksums);
  j.at("total_parity").get_to(r.total_parity);
  j.at("checksums_per_write").get_to(r.checksums_per_write);
  j.at("updater_seconds").get_to(r.updater_seconds);
  j.at("effective_ops_per_sec").get_to(r.effective_ops_per_sec);
  j.at("halted").get_to(r.halted);
  j.at("power_failed").get_to(r.power_failed);
}

// ---- CSV -------------------------------------------------------------------------------------
// Column orders below are fixed; README.md documents them.

inline const std::vector<std::string>& summary_csv_columns() {
  static const std::vector<std::string> cols = {
      "param", "value", "num_pages", "batch_size", "stripe_pages", "period_s", "threads", "duration_s",
      "ops", "writes", "distinct_pages_written", "passes", "total_checksums", "total_parity",
      "checksums_per_write", "get_calls", "clear_calls", "syscalls", "walk_steps", "invalidations",
      "updater_seconds", "effective_ops_per_sec", "corruptions", "recovered", "unrecoverable",
      "silent_corruptions", "vulnerable_avg", "mttdl_improvement", "battery_pass_s", "battery_kj",
      "ultracap_usd", "liion_usd", "exit_code"};
  return cols;
}

inline std::string csv_number(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void write_summary_csv_row(std::ostream& os, const RunReport& r, const std::string& param = "",
                                  const std::string& value = "") {
  const auto& c = r.config;
  std::vector<std::string> f = {
      param,
      value,
      std::to_string(c.store.num_pages),
      std::to_string(c.store.batch_size),
      std::to_string(c.stripes.pages_per_stripe()),
      csv_number(c.period_s),
      std::to_string(c.workload.threads),
      csv_number(c.duration_s),
      std::to_string(r.workload.ops),
      std::to_string(r.workload.writes),
      std::to_string(r.workload.distinct_pages_written),
      std::to_string(r.passes.size()),
      std::to_string(r.total_checksums),
      std::to_string(r.total_parity),
      csv_number(r.checksums_per_write),
      std::to_string(r.dirty_ops.get_calls),
      std::to_string(r.dirty_ops.clear_calls),
      std::to_string(r.dirty_ops.syscalls()),
      std::to_string(r.dirty_ops.walk_steps),
      std::to_string(r.dirty_ops.invalidations),
      csv_number(r.updater_seconds),
      csv_number(r.effective_ops_per_sec),
      std::to_string(r.corruptions.size()),
      std::to_string(r.recovered_count()),
      std::to_string(r.unrecoverable_count()),
      std::to_string(r.silent_corruptions),
      csv_number(r.mttdl.vulnerable_avg),
      csv_number(r.mttdl.improvement),
      r.battery ? csv_number(r.battery->pass_seconds) : "",
      r.battery ? csv_number(r.battery->energy_kj) : "",
      r.battery ? csv_number(r.battery->ultracap_usd) : "",
      r.battery ? csv_number(r.battery->liion_usd) : "",
      std::to_string(r.exit_code())};
  for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
  os << '\n';
}

inline void write_csv_header(std::ostream& os, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

inline const std::vector<std::string>& passes_csv_columns() {
  static const std::vector<std::string> cols = {
      "pass", "time_s", "final", "pages_checksummed", "stripes_reparitied", "batches", "replayed_batches",
      "get_calls", "clear_calls", "walk_steps", "bits_read", "invalidations", "simulated_seconds"};
  return cols;
}

inline void write_passes_csv(std::ostream& os, const RunReport& r) {
  write_csv_header(os, passes_csv_columns());
  for (const auto& p : r.passes) {
    const auto& d = p.stats.dirty_ops;
    os << p.index << ',' << csv_number(p.time_s) << ',' << (p.final_pass ? 1 : 0) << ',' << p.stats.pages_checksummed
       << ',' << p.stats.stripes_reparitied << ',' << p.stats.batches << ',' << p.stats.replayed_batches << ','
       << d.get_calls << ',' << d.clear_calls << ',' << d.walk_steps << ',' << d.bits_read << ',' << d.invalidations
       << ',' << csv_number(p.simulated_seconds) << '\n';
  }
}

inline const std::vector<std::string>& corruptions_csv_columns() {
  static const std::vector<std::string> cols = {"pass", "page", "stripe", "outcome"};
  return cols;
}

inline void write_corruptions_csv(std::ostream& os, const RunReport& r) {
  write_csv_header(os, corruptions_csv_columns());
  for (const auto& c : r.corruptions)
    os << c.pass << ',' << c.page << ',' << c.stripe << ',' << (c.outcome ? to_string(*c.outcome) : "none") << '\n';
}

/// Appends one summary row, writing the header only when the file is new or empty.
inline void append_summary_csv(const std::filesystem::path& path, const RunReport& r, const std::string& param = "",
                               const std::string& value = "") {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream os(path, std::ios::app);
  if (!os) throw io::format_error("cannot open " + path.string());
  if (fresh) write_csv_header(os, summary_csv_columns());
  write_summary_csv_row(os, r, param, value);
}

/// report.json, passes.csv, corruptions.csv and summary.csv under `dir`.
inline void write_report_files(const std::filesystem::path& dir, const RunReport& r, const std::string& param = "",
                               const std::string& value = "") {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "report.json", std::ios::trunc);
    os << nlohmann::json(r).dump(2) << '\n';
  }
  {
    std::ofstream os(dir / "passes.csv", std::ios::trunc);
    write_passes_csv(os, r);
  }
  {
    std::ofstream os(dir / "corruptions.csv", std::ios::trunc);
    write_corruptions_csv(os, r);
  }
  std::filesystem::remove(dir / "summary.csv");
  append_summary_csv(dir / "summary.csv", r, param, value);
}

}  // namespace asyred
