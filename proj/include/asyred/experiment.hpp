#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "battery.hpp"
#include "config.hpp"
#include "cost_model.hpp"
#include "fault_injection.hpp"
#include "paged_store.hpp"
#include "redundancy.hpp"
#include "reliability.hpp"
#include "scrubber.hpp"
#include "shadow_state.hpp"
#include "updater.hpp"
#include "workload.hpp"

namespace asyred {

struct ExperimentConfig {
  StoreConfig store{4096, 64, 16384, 512};
  StripeConfig stripes;
  double period_s = 10.0;
  std::size_t scrub_every = 10;  // updater periods per scrub pass
  WorkloadSpec workload;
  double ops_per_second = 1000;   // aggregate over all threads, simulated time
  double duration_s = 60.0;
  std::size_t samples_per_period = 4;  // vulnerable-stripe samples; the last is taken just before the pass
  std::vector<FaultEvent> faults;
  std::optional<double> power_failure_at;
  BatteryModel battery;
  CostModel cost;
  double mttf_page_hours = 1e6;
  bool concurrent = false;  // overlap each pass and scrub with the next slice of writers
  std::uint64_t seed = 1;

  void validate() const {
    store.validate();
    stripes.validate();
    workload.validate(store);
    if (!(period_s > 0)) throw config_error("period must be positive");
    if (!(duration_s > 0)) throw config_error("duration must be positive");
    if (ops_per_second < 0) throw config_error("ops_per_second must be non-negative");
    if (scrub_every == 0) throw config_error("scrub_every must be at least 1");
    if (samples_per_period == 0) throw config_error("samples_per_period must be at least 1");
    if (!(mttf_page_hours > 0)) throw config_error("mttf_page must be positive");
    if (power_failure_at && *power_failure_at < 0) throw config_error("power failure time must be non-negative");
    for (const auto& f : faults) f.validate(store.num_pages);
  }
};

struct PassRecord {
  std::uint64_t index = 0;
  double time_s = 0;
  PassStats stats;
  double simulated_seconds = 0;
  bool final_pass = false;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<PassRecord> passes;
  WorkloadStats workload;
  std::vector<CorruptionReport> corruptions;
  std::uint64_t scrub_passes = 0;
  std::uint64_t faults_injected = 0;
  std::uint64_t silent_corruptions = 0;
  std::uint64_t misdirected_reads = 0;
  MttdlReport mttdl;
  std::optional<BatteryCost> battery;
  DirtyBitCounters dirty_ops;
  std::uint64_t total_checksums = 0;
  std::uint64_t total_parity = 0;
  double checksums_per_write = 0;
  double updater_seconds = 0;
  double effective_ops_per_sec = 0;
  bool halted = false;
  bool power_failed = false;

  std::uint64_t unrecoverable_count() const {
    return static_cast<std::uint64_t>(std::count_if(corruptions.begin(), corruptions.end(), [](const auto& c) {
      return c.outcome != RecoveryOutcome::recovered;
    }));
  }
  std::uint64_t recovered_count() const { return corruptions.size() - unrecoverable_count(); }

  /// 0 for a clean run (recovered corruptions included), 2 on any data loss.
  int exit_code() const { return unrecoverable_count() > 0 || silent_corruptions > 0 ? 2 : 0; }
};

/// Runs one scenario in simulated time: writers advance in slices, a redundancy pass closes every
/// period, scrubbing (with recovery) follows every `scrub_every` passes, faults fire on schedule.
/// A golden copy of what the application wrote is kept beside the store so silent corruption can
/// be counted at the end.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg)
      : cfg_(std::move(cfg)),
        store_((cfg_.validate(), cfg_.store)),
        golden_(cfg_.store),
        region_(store_, cfg_.stripes),
        shadow_(cfg_.store.batch_size),
        updater_(store_, region_, shadow_),
        scrubber_(store_, region_, shadow_, Scrubber::Options{true, 8}),
        injector_(store_),
        runner_(store_, seeded(cfg_.workload, cfg_.seed), cfg_.cost,
                [this](std::size_t page, std::size_t off, std::span<const std::byte> b) { golden_.write(page, off, b); }) {
    fired_.assign(cfg_.faults.size(), false);
  }

  PagedStore& store() { return store_; }
  RedundancyRegion& region() { return region_; }
  ShadowState& shadow() { return shadow_; }

  RunReport run() {
    RunReport rep;
    rep.config = cfg_;
    const std::size_t periods = static_cast<std::size_t>(std::ceil(cfg_.duration_s / cfg_.period_s - 1e-9));
    const std::size_t slices = cfg_.samples_per_period;
    const double slice_s = cfg_.period_s / static_cast<double>(slices);
    const double ops_per_slice = cfg_.ops_per_second * slice_s;
    double op_carry = 0;
    std::jthread background;

    bool stop = false;
    for (std::size_t k = 0; k < periods && !stop; ++k) {
      for (std::size_t j = 0; j < slices; ++j) {
        const double t0 = (static_cast<double>(k) * static_cast<double>(slices) + static_cast<double>(j)) * slice_s;
        const double t1 = t0 + slice_s;
        if (cfg_.power_failure_at && *cfg_.power_failure_at <= t0) {
          stop = true;
          break;
        }
        fire_due_faults(t1, rep);
        op_carry += ops_per_slice;
        const auto ops = static_cast<std::uint64_t>(op_carry);
        op_carry -= static_cast<double>(ops);
        runner_.run(ops);
        if (background.joinable()) background.join();
        sampler_.add(sample_vulnerable_stripes(store_, shadow_, cfg_.stripes));
      }
      if (stop) break;
      const double t_end = static_cast<double>(k + 1) * cfg_.period_s;
      const bool scrub_now = (k + 1) % cfg_.scrub_every == 0;
      if (cfg_.concurrent) {
        background = std::jthread([this, &rep, t_end, scrub_now] {
          run_pass(rep, t_end, false);
          if (scrub_now) scrub(rep);
        });
      } else {
        run_pass(rep, t_end, false);
        if (scrub_now) scrub(rep);
      }
    }
    if (background.joinable()) background.join();

    if (cfg_.power_failure_at && (stop || *cfg_.power_failure_at <= cfg_.duration_s)) {
      const auto pf = simulate_power_failure(store_, region_, shadow_, &injector_, cfg_.battery, cfg_.cost);
      rep.power_failed = true;
      rep.battery = pf.battery;
      record_pass(rep, pf.pass, *cfg_.power_failure_at, true);
      apply_after_update_faults();
    } else {
      run_pass(rep, cfg_.duration_s, true);
    }
    scrub(rep);

    finish(rep);
    return rep;
  }

 private:
  static WorkloadSpec seeded(WorkloadSpec spec, std::uint64_t seed) {
    spec.seed = seed;
    return spec;
  }

  void run_pass(RunReport& rep, double t, bool final_pass) {
    const PassStats stats = updater_.run_one_pass();
    record_pass(rep, stats, t, final_pass);
    apply_after_update_faults();
  }

  void record_pass(RunReport& rep, const PassStats& stats, double t, bool final_pass) {
    PassRecord r;
    r.index = rep.passes.size();
    r.time_s = t;
    r.stats = stats;
    r.simulated_seconds = cfg_.cost.pass_seconds(stats, store_.num_pages());
    r.final_pass = final_pass;
    rep.passes.push_back(r);
  }

  void scrub(RunReport& rep) {
    scrubber_.scrub_one_pass();
    rep.scrub_passes += 1;
  }

  void fire_due_faults(double before, RunReport& rep) {
    for (std::size_t i = 0; i < cfg_.faults.size(); ++i) {
      if (fired_[i] || cfg_.faults[i].at_seconds >= before) continue;
      fired_[i] = true;
      fire(cfg_.faults[i], rep);
    }
  }

  void fire(const FaultEvent& f, RunReport& rep) {
    std::lock_guard g(fault_mu_);
    rep.faults_injected += 1;
    switch (f.kind) {
      case FaultKind::rest_corruption:
        injector_.inject_rest_corruption(f.target_page, f.payload_seed);
        return;
      case FaultKind::bit_flip:
        injector_.inject_bit_flip(f.target_page, f.payload_seed);
        return;
      case FaultKind::misdirected_read: {
        const auto got = injector_.misdirected_read(f.target_page, f.aux_page, 0, store_.page_size());
        if (got != golden_.page_copy(f.target_page)) rep.misdirected_reads += 1;
        return;
      }
      case FaultKind::lost_write:
      case FaultKind::misdirected_write: {
        const auto payload = seeded_bytes(cfg_.workload.io_size, f.payload_seed);
        injector_.stage_write(f.target_page, 0, payload);
        golden_.write(f.target_page, 0, payload);
        if (f.trigger == FaultTrigger::before_redundancy_update)
          apply_staged_fault(f);
        else
          after_update_.push_back(f);
        return;
      }
    }
  }

  void apply_staged_fault(const FaultEvent& f) {
    if (f.kind == FaultKind::lost_write)
      injector_.inject_lost_write(f.target_page);
    else
      injector_.inject_misdirected_write(f.target_page, f.aux_page);
  }

  void apply_after_update_faults() {
    std::lock_guard g(fault_mu_);
    for (const auto& f : after_update_) apply_staged_fault(f);
    after_update_.clear();
  }

  void finish(RunReport& rep) {
    rep.workload = runner_.totals();
    rep.corruptions = scrubber_.reports();
    rep.halted = scrubber_.halted();
    std::set<std::size_t> reported;
    for (const auto& c : rep.corruptions) reported.insert(c.page);
    std::vector<std::byte> a(store_.page_size());
    std::vector<std::byte> b(store_.page_size());
    for (std::size_t p = 0; p < store_.num_pages(); ++p) {
      store_.snapshot_page(p, a);
      golden_.snapshot_page(p, b);
      if (a != b && !reported.count(p)) rep.silent_corruptions += 1;
    }
    for (const auto& pr : rep.passes) {
      rep.dirty_ops += pr.stats.dirty_ops;
      rep.total_checksums += pr.stats.pages_checksummed;
      rep.total_parity += pr.stats.stripes_reparitied;
      if (!pr.final_pass) rep.updater_seconds += pr.simulated_seconds;
    }
    rep.checksums_per_write =
        rep.workload.writes ? static_cast<double>(rep.total_checksums) / static_cast<double>(rep.workload.writes) : 0.0;
    const double busy = rep.workload.simulated_seconds + rep.updater_seconds;
    rep.effective_ops_per_sec = busy > 0 ? static_cast<double>(rep.workload.ops) / busy : 0.0;
    rep.mttdl = make_mttdl_report(sampler_, store_.num_pages(), cfg_.stripes, cfg_.mttf_page_hours);
  }

  ExperimentConfig cfg_;
  PagedStore store_;
  PagedStore golden_;
  RedundancyRegion region_;
  ShadowState shadow_;
  Updater updater_;
  Scrubber scrubber_;
  FaultInjector injector_;
  WorkloadRunner runner_;
  VulnerabilitySampler sampler_;
  std::vector<bool> fired_;
  std::vector<FaultEvent> after_update_;
  std::mutex fault_mu_;
};

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  Experiment e(cfg);
  return e.run();
}

}  // namespace asyred
