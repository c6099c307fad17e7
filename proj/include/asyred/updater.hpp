#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stop_token>
#include <vector>

#include "paged_store.hpp"
#include "redundancy.hpp"
#include "shadow_state.hpp"

namespace asyred {

struct PassStats {
  std::uint64_t pages_checksummed = 0;
  std::uint64_t stripes_reparitied = 0;
  std::uint64_t batches = 0;
  std::uint64_t replayed_batches = 0;  // shadow batches left behind by an interrupted pass
  DirtyBitCounters dirty_ops;

  PassStats& operator+=(const PassStats& o) {
    pages_checksummed += o.pages_checksummed;
    stripes_reparitied += o.stripes_reparitied;
    batches += o.batches;
    replayed_batches += o.replayed_batches;
    dirty_ops += o.dirty_ops;
    return *this;
  }
  friend bool operator==(const PassStats&, const PassStats&) = default;
};

enum class UpdaterAction : std::uint8_t {
  replay_shadow,
  get_dirty,
  persist_shadow,
  fence_before_clear,
  clear_dirty,
  checksum,
  parity,
  fence_before_shadow_clear,
  shadow_clear,
  meta_checksum,
};

struct UpdaterStep {
  UpdaterAction action;
  std::size_t index = 0;  // page for checksum, stripe for parity, batch start otherwise
  bool pass_done = false;
};

/// Background redundancy maintenance, one pass at a time:
///
///   for each batch [i, i+B):
///     bv = get_dirty_bits; shadow = (bv, i); fence; clear_dirty_bits(bv)
///     checksum every set page; recompute parity of every stripe holding a set page
///     fence; shadow = 0
///   meta-checksum
///
/// `step()` performs exactly one of those actions so tests can interleave them with writers and the
/// scrubber. A pass that starts with a non-empty shadow first redoes that batch's redundancy,
/// which is what makes killing the updater mid-batch safe.
class Updater {
 public:
  Updater(PagedStore& store, RedundancyRegion& region, ShadowState& shadow)
      : store_(store), region_(region), shadow_(shadow) {
    if (region.num_pages() != store.num_pages() || region.page_size() != store.page_size())
      throw config_error("region does not match store geometry");
    if (shadow.capacity() < store.config().batch_size) throw config_error("shadow smaller than batch size");
  }

  bool in_pass() const { return phase_ != Phase::idle; }
  bool at_batch_boundary() const { return phase_ == Phase::idle || phase_ == Phase::get_dirty; }
  const PassStats& current() const { return stats_; }
  const PassStats& last_pass() const { return last_; }
  const PassStats& totals() const { return totals_; }
  std::uint64_t passes_completed() const { return passes_; }

  UpdaterStep step() {
    if (phase_ == Phase::idle) begin_pass();
    switch (phase_) {
      case Phase::replay: {
        region_.bump_epoch();
        bv_ = shadow_.load();
        batch_start_ = bv_.base_page();
        batch_end_ = bv_.end_page();
        plan_work();
        stats_.replayed_batches += 1;
        replaying_ = true;
        phase_ = Phase::work;
        return {UpdaterAction::replay_shadow, batch_start_};
      }
      case Phase::get_dirty: {
        batch_start_ = next_batch_;
        batch_end_ = std::min(batch_start_ + store_.config().batch_size, store_.num_pages());
        bv_ = store_.get_dirty_bits(batch_start_, batch_end_);
        empty_batch_ = bv_.none();
        if (!empty_batch_) region_.bump_epoch();
        phase_ = Phase::persist_shadow;
        return {UpdaterAction::get_dirty, batch_start_};
      }
      case Phase::persist_shadow:
        shadow_.persist(bv_);
        region_.log().record(PersistEvent::shadow_persist, batch_start_);
        phase_ = Phase::fence1;
        return {UpdaterAction::persist_shadow, batch_start_};
      case Phase::fence1:
        region_.log().record(PersistEvent::barrier, batch_start_);
        phase_ = Phase::clear_dirty;
        return {UpdaterAction::fence_before_clear, batch_start_};
      case Phase::clear_dirty:
        store_.clear_dirty_bits(batch_start_, batch_end_, bv_);
        region_.log().record(PersistEvent::dirty_clear, batch_start_);
        plan_work();
        replaying_ = false;
        phase_ = Phase::work;
        return {UpdaterAction::clear_dirty, batch_start_};
      case Phase::work: {
        if (work_pos_ < work_.size()) {
          const WorkItem w = work_[work_pos_++];
          if (w.parity) {
            region_.set_parity(w.index, region_.compute_stripe_parity(store_, w.index));
            stats_.stripes_reparitied += 1;
          } else {
            region_.set_checksum(w.index, store_.page_checksum(w.index));
            stats_.pages_checksummed += 1;
          }
          if (work_pos_ == work_.size()) phase_ = Phase::fence2;
          return {w.parity ? UpdaterAction::parity : UpdaterAction::checksum, w.index};
        }
        phase_ = Phase::fence2;
        [[fallthrough]];
      }
      case Phase::fence2:
        region_.log().record(PersistEvent::barrier, batch_start_);
        phase_ = Phase::shadow_clear;
        return {UpdaterAction::fence_before_shadow_clear, batch_start_};
      case Phase::shadow_clear: {
        shadow_.clear();
        region_.log().record(PersistEvent::shadow_clear, batch_start_);
        if (replaying_ || !empty_batch_) region_.bump_epoch();
        if (!replaying_) {
          stats_.batches += 1;
          next_batch_ = batch_end_;
        }
        replaying_ = false;
        phase_ = next_batch_ >= store_.num_pages() ? Phase::meta : Phase::get_dirty;
        return {UpdaterAction::shadow_clear, batch_start_};
      }
      case Phase::meta: {
        region_.set_meta_checksum(region_.compute_meta());
        stats_.dirty_ops = store_.counters() - counters_at_start_;
        last_ = stats_;
        totals_ += stats_;
        passes_ += 1;
        phase_ = Phase::idle;
        return {UpdaterAction::meta_checksum, 0, true};
      }
      case Phase::idle:
        break;
    }
    return {UpdaterAction::meta_checksum, 0, true};
  }

  /// Runs (or finishes) one pass.
  PassStats run_one_pass() {
    while (!step().pass_done) {
    }
    return last_;
  }

  /// Runs until the current batch has been fully processed. Returns true if that ended the pass.
  bool finish_batch() {
    while (true) {
      const UpdaterStep s = step();
      if (s.pass_done) return true;
      if (s.action == UpdaterAction::shadow_clear) return false;
    }
  }

 private:
  enum class Phase : std::uint8_t {
    idle,
    replay,
    get_dirty,
    persist_shadow,
    fence1,
    clear_dirty,
    work,
    fence2,
    shadow_clear,
    meta,
  };

  struct WorkItem {
    std::size_t index;
    bool parity;
  };

  void begin_pass() {
    stats_ = {};
    counters_at_start_ = store_.counters();
    next_batch_ = 0;
    phase_ = shadow_.any() ? Phase::replay : Phase::get_dirty;
  }

  // Checksums for every set page; parity once per stripe holding at least one set page.
  void plan_work() {
    work_.clear();
    work_pos_ = 0;
    const auto& sc = region_.stripes();
    std::size_t p = batch_start_;
    while (p < batch_end_) {
      const std::size_t stripe = sc.stripe_of(p);
      const std::size_t stripe_end = std::min(sc.first_page(stripe + 1), batch_end_);
      bool update_parity = false;
      for (; p < stripe_end; ++p) {
        if (bv_.test_page(p)) {
          update_parity = true;
          work_.push_back({p, false});
        }
      }
      if (update_parity) work_.push_back({stripe, true});
    }
  }

  PagedStore& store_;
  RedundancyRegion& region_;
  ShadowState& shadow_;

  Phase phase_ = Phase::idle;
  std::size_t next_batch_ = 0;
  std::size_t batch_start_ = 0;
  std::size_t batch_end_ = 0;
  bool empty_batch_ = false;
  bool replaying_ = false;
  DirtyBitvector bv_;
  std::vector<WorkItem> work_;
  std::size_t work_pos_ = 0;

  DirtyBitCounters counters_at_start_;
  PassStats stats_;
  PassStats last_;
  PassStats totals_;
  std::uint64_t passes_ = 0;
};

/// Blocks until `deadline` or until stop is requested; returns false when stopped.
using WaitUntilFn = std::function<bool(std::chrono::steady_clock::time_point, std::stop_token)>;

inline bool wait_until_or_stop(std::chrono::steady_clock::time_point deadline, std::stop_token st) {
  std::mutex mu;
  std::condition_variable_any cv;
  std::unique_lock lock(mu);
  cv.wait_until(lock, st, deadline, [] { return false; });
  return !st.stop_requested();
}

/// Invokes a pass every `period` on drift-free deadlines (deadline_k = start + k * period) until
/// stop is requested. A stop request is honoured at the next batch boundary. Returns passes run.
inline std::uint64_t run_periodic(Updater& updater, std::chrono::duration<double> period, std::stop_token st,
                                  const std::function<void(const PassStats&)>& on_pass = {},
                                  WaitUntilFn wait = wait_until_or_stop) {
  if (period.count() <= 0) throw config_error("period must be positive");
  using clock = std::chrono::steady_clock;
  const auto step = std::chrono::duration_cast<clock::duration>(period);
  auto deadline = clock::now() + step;
  std::uint64_t passes = 0;
  while (!st.stop_requested()) {
    if (!wait(deadline, st)) break;
    bool done = false;
    while (!done && !st.stop_requested()) done = updater.finish_batch();
    if (!done) break;
    ++passes;
    if (on_pass) on_pass(updater.last_pass());
    deadline += step;
  }
  return passes;
}

}  // namespace asyred
