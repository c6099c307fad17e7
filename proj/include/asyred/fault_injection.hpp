#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "battery.hpp"
#include "cost_model.hpp"
#include "paged_store.hpp"
#include "redundancy.hpp"
#include "shadow_state.hpp"
#include "updater.hpp"

namespace asyred {

enum class FaultKind : std::uint8_t { lost_write, misdirected_write, misdirected_read, rest_corruption, bit_flip };
enum class FaultTrigger : std::uint8_t { before_redundancy_update, after_redundancy_update, at_rest };

inline std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::lost_write: return "lost_write";
    case FaultKind::misdirected_write: return "misdirected_write";
    case FaultKind::misdirected_read: return "misdirected_read";
    case FaultKind::rest_corruption: return "rest_corruption";
    case FaultKind::bit_flip: return "bit_flip";
  }
  return "?";
}

inline std::string_view to_string(FaultTrigger t) {
  switch (t) {
    case FaultTrigger::before_redundancy_update: return "before_redundancy_update";
    case FaultTrigger::after_redundancy_update: return "after_redundancy_update";
    case FaultTrigger::at_rest: return "at_rest";
  }
  return "?";
}

inline std::optional<FaultKind> fault_kind_from_string(std::string_view s) {
  for (auto k : {FaultKind::lost_write, FaultKind::misdirected_write, FaultKind::misdirected_read,
                 FaultKind::rest_corruption, FaultKind::bit_flip})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::optional<FaultTrigger> fault_trigger_from_string(std::string_view s) {
  for (auto t : {FaultTrigger::before_redundancy_update, FaultTrigger::after_redundancy_update, FaultTrigger::at_rest})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

struct FaultEvent {
  FaultKind kind = FaultKind::rest_corruption;
  std::size_t target_page = 0;
  std::size_t aux_page = 0;  // misdirection destination (write) or source (read)
  FaultTrigger trigger = FaultTrigger::at_rest;
  std::uint64_t payload_seed = 0;
  double at_seconds = 0;  // simulated time the fault fires in a scheduled run

  bool misdirected() const { return kind == FaultKind::misdirected_write || kind == FaultKind::misdirected_read; }

  void validate(std::size_t num_pages) const {
    if (target_page >= num_pages) throw config_error("fault target page out of range");
    if (misdirected()) {
      if (aux_page >= num_pages) throw config_error("fault aux page out of range");
      if (aux_page == target_page) throw config_error("misdirected fault needs distinct pages");
    }
    if (at_seconds < 0) throw config_error("fault time must be non-negative");
  }

  friend bool operator==(const FaultEvent&, const FaultEvent&) = default;
};

inline std::vector<std::byte> seeded_bytes(std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::byte> out(len);
  for (std::size_t i = 0; i < len; i += 8) {
    const std::uint64_t v = rng();
    for (std::size_t j = 0; j < 8 && i + j < len; ++j) out[i + j] = static_cast<std::byte>((v >> (8 * j)) & 0xFF);
  }
  return out;
}

/// Firmware-level faults. Application writes that may later be lost go through `stage_write`,
/// which models the on-device write-back cache: the write is visible and sets the dirty bit like
/// any other, but until `destage_all` the injector can still drop it. Every injected mutation
/// bypasses dirty-bit tracking.
class FaultInjector {
 public:
  explicit FaultInjector(PagedStore& store) : store_(store) {}

  void stage_write(std::size_t page, std::size_t offset, std::span<const std::byte> payload) {
    StagedWrite w{page, offset, store_.read(page, offset, payload.size()), {payload.begin(), payload.end()}};
    store_.write(page, offset, payload);
    staged_.push_back(std::move(w));
  }

  std::size_t staged_count() const { return staged_.size(); }
  bool has_staged(std::size_t page) const { return find_staged(page).has_value(); }

  /// Drops the most recent staged write to `page`; its bytes revert to their pre-write content.
  bool inject_lost_write(std::size_t page) {
    auto i = find_staged(page);
    if (!i) return false;
    const StagedWrite& w = staged_[*i];
    store_.media_write(w.page, w.offset, w.old_bytes);
    staged_.erase(staged_.begin() + static_cast<std::ptrdiff_t>(*i));
    return true;
  }

  void inject_rest_corruption(std::size_t page, std::uint64_t payload_seed) {
    store_.media_write(page, 0, seeded_bytes(store_.page_size(), payload_seed));
  }

  void inject_media_bytes(std::size_t page, std::size_t offset, std::span<const std::byte> bytes) {
    store_.media_write(page, offset, bytes);
  }

  void inject_bit_flip(std::size_t page, std::uint64_t payload_seed) {
    std::mt19937_64 rng(payload_seed);
    const std::size_t bit = static_cast<std::size_t>(rng() % (store_.page_size() * 8));
    auto b = store_.read(page, bit / 8, 1);
    b[0] ^= static_cast<std::byte>(1u << (bit % 8));
    store_.media_write(page, bit / 8, b);
  }

  /// `aux_page` also receives the bytes of the latest staged write to `target_page`.
  bool inject_misdirected_write(std::size_t target_page, std::size_t aux_page) {
    if (target_page == aux_page) throw config_error("misdirected write needs distinct pages");
    auto i = find_staged(target_page);
    if (!i) return false;
    store_.media_write(aux_page, staged_[*i].offset, staged_[*i].new_bytes);
    return true;
  }

  /// A read of `target_page` served from `aux_page`. The store is not modified.
  std::vector<std::byte> misdirected_read(std::size_t target_page, std::size_t aux_page, std::size_t offset,
                                          std::size_t len) const {
    if (target_page == aux_page) throw config_error("misdirected read needs distinct pages");
    return store_.read(aux_page, offset, len);
  }

  /// Staged writes reach media and can no longer be lost.
  void destage_all() { staged_.clear(); }

 private:
  struct StagedWrite {
    std::size_t page;
    std::size_t offset;
    std::vector<std::byte> old_bytes;
    std::vector<std::byte> new_bytes;
  };

  std::optional<std::size_t> find_staged(std::size_t page) const {
    for (std::size_t i = staged_.size(); i-- > 0;)
      if (staged_[i].page == page) return i;
    return std::nullopt;
  }

  PagedStore& store_;
  std::vector<StagedWrite> staged_;
};

struct PowerFailureReport {
  PassStats pass;
  BatteryCost battery;
};

/// Power is lost: caches are battery-backed so every in-flight write is durable, and a final
/// redundancy pass runs on battery. Any updater that was mid-pass is abandoned; the battery pass
/// replays its shadow batch first.
inline PowerFailureReport simulate_power_failure(PagedStore& store, RedundancyRegion& region, ShadowState& shadow,
                                                 FaultInjector* injector, const BatteryModel& battery,
                                                 const CostModel& cost) {
  if (injector) injector->destage_all();
  Updater on_battery(store, region, shadow);
  PowerFailureReport r;
  r.pass = on_battery.run_one_pass();
  r.battery = battery_cost(battery, cost.pass_seconds(r.pass, store.num_pages()));
  return r;
}

}  // namespace asyred
