#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paged_store.hpp"
#include "redundancy.hpp"
#include "shadow_state.hpp"

namespace asyred {

enum class RecoveryOutcome : std::uint8_t {
  recovered,
  unrecoverable_dirty_stripe,
  unrecoverable,  // reconstruction did not match the page checksum (more than one bad page)
};

inline std::string_view to_string(RecoveryOutcome o) {
  switch (o) {
    case RecoveryOutcome::recovered: return "recovered";
    case RecoveryOutcome::unrecoverable_dirty_stripe: return "unrecoverable_dirty_stripe";
    case RecoveryOutcome::unrecoverable: return "unrecoverable";
  }
  return "?";
}

inline std::optional<RecoveryOutcome> recovery_outcome_from_string(std::string_view s) {
  for (auto o : {RecoveryOutcome::recovered, RecoveryOutcome::unrecoverable_dirty_stripe, RecoveryOutcome::unrecoverable})
    if (to_string(o) == s) return o;
  return std::nullopt;
}

struct CorruptionReport {
  std::uint64_t pass = 0;
  std::size_t page = 0;
  std::size_t stripe = 0;
  std::optional<RecoveryOutcome> outcome;  // empty when recovery was not attempted

  friend bool operator==(const CorruptionReport&, const CorruptionReport&) = default;
};

struct ScrubReport {
  std::uint64_t pass = 0;
  std::uint64_t pages_verified = 0;
  std::uint64_t pages_skipped = 0;  // covered-pending at the clean check or the recheck
  std::uint64_t retries = 0;        // updater epoch moved under a mismatch; page re-examined
  std::uint64_t deferred = 0;       // gave up after max retries, left for the next pass
  std::vector<CorruptionReport> reports;
};

/// Rebuilds `page` from its stripe's parity when no page of the stripe has pending redundancy.
/// The rebuilt bytes must match the stored page checksum before they are written back.
inline RecoveryOutcome attempt_recovery(PagedStore& store, const RedundancyRegion& region, const ShadowState& shadow,
                                        std::size_t page) {
  const std::size_t stripe = region.stripes().stripe_of(page);
  auto [first, last] = region.stripe_pages(stripe);
  for (std::size_t q = first; q < last; ++q)
    if (is_covered_pending(shadow, store, q)) return RecoveryOutcome::unrecoverable_dirty_stripe;

  std::vector<std::byte> rebuilt = region.parity(stripe);
  std::vector<std::byte> buf(store.page_size());
  for (std::size_t q = first; q < last; ++q) {
    if (q == page) continue;
    store.snapshot_page(q, buf);
    xor_into(rebuilt, buf);
  }
  if (compute_page_checksum(rebuilt) != region.checksum(page)) return RecoveryOutcome::unrecoverable;
  if (!store.restore_page_if_clean(page, rebuilt)) return RecoveryOutcome::unrecoverable_dirty_stripe;
  return RecoveryOutcome::recovered;
}

enum class ScrubAction : std::uint8_t { check_clean, read_checksum, verify, recheck };

struct ScrubStep {
  ScrubAction action;
  std::size_t page = 0;
  bool pass_done = false;
  bool reported = false;
};

/// Verifies the checksum of every clean page, lowest index first. A mismatch is reported only if
/// the page is still clean on a second look and no updater batch ran in between; otherwise the
/// page is skipped or re-examined. A report halts the run (the flag stays set).
class Scrubber {
 public:
  struct Options {
    bool recover = false;
    unsigned max_retries = 8;
  };

  Scrubber(PagedStore& store, const RedundancyRegion& region, const ShadowState& shadow)
      : Scrubber(store, region, shadow, Options{}) {}
  Scrubber(PagedStore& store, const RedundancyRegion& region, const ShadowState& shadow, Options opts)
      : store_(store), region_(region), shadow_(shadow), opts_(opts) {}

  bool halted() const { return halted_; }
  bool in_pass() const { return in_pass_; }
  std::uint64_t passes_completed() const { return passes_; }
  const std::vector<CorruptionReport>& reports() const { return all_reports_; }
  const ScrubReport& last_pass() const { return last_; }

  ScrubStep step() {
    if (!in_pass_) {
      in_pass_ = true;
      page_ = 0;
      retries_ = 0;
      phase_ = Phase::check_clean;
      current_ = {};
      current_.pass = passes_;
    }
    const std::size_t page = page_;
    switch (phase_) {
      case Phase::check_clean:
        epoch_ = region_.epoch();
        if (is_covered_pending(shadow_, store_, page)) {
          current_.pages_skipped += 1;
          return advance(ScrubAction::check_clean);
        }
        phase_ = Phase::read_checksum;
        return {ScrubAction::check_clean, page};
      case Phase::read_checksum:
        expected_ = region_.checksum(page);
        phase_ = Phase::verify;
        return {ScrubAction::read_checksum, page};
      case Phase::verify:
        if (store_.page_checksum(page) == expected_) {
          current_.pages_verified += 1;
          return advance(ScrubAction::verify);
        }
        phase_ = Phase::recheck;
        return {ScrubAction::verify, page};
      case Phase::recheck: {
        if (is_covered_pending(shadow_, store_, page)) {
          current_.pages_skipped += 1;
          return advance(ScrubAction::recheck);
        }
        if (region_.epoch() != epoch_) {
          if (retries_ < opts_.max_retries) {
            ++retries_;
            current_.retries += 1;
            phase_ = Phase::check_clean;
            return {ScrubAction::recheck, page};
          }
          current_.deferred += 1;
          return advance(ScrubAction::recheck);
        }
        CorruptionReport r{passes_, page, region_.stripes().stripe_of(page), std::nullopt};
        if (opts_.recover) r.outcome = attempt_recovery(store_, region_, shadow_, page);
        current_.reports.push_back(r);
        all_reports_.push_back(r);
        halted_ = true;
        ScrubStep s = advance(ScrubAction::recheck);
        s.reported = true;
        return s;
      }
    }
    return {ScrubAction::check_clean, page, true};
  }

  ScrubReport scrub_one_pass() {
    while (!step().pass_done) {
    }
    return last_;
  }

 private:
  enum class Phase : std::uint8_t { check_clean, read_checksum, verify, recheck };

  ScrubStep advance(ScrubAction a) {
    const std::size_t page = page_;
    retries_ = 0;
    phase_ = Phase::check_clean;
    if (++page_ < store_.num_pages()) return {a, page};
    in_pass_ = false;
    last_ = current_;
    ++passes_;
    return {a, page, true};
  }

  PagedStore& store_;
  const RedundancyRegion& region_;
  const ShadowState& shadow_;
  Options opts_;

  bool in_pass_ = false;
  Phase phase_ = Phase::check_clean;
  std::size_t page_ = 0;
  unsigned retries_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint32_t expected_ = 0;
  ScrubReport current_;
  ScrubReport last_;
  std::vector<CorruptionReport> all_reports_;
  std::uint64_t passes_ = 0;
  bool halted_ = false;
};

}  // namespace asyred
