#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "asyred/asyred.hpp"

using namespace asyred;

namespace {

struct Rig {
  explicit Rig(std::size_t pages = 12, std::size_t stripe = 4)
      : store(StoreConfig{512, 64, pages, 4}), region(store, StripeConfig{stripe}), shadow(4) {
    std::mt19937_64 rng(99);
    std::vector<std::byte> page(512);
    for (std::size_t p = 0; p < pages; ++p) {
      for (auto& b : page) b = static_cast<std::byte>(rng());
      store.write(p, 0, page);
    }
    Updater(store, region, shadow).run_one_pass();
  }
  PagedStore store;
  RedundancyRegion region;
  ShadowState shadow;
};

std::vector<std::byte> junk(std::size_t n = 512) { return std::vector<std::byte>(n, std::byte{0x5A}); }

}  // namespace

TEST(Scrubber, ConvergedStoreHasNoReports) {
  Rig r;
  Scrubber s(r.store, r.region, r.shadow);
  const auto rep = s.scrub_one_pass();
  EXPECT_TRUE(rep.reports.empty());
  EXPECT_EQ(rep.pages_verified, 12u);
  EXPECT_FALSE(s.halted());
}

TEST(Scrubber, ReportsCorruptedCleanPage) {
  Rig r;
  r.store.media_write(6, 0, junk());
  Scrubber s(r.store, r.region, r.shadow);
  const auto rep = s.scrub_one_pass();
  ASSERT_EQ(rep.reports.size(), 1u);
  EXPECT_EQ(rep.reports[0].page, 6u);
  EXPECT_EQ(rep.reports[0].stripe, 1u);
  EXPECT_FALSE(rep.reports[0].outcome.has_value());
  EXPECT_TRUE(s.halted());
}

TEST(Scrubber, SkipsDirtyPages) {
  Rig r;
  r.store.write(3, 0, junk(64));
  Scrubber s(r.store, r.region, r.shadow);
  const auto rep = s.scrub_one_pass();
  EXPECT_TRUE(rep.reports.empty());
  EXPECT_EQ(rep.pages_skipped, 1u);
}

TEST(Scrubber, WriteBetweenCheckAndVerifyIsNotReported) {
  Rig r;
  Scrubber s(r.store, r.region, r.shadow);
  // Advance to the verify step of page 0, then write to it.
  auto st = s.step();
  ASSERT_EQ(st.action, ScrubAction::check_clean);
  st = s.step();
  ASSERT_EQ(st.action, ScrubAction::read_checksum);
  r.store.write(0, 0, junk(64));
  st = s.step();
  ASSERT_EQ(st.action, ScrubAction::verify);
  st = s.step();
  EXPECT_EQ(st.action, ScrubAction::recheck);
  EXPECT_FALSE(st.reported);
  while (!s.step().pass_done) {
  }
  EXPECT_TRUE(s.reports().empty());
}

TEST(Scrubber, UpdaterBatchDuringVerifyTriggersRetryNotReport) {
  Rig r;
  Scrubber s(r.store, r.region, r.shadow);
  Updater u(r.store, r.region, r.shadow);
  s.step();  // check_clean page 0
  s.step();  // read_checksum (old value)
  r.store.write(0, 0, junk(64));
  u.run_one_pass();  // page 0 is clean again with a new checksum
  s.step();          // verify fails against the stale expectation
  const auto st = s.step();
  EXPECT_EQ(st.action, ScrubAction::recheck);
  EXPECT_FALSE(st.reported);
  while (!s.step().pass_done) {
  }
  EXPECT_TRUE(s.reports().empty());
  EXPECT_EQ(s.last_pass().retries, 1u);
}

TEST(Recovery, SingleCorruptionInCleanStripeIsRebuilt) {
  Rig r;
  const auto golden = r.store.page_copy(5);
  r.store.media_write(5, 0, junk());
  Scrubber s(r.store, r.region, r.shadow, Scrubber::Options{true, 8});
  const auto rep = s.scrub_one_pass();
  ASSERT_EQ(rep.reports.size(), 1u);
  EXPECT_EQ(rep.reports[0].outcome, RecoveryOutcome::recovered);
  EXPECT_EQ(r.store.page_copy(5), golden);
  EXPECT_TRUE(s.scrub_one_pass().reports.empty());
}

TEST(Recovery, DirtySiblingMakesStripeUnrecoverable) {
  Rig r;
  r.store.write(4, 0, junk(64));
  r.store.media_write(5, 0, junk());
  EXPECT_EQ(attempt_recovery(r.store, r.region, r.shadow, 5), RecoveryOutcome::unrecoverable_dirty_stripe);
}

TEST(Recovery, TwoCorruptionsInOneStripeAreUnrecoverable) {
  Rig r;
  r.store.media_write(8, 0, junk());
  r.store.media_write(9, 64, junk(64));
  Scrubber s(r.store, r.region, r.shadow, Scrubber::Options{true, 8});
  const auto rep = s.scrub_one_pass();
  ASSERT_EQ(rep.reports.size(), 2u);
  EXPECT_EQ(rep.reports[0].outcome, RecoveryOutcome::unrecoverable);
  EXPECT_EQ(rep.reports[1].outcome, RecoveryOutcome::unrecoverable);
}

TEST(Recovery, OutcomeNamesRoundTrip) {
  for (auto o : {RecoveryOutcome::recovered, RecoveryOutcome::unrecoverable_dirty_stripe, RecoveryOutcome::unrecoverable})
    EXPECT_EQ(recovery_outcome_from_string(to_string(o)), o);
  EXPECT_FALSE(recovery_outcome_from_string("nope").has_value());
}
