#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <thread>
#include <vector>

#include "asyred/asyred.hpp"

using namespace asyred;

namespace {

std::vector<std::byte> line(unsigned char v, std::size_t n = 64) { return std::vector<std::byte>(n, std::byte{v}); }

struct Rig {
  explicit Rig(StoreConfig sc, StripeConfig st = {}) : store(sc), region(store, st), shadow(sc.batch_size) {}
  PagedStore store;
  RedundancyRegion region;
  ShadowState shadow;
};

bool converged(const PagedStore& store, const RedundancyRegion& region) {
  for (std::size_t p = 0; p < store.num_pages(); ++p)
    if (store.page_checksum(p) != region.checksum(p)) return false;
  for (std::size_t s = 0; s < region.num_stripes(); ++s)
    if (region.parity(s) != region.compute_stripe_parity(store, s)) return false;
  return region.meta_verifies();
}

}  // namespace

TEST(Updater, QuiescentPassDoesNoRedundancyWork) {
  Rig r(StoreConfig{4096, 64, 100, 16});
  Updater u(r.store, r.region, r.shadow);
  const auto st = u.run_one_pass();
  EXPECT_EQ(st.pages_checksummed, 0u);
  EXPECT_EQ(st.stripes_reparitied, 0u);
  EXPECT_EQ(st.dirty_ops.get_calls, 7u);  // ceil(100 / 16)
  EXPECT_EQ(st.dirty_ops.clear_calls, 7u);
  EXPECT_EQ(st.batches, 7u);
}

TEST(Updater, RepeatedWritesCostOneChecksum) {
  Rig r(StoreConfig{4096, 64, 16, 16});
  Updater u(r.store, r.region, r.shadow);
  for (int i = 0; i < 3; ++i) r.store.write(5, 64 * i, line(static_cast<unsigned char>(i + 1)));
  const auto st = u.run_one_pass();
  EXPECT_EQ(st.pages_checksummed, 1u);
  EXPECT_TRUE(converged(r.store, r.region));
}

TEST(Updater, OneDirtyPageReparitiesItsStripeOnce) {
  Rig r(StoreConfig{4096, 64, 16, 16}, StripeConfig{4});
  Updater u(r.store, r.region, r.shadow);
  r.store.write(0, 0, line(9));
  const auto st = u.run_one_pass();
  EXPECT_EQ(st.pages_checksummed, 1u);
  EXPECT_EQ(st.stripes_reparitied, 1u);
  EXPECT_TRUE(converged(r.store, r.region));
}

TEST(Updater, StripeSpanningBatchesStaysConsistent) {
  Rig r(StoreConfig{512, 64, 24, 3}, StripeConfig{5});
  Updater u(r.store, r.region, r.shadow);
  std::mt19937_64 rng(7);
  for (int round = 0; round < 20; ++round) {
    for (int i = 0; i < 10; ++i) r.store.write(rng() % 24, 64 * (rng() % 8), line(static_cast<unsigned char>(rng())));
    u.run_one_pass();
    ASSERT_TRUE(converged(r.store, r.region));
    ASSERT_EQ(r.store.dirty_count(), 0u);
    ASSERT_FALSE(r.shadow.any());
  }
}

TEST(Updater, PersistenceOrdering) {
  Rig r(StoreConfig{4096, 64, 8, 4}, StripeConfig{4});
  r.region.log().enable(true);
  Updater u(r.store, r.region, r.shadow);
  r.store.write(1, 0, line(1));
  r.store.write(6, 0, line(2));
  u.run_one_pass();
  std::vector<PersistEvent> seq;
  for (const auto& e : r.region.log().events()) seq.push_back(e.event);
  using E = PersistEvent;
  const std::vector<E> batch = {E::shadow_persist, E::barrier, E::dirty_clear, E::checksum_write,
                                E::parity_write,   E::barrier, E::shadow_clear};
  std::vector<E> expected;
  for (int b = 0; b < 2; ++b)
    for (E e : batch) expected.push_back(e);
  expected.push_back(E::meta_write);
  EXPECT_EQ(seq, expected);
}

TEST(Updater, ShadowCoversPagesBetweenClearAndChecksum) {
  Rig r(StoreConfig{4096, 64, 4, 4}, StripeConfig{4});
  Updater u(r.store, r.region, r.shadow);
  r.store.write(2, 0, line(3));
  while (true) {
    const auto s = u.step();
    if (s.action == UpdaterAction::clear_dirty) break;
  }
  EXPECT_FALSE(r.store.is_dirty(2));
  EXPECT_TRUE(is_covered_pending(r.shadow, r.store, 2));
  EXPECT_FALSE(is_covered_pending(r.shadow, r.store, 1));
  u.finish_batch();
  while (u.in_pass()) u.step();
  EXPECT_FALSE(is_covered_pending(r.shadow, r.store, 2));
}

TEST(Updater, EveryInterleavingOfOneWriteWithOnePassConverges) {
  // Count the steps of a pass with one dirty page, then place a second write before each of them.
  std::size_t steps = 0;
  {
    Rig r(StoreConfig{256, 64, 1, 1}, StripeConfig{1});
    Updater u(r.store, r.region, r.shadow);
    r.store.write(0, 0, line(1));
    do ++steps;
    while (!u.step().pass_done);
  }
  for (std::size_t at = 0; at <= steps; ++at) {
    Rig r(StoreConfig{256, 64, 1, 1}, StripeConfig{1});
    Updater u(r.store, r.region, r.shadow);
    r.store.write(0, 0, line(1));
    bool done = false;
    for (std::size_t i = 0; !done; ++i) {
      if (i == at) r.store.write(0, 64, line(2));
      done = u.step().pass_done;
    }
    if (at >= steps) r.store.write(0, 64, line(2));
    // Either covered by a pending bit or already reflected in the checksum.
    ASSERT_TRUE(is_covered_pending(r.shadow, r.store, 0) || r.store.page_checksum(0) == r.region.checksum(0))
        << "write before step " << at;
    u.run_one_pass();
    ASSERT_TRUE(converged(r.store, r.region)) << "write before step " << at;
  }
}

TEST(Updater, KillMidBatchThenRestartConverges) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Rig r(StoreConfig{256, 64, 16, 4}, StripeConfig{4});
    for (int i = 0; i < 8; ++i) r.store.write(rng() % 16, 0, line(static_cast<unsigned char>(rng())));
    {
      Updater doomed(r.store, r.region, r.shadow);
      const std::size_t cut = rng() % 40;
      for (std::size_t i = 0; i < cut; ++i) doomed.step();
    }
    for (std::size_t p = 0; p < 16; ++p) {
      const bool ok = is_covered_pending(r.shadow, r.store, p) || r.store.page_checksum(p) == r.region.checksum(p);
      ASSERT_TRUE(ok) << "trial " << trial << " page " << p;
    }
    Updater fresh(r.store, r.region, r.shadow);
    fresh.run_one_pass();
    ASSERT_TRUE(converged(r.store, r.region)) << "trial " << trial;
  }
}

TEST(Updater, LongerPeriodMeansFewerChecksums) {
  auto total_checksums = [](std::size_t writes_between_passes) {
    Rig r(StoreConfig{4096, 64, 256, 64});
    Updater u(r.store, r.region, r.shadow);
    WorkloadSpec spec;
    spec.pattern = AccessPattern::zipf;
    spec.seed = 3;
    WorkloadRunner runner(r.store, spec);
    const std::size_t total = 20000;
    std::uint64_t sums = 0;
    for (std::size_t done = 0; done < total; done += writes_between_passes) {
      runner.run(writes_between_passes);
      sums += u.run_one_pass().pages_checksummed;
    }
    return sums;
  };
  EXPECT_GT(total_checksums(200), total_checksums(2000));
}

TEST(RunPeriodic, FakeClockRunsOnePassPerDeadline) {
  Rig r(StoreConfig{4096, 64, 32, 8});
  Updater u(r.store, r.region, r.shadow);
  std::stop_source src;
  std::vector<std::chrono::steady_clock::time_point> deadlines;
  auto fake_wait = [&](std::chrono::steady_clock::time_point d, std::stop_token) {
    deadlines.push_back(d);
    if (deadlines.size() > 10) src.request_stop();
    return deadlines.size() <= 10;
  };
  const auto passes = run_periodic(u, std::chrono::seconds(1), src.get_token(), {}, fake_wait);
  EXPECT_EQ(passes, 10u);
  ASSERT_EQ(deadlines.size(), 11u);
  for (std::size_t i = 1; i < deadlines.size(); ++i)
    EXPECT_EQ(deadlines[i] - deadlines[i - 1], std::chrono::seconds(1));
}

TEST(RunPeriodic, RealClockWithWriter) {
  Rig r(StoreConfig{4096, 64, 64, 16});
  Updater u(r.store, r.region, r.shadow);
  std::jthread writer([&](std::stop_token st) {
    std::mt19937_64 rng(1);
    while (!st.stop_requested()) r.store.write(rng() % 64, 64 * (rng() % 64), line(static_cast<unsigned char>(rng())));
  });
  std::jthread bg([&](std::stop_token st) { run_periodic(u, std::chrono::milliseconds(20), st); });
  std::this_thread::sleep_for(std::chrono::milliseconds(230));
  writer.request_stop();
  writer.join();
  bg.request_stop();
  bg.join();
  EXPECT_GE(u.passes_completed(), 5u);
  EXPECT_LE(u.passes_completed(), 12u);
  // A stop leaves the shadow either cleared or naming a batch whose redundancy is still owed.
  Updater fresh(r.store, r.region, r.shadow);
  fresh.run_one_pass();
  EXPECT_TRUE(converged(r.store, r.region));
}

TEST(RunPeriodic, RejectsNonPositivePeriod) {
  Rig r(StoreConfig{4096, 64, 4, 4});
  Updater u(r.store, r.region, r.shadow);
  std::stop_source src;
  EXPECT_THROW(run_periodic(u, std::chrono::seconds(0), src.get_token()), config_error);
}
