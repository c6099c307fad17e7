#include <gtest/gtest.h>

#include <map>
#include <set>
#include <vector>

#include "asyred/asyred.hpp"

using namespace asyred;

TEST(Workload, SequentialFillOfFourPages) {
  PagedStore store(StoreConfig{4096, 64, 4, 4});
  WorkloadSpec spec;
  spec.pattern = AccessPattern::sequential;
  spec.total_ops = 4 * (4096 / 64);
  store.enable_write_log(true);
  const auto st = run_workload(store, spec);
  EXPECT_EQ(st.writes, 256u);
  EXPECT_EQ(st.distinct_pages_written, 4u);
  EXPECT_EQ(store.dirty_count(), 4u);
  const auto log = store.write_log();
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(log[i].page, i / 64);
    EXPECT_EQ(log[i].offset, (i % 64) * 64);
  }
}

TEST(Workload, UniformRandomCycleHitsEveryLineOnce) {
  PagedStore store(StoreConfig{1024, 64, 32, 32});
  WorkloadSpec spec;
  spec.total_ops = 32 * 16;
  spec.seed = 17;
  store.enable_write_log(true);
  run_workload(store, spec);
  std::set<std::pair<std::size_t, std::size_t>> lines;
  for (const auto& w : store.write_log()) lines.insert({w.page, w.offset});
  EXPECT_EQ(lines.size(), 32u * 16u);
  EXPECT_EQ(store.dirty_count(), 32u);
}

TEST(Workload, ZipfHotPageFarAboveUniform) {
  const std::size_t pages = 10000;
  PagedStore store(StoreConfig{64, 64, pages, 512});
  WorkloadSpec spec;
  spec.pattern = AccessPattern::zipf;
  spec.total_ops = 100000;
  spec.seed = 3;
  store.enable_write_log(true);
  run_workload(store, spec);
  std::map<std::size_t, std::size_t> freq;
  for (const auto& w : store.write_log()) ++freq[w.page];
  std::size_t top = 0;
  for (const auto& [p, c] : freq) top = std::max(top, c);
  const double uniform = 100000.0 / pages;
  EXPECT_GE(static_cast<double>(top), 10.0 * uniform);
  // The empirical top frequency should sit near the analytic mass of rank 0.
  const ZipfTable table(pages, 0.99);
  EXPECT_NEAR(static_cast<double>(top) / 100000.0, table.mass(0), 0.02);
}

TEST(Workload, ZipfTableMassesSumToOne) {
  const ZipfTable t(1000, 0.99);
  double sum = 0;
  for (std::size_t k = 0; k < 1000; ++k) sum += t.mass(k);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_GT(t.mass(0), t.mass(1));
  EXPECT_NEAR(t.mass(0) / t.mass(1), std::pow(2.0, 0.99), 1e-9);
}

TEST(Workload, SameSeedSameStream) {
  WorkloadSpec spec = make_ycsb_like_mix(0.5);
  spec.seed = 9;
  const StoreConfig sc{4096, 64, 256, 64};
  OpStream a(spec, sc, 0, 256, 0);
  OpStream b(spec, sc, 0, 256, 0);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Workload, YcsbMixes) {
  const auto a = make_ycsb_like_mix(0.5);
  EXPECT_EQ(a.pattern, AccessPattern::zipf);
  EXPECT_DOUBLE_EQ(a.zipf_theta, 0.99);
  EXPECT_DOUBLE_EQ(a.effective_read_fraction(), 0.5);
  EXPECT_DOUBLE_EQ(make_ycsb_like_mix(0.95).effective_read_fraction(), 0.95);

  PagedStore store(StoreConfig{4096, 64, 128, 64});
  auto c = make_ycsb_like_mix(1.0);
  c.total_ops = 5000;
  const auto st = run_workload(store, c);
  EXPECT_EQ(st.writes, 0u);
  EXPECT_EQ(store.dirty_count(), 0u);
  EXPECT_THROW(make_ycsb_like_mix(1.5), config_error);
}

TEST(Workload, MixedReadFractionIsRespected) {
  PagedStore store(StoreConfig{4096, 64, 128, 64});
  auto spec = make_ycsb_like_mix(0.95);
  spec.total_ops = 40000;
  const auto st = run_workload(store, spec);
  EXPECT_NEAR(static_cast<double>(st.reads) / 40000.0, 0.95, 0.01);
}

TEST(Workload, ThreadsWriteDisjointRanges) {
  PagedStore store(StoreConfig{4096, 64, 64, 64});
  WorkloadSpec spec;
  spec.threads = 4;
  spec.total_ops = 4 * 16 * 64;  // one full cycle per thread
  const auto st = run_workload(store, spec);
  EXPECT_EQ(st.writes, spec.total_ops);
  EXPECT_EQ(st.thread_ops_per_sec.size(), 4u);
  EXPECT_EQ(store.dirty_count(), 64u);
}

TEST(Workload, SequentialAmortizesBetterThanRandom) {
  auto checksums_per_write = [](AccessPattern pat) {
    PagedStore store(StoreConfig{4096, 64, 512, 512});
    RedundancyRegion region(store, StripeConfig{});
    ShadowState shadow(512);
    Updater u(store, region, shadow);
    WorkloadSpec spec;
    spec.pattern = pat;
    WorkloadRunner runner(store, spec);
    std::uint64_t sums = 0;
    for (int i = 0; i < 10; ++i) {
      runner.run(1000);
      sums += u.run_one_pass().pages_checksummed;
    }
    return static_cast<double>(sums) / 10000.0;
  };
  EXPECT_LT(checksums_per_write(AccessPattern::sequential), checksums_per_write(AccessPattern::uniform_random));
}

TEST(Workload, ValidationErrors) {
  const StoreConfig sc{4096, 64, 16, 16};
  WorkloadSpec s;
  s.io_size = 96;
  EXPECT_THROW(s.validate(sc), config_error);
  s = {};
  s.threads = 17;
  EXPECT_THROW(s.validate(sc), config_error);
  s.shared_range = true;
  EXPECT_NO_THROW(s.validate(sc));
  s = {};
  s.read_fraction = 1.1;
  EXPECT_THROW(s.validate(sc), config_error);
}
