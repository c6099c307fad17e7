#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "config.hpp"
#include "crc32c.hpp"
#include "dirty_bitvector.hpp"
#include "spin_lock.hpp"

namespace asyred {

/// Page-table entries per level in the modelled 4-level x86-64 radix tree.
inline constexpr std::size_t kPageTableFanout = 512;
inline constexpr int kPageTableLevels = 4;

/// Number of page-table pages visited when walking the leaf entries of [start, end).
/// One step per distinct table touched at each level.
inline std::uint64_t page_walk_steps(std::size_t start, std::size_t end) {
  if (end <= start) return 0;
  std::uint64_t steps = 0;
  std::size_t span = 1;
  for (int level = 0; level < kPageTableLevels; ++level) {
    span *= kPageTableFanout;
    steps += (end - 1) / span - start / span + 1;
  }
  return steps;
}

/// Simulated kernel-side costs of checking and clearing dirty bits.
struct DirtyBitCounters {
  std::uint64_t get_calls = 0;
  std::uint64_t clear_calls = 0;
  std::uint64_t walk_steps = 0;
  std::uint64_t bits_read = 0;
  std::uint64_t invalidations = 0;

  std::uint64_t syscalls() const { return get_calls + clear_calls; }

  DirtyBitCounters& operator+=(const DirtyBitCounters& o) {
    get_calls += o.get_calls;
    clear_calls += o.clear_calls;
    walk_steps += o.walk_steps;
    bits_read += o.bits_read;
    invalidations += o.invalidations;
    return *this;
  }
  friend DirtyBitCounters operator-(DirtyBitCounters a, const DirtyBitCounters& b) {
    a.get_calls -= b.get_calls;
    a.clear_calls -= b.clear_calls;
    a.walk_steps -= b.walk_steps;
    a.bits_read -= b.bits_read;
    a.invalidations -= b.invalidations;
    return a;
  }
  friend bool operator==(const DirtyBitCounters&, const DirtyBitCounters&) = default;
};

struct WriteRecord {
  std::size_t page;
  std::size_t offset;
  std::size_t len;
};

/// Emulated DAX-mapped file: fixed-size pages, cache-line-granular stores, one dirty bit per page.
///
/// Stores and page snapshots take a per-page lock, so a page is never observed half-written and a
/// dirty-bit clear waits for in-flight stores to that page (the role a TLB shootdown plays on real
/// hardware). Dirty bits are individually atomic; `get_dirty_bits` is not a cross-page snapshot.
class PagedStore {
 public:
  explicit PagedStore(StoreConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    data_.assign(cfg_.num_pages * cfg_.page_size, std::byte{0});
    nwords_ = (cfg_.num_pages + 63) / 64;
    dirty_ = std::make_unique<std::atomic<std::uint64_t>[]>(nwords_);
    for (std::size_t i = 0; i < nwords_; ++i) dirty_[i].store(0, std::memory_order_relaxed);
    locks_ = std::make_unique<SpinLock[]>(cfg_.num_pages);
  }

  PagedStore(const PagedStore&) = delete;
  PagedStore& operator=(const PagedStore&) = delete;

  const StoreConfig& config() const { return cfg_; }
  std::size_t num_pages() const { return cfg_.num_pages; }
  std::size_t page_size() const { return cfg_.page_size; }
  std::size_t cache_line() const { return cfg_.cache_line; }

  void write(std::size_t page, std::size_t offset, std::span<const std::byte> payload) {
    check_range(page, offset, payload.size());
    if (offset % cfg_.cache_line != 0 || payload.size() % cfg_.cache_line != 0)
      throw bounds_error("write must be cache-line aligned");
    {
      std::lock_guard g(locks_[page]);
      set_dirty(page);
      std::memcpy(page_ptr(page) + offset, payload.data(), payload.size());
    }
    if (log_enabled_.load(std::memory_order_relaxed)) {
      std::lock_guard g(log_mu_);
      log_.push_back({page, offset, payload.size()});
    }
  }

  void read_into(std::size_t page, std::size_t offset, std::span<std::byte> out) const {
    check_range(page, offset, out.size());
    std::lock_guard g(locks_[page]);
    std::memcpy(out.data(), page_ptr(page) + offset, out.size());
  }

  std::vector<std::byte> read(std::size_t page, std::size_t offset, std::size_t len) const {
    std::vector<std::byte> out(len);
    read_into(page, offset, out);
    return out;
  }

  void snapshot_page(std::size_t page, std::span<std::byte> out) const {
    read_into(page, 0, out.first(cfg_.page_size));
  }

  std::vector<std::byte> page_copy(std::size_t page) const { return read(page, 0, cfg_.page_size); }

  /// CRC-32C of a consistent snapshot of the page.
  std::uint32_t page_checksum(std::size_t page) const {
    check_range(page, 0, 0);
    std::lock_guard g(locks_[page]);
    return crc32c(std::span<const std::byte>(page_ptr(page), cfg_.page_size));
  }

  /// Below-software mutation (firmware, media): bytes change, dirty bit does not.
  void media_write(std::size_t page, std::size_t offset, std::span<const std::byte> bytes) {
    check_range(page, offset, bytes.size());
    std::lock_guard g(locks_[page]);
    std::memcpy(page_ptr(page) + offset, bytes.data(), bytes.size());
  }

  /// Writes reconstructed page contents unless the application dirtied the page meanwhile.
  bool restore_page_if_clean(std::size_t page, std::span<const std::byte> bytes) {
    check_range(page, 0, bytes.size());
    std::lock_guard g(locks_[page]);
    if (is_dirty(page)) return false;
    std::memcpy(page_ptr(page), bytes.data(), bytes.size());
    return true;
  }

  bool is_dirty(std::size_t page) const {
    return (dirty_[page / 64].load(std::memory_order_acquire) >> (page % 64)) & 1u;
  }

  std::size_t dirty_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < nwords_; ++i)
      n += static_cast<std::size_t>(std::popcount(dirty_[i].load(std::memory_order_relaxed)));
    return n;
  }

  std::vector<std::size_t> dirty_pages() const {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < cfg_.num_pages; ++p)
      if (is_dirty(p)) out.push_back(p);
    return out;
  }

  DirtyBitvector get_dirty_bits(std::size_t start, std::size_t end) {
    check_batch(start, end);
    DirtyBitvector bv(start, end - start);
    for (std::size_t p = start; p < end; ++p)
      if (is_dirty(p)) bv.set(p - start);
    std::lock_guard g(counter_mu_);
    counters_.get_calls += 1;
    counters_.walk_steps += page_walk_steps(start, end);
    counters_.bits_read += end - start;
    return bv;
  }

  /// Clears the dirty bit of each page in [start, end) whose mask bit is set. Pages dirtied after
  /// the mask was taken but absent from it keep their bit.
  void clear_dirty_bits(std::size_t start, std::size_t end, const DirtyBitvector& mask) {
    check_batch(start, end);
    if (mask.base_page() > start || mask.end_page() < end)
      throw bounds_error("mask does not cover the cleared range");
    std::uint64_t cleared = 0;
    for (std::size_t p = start; p < end; ++p) {
      if (!mask.test_page(p)) continue;
      std::lock_guard g(locks_[p]);
      const std::uint64_t bit = std::uint64_t{1} << (p % 64);
      if (dirty_[p / 64].fetch_and(~bit, std::memory_order_acq_rel) & bit) ++cleared;
    }
    std::lock_guard g(counter_mu_);
    counters_.clear_calls += 1;
    counters_.walk_steps += page_walk_steps(start, end);
    counters_.invalidations += cleared;
  }

  DirtyBitCounters counters() const {
    std::lock_guard g(counter_mu_);
    return counters_;
  }
  void reset_counters() {
    std::lock_guard g(counter_mu_);
    counters_ = {};
  }

  void enable_write_log(bool on) { log_enabled_.store(on, std::memory_order_relaxed); }
  std::vector<WriteRecord> write_log() const {
    std::lock_guard g(log_mu_);
    return log_;
  }

  // File layout (little-endian): "VLMB", u32 version, u64 page_size, u64 num_pages,
  // page data, then the dirty bitvector as ceil(num_pages / 64) u64 words.
  static constexpr std::uint32_t kFileVersion = 1;

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw io::format_error("cannot open " + path.string());
    io::put_magic(os, "VLMB");
    io::put_le<std::uint32_t>(os, kFileVersion);
    io::put_le<std::uint64_t>(os, cfg_.page_size);
    io::put_le<std::uint64_t>(os, cfg_.num_pages);
    for (std::size_t p = 0; p < cfg_.num_pages; ++p) {
      std::lock_guard g(locks_[p]);
      io::put_bytes(os, std::span<const std::byte>(page_ptr(p), cfg_.page_size));
    }
    for (std::size_t i = 0; i < nwords_; ++i)
      io::put_le<std::uint64_t>(os, dirty_[i].load(std::memory_order_acquire));
    if (!os) throw io::format_error("write failed: " + path.string());
  }

  static std::unique_ptr<PagedStore> load(const std::filesystem::path& path, std::size_t cache_line = 64,
                                          std::size_t batch_size = 512) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io::format_error("cannot open " + path.string());
    io::expect_magic(is, "VLMB");
    if (io::get_le<std::uint32_t>(is) != kFileVersion) throw io::format_error("unsupported store version");
    StoreConfig cfg;
    cfg.page_size = io::get_le<std::uint64_t>(is);
    cfg.num_pages = io::get_le<std::uint64_t>(is);
    cfg.cache_line = cache_line;
    cfg.batch_size = std::min(batch_size, cfg.num_pages);
    auto store = std::make_unique<PagedStore>(cfg);
    io::get_bytes(is, store->data_);
    for (std::size_t i = 0; i < store->nwords_; ++i)
      store->dirty_[i].store(io::get_le<std::uint64_t>(is), std::memory_order_relaxed);
    return store;
  }

 private:
  std::byte* page_ptr(std::size_t page) { return data_.data() + page * cfg_.page_size; }
  const std::byte* page_ptr(std::size_t page) const { return data_.data() + page * cfg_.page_size; }

  void set_dirty(std::size_t page) {
    dirty_[page / 64].fetch_or(std::uint64_t{1} << (page % 64), std::memory_order_acq_rel);
  }

  void check_range(std::size_t page, std::size_t offset, std::size_t len) const {
    if (page >= cfg_.num_pages) throw bounds_error("page " + std::to_string(page) + " out of range");
    if (offset > cfg_.page_size || len > cfg_.page_size - offset)
      throw bounds_error("access beyond end of page");
  }

  void check_batch(std::size_t start, std::size_t end) const {
    if (start >= end || end > cfg_.num_pages) throw bounds_error("invalid dirty-bit range");
    if (end - start > cfg_.batch_size) throw bounds_error("dirty-bit range exceeds batch size");
  }

  StoreConfig cfg_;
  std::vector<std::byte> data_;
  std::size_t nwords_ = 0;
  std::unique_ptr<std::atomic<std::uint64_t>[]> dirty_;
  mutable std::unique_ptr<SpinLock[]> locks_;

  mutable std::mutex counter_mu_;
  DirtyBitCounters counters_;

  std::atomic<bool> log_enabled_{false};
  mutable std::mutex log_mu_;
  std::vector<WriteRecord> log_;
};

}  // namespace asyred
