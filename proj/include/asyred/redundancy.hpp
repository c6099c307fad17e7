#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "binary_io.hpp"
#include "config.hpp"
#include "crc32c.hpp"
#include "paged_store.hpp"

namespace asyred {

inline std::uint32_t compute_page_checksum(std::span<const std::byte> page_bytes) {
  return crc32c(page_bytes);
}

/// XORs `src` into `dst` a 64-bit word at a time.
inline void xor_into(std::span<std::byte> dst, std::span<const std::byte> src) {
  const std::size_t n = std::min(dst.size(), src.size());
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    std::uint64_t a;
    std::uint64_t b;
    std::memcpy(&a, dst.data() + i, 8);
    std::memcpy(&b, src.data() + i, 8);
    a ^= b;
    std::memcpy(dst.data() + i, &a, 8);
  }
  for (; i < n; ++i) dst[i] ^= src[i];
}

inline std::vector<std::byte> compute_parity(std::span<const std::vector<std::byte>> data_pages) {
  if (data_pages.empty()) return {};
  std::vector<std::byte> parity(data_pages.front().size(), std::byte{0});
  for (const auto& page : data_pages) {
    if (page.size() != parity.size()) throw bounds_error("parity inputs differ in size");
    xor_into(parity, page);
  }
  return parity;
}

/// CRC-32C over the checksum array serialized little-endian in page order.
inline std::uint32_t compute_meta_checksum(std::span<const std::uint32_t> checksums) {
  std::uint32_t state = 0xFFFFFFFFu;
  std::array<std::byte, 4> le{};
  for (std::uint32_t c : checksums) {
    for (int i = 0; i < 4; ++i) le[i] = static_cast<std::byte>((c >> (8 * i)) & 0xFF);
    state = crc32c_update(state, le);
  }
  return state ^ 0xFFFFFFFFu;
}

/// Durability-ordering trace. Events before a barrier are durable before any event after it.
enum class PersistEvent : std::uint8_t {
  shadow_persist,
  barrier,
  dirty_clear,
  checksum_write,
  parity_write,
  shadow_clear,
  meta_write,
};

struct PersistRecord {
  PersistEvent event;
  std::size_t index;  // page, stripe or batch start depending on event
};

class PersistenceLog {
 public:
  void enable(bool on) { enabled_.store(on, std::memory_order_relaxed); }
  bool enabled() const { return enabled_.load(std::memory_order_relaxed); }

  void record(PersistEvent e, std::size_t index = 0) {
    if (!enabled()) return;
    std::lock_guard g(mu_);
    events_.push_back({e, index});
  }
  std::vector<PersistRecord> events() const {
    std::lock_guard g(mu_);
    return events_;
  }
  void clear() {
    std::lock_guard g(mu_);
    events_.clear();
  }

 private:
  std::atomic<bool> enabled_{false};
  mutable std::mutex mu_;
  std::vector<PersistRecord> events_;
};

/// Persistent redundancy kept apart from the data pages: one checksum per data page, one parity
/// page per stripe, and a checksum of the checksum array.
class RedundancyRegion {
 public:
  RedundancyRegion(std::size_t num_pages, std::size_t page_size, StripeConfig stripes)
      : num_pages_(num_pages), page_size_(page_size), stripes_(stripes) {
    stripes_.validate();
    if (num_pages_ == 0) throw config_error("region needs at least one page");
    num_stripes_ = stripes_.num_stripes(num_pages_);
    checksums_ = std::make_unique<std::atomic<std::uint32_t>[]>(num_pages_);
    for (std::size_t i = 0; i < num_pages_; ++i) checksums_[i].store(0, std::memory_order_relaxed);
    parity_.assign(num_stripes_ * page_size_, std::byte{0});
    parity_locks_ = std::make_unique<std::mutex[]>(num_stripes_);
  }

  RedundancyRegion(const PagedStore& store, StripeConfig stripes)
      : RedundancyRegion(store.num_pages(), store.page_size(), stripes) {
    rebuild_from(store);
  }

  std::size_t num_pages() const { return num_pages_; }
  std::size_t page_size() const { return page_size_; }
  std::size_t num_stripes() const { return num_stripes_; }
  const StripeConfig& stripes() const { return stripes_; }

  /// Pages [first, last) belonging to `stripe`; the trailing stripe may be short (implicit zero pages).
  std::pair<std::size_t, std::size_t> stripe_pages(std::size_t stripe) const {
    const std::size_t first = stripes_.first_page(stripe);
    return {first, std::min(first + stripes_.data_pages_per_stripe, num_pages_)};
  }

  std::uint32_t checksum(std::size_t page) const { return checksums_[page].load(std::memory_order_acquire); }
  void set_checksum(std::size_t page, std::uint32_t v) {
    checksums_[page].store(v, std::memory_order_release);
    log_.record(PersistEvent::checksum_write, page);
  }

  std::vector<std::uint32_t> checksum_array() const {
    std::vector<std::uint32_t> out(num_pages_);
    for (std::size_t i = 0; i < num_pages_; ++i) out[i] = checksum(i);
    return out;
  }

  std::vector<std::byte> parity(std::size_t stripe) const {
    std::lock_guard g(parity_locks_[stripe]);
    auto first = parity_.begin() + static_cast<std::ptrdiff_t>(stripe * page_size_);
    return {first, first + static_cast<std::ptrdiff_t>(page_size_)};
  }
  void set_parity(std::size_t stripe, std::span<const std::byte> bytes) {
    if (bytes.size() != page_size_) throw bounds_error("parity page has wrong size");
    {
      std::lock_guard g(parity_locks_[stripe]);
      std::memcpy(parity_.data() + stripe * page_size_, bytes.data(), page_size_);
    }
    log_.record(PersistEvent::parity_write, stripe);
  }

  std::uint32_t meta_checksum() const { return meta_.load(std::memory_order_acquire); }
  void set_meta_checksum(std::uint32_t v) {
    meta_.store(v, std::memory_order_release);
    log_.record(PersistEvent::meta_write);
  }
  std::uint32_t compute_meta() const { return compute_meta_checksum(checksum_array()); }
  bool meta_verifies() const { return compute_meta() == meta_checksum(); }

  /// XOR of fresh snapshots of the stripe's data pages.
  std::vector<std::byte> compute_stripe_parity(const PagedStore& store, std::size_t stripe) const {
    auto [first, last] = stripe_pages(stripe);
    std::vector<std::byte> parity(page_size_, std::byte{0});
    std::vector<std::byte> buf(page_size_);
    for (std::size_t p = first; p < last; ++p) {
      store.snapshot_page(p, buf);
      xor_into(parity, buf);
    }
    return parity;
  }

  /// Recomputes every checksum, parity page and the meta-checksum from the store.
  void rebuild_from(const PagedStore& store) {
    for (std::size_t p = 0; p < num_pages_; ++p) set_checksum(p, store.page_checksum(p));
    for (std::size_t s = 0; s < num_stripes_; ++s) set_parity(s, compute_stripe_parity(store, s));
    set_meta_checksum(compute_meta());
  }

  // Seqlock-style counter: odd while an updater batch is in flight.
  std::uint64_t epoch() const { return epoch_.load(std::memory_order_acquire); }
  void bump_epoch() { epoch_.fetch_add(1, std::memory_order_acq_rel); }

  PersistenceLog& log() { return log_; }
  const PersistenceLog& log() const { return log_; }

  // File layout (little-endian): "VLRR", u32 version, u64 num_pages, u32 pages_per_stripe,
  // u32 checksum per page, parity pages in stripe order, u32 meta-checksum.
  static constexpr std::uint32_t kFileVersion = 1;

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw io::format_error("cannot open " + path.string());
    io::put_magic(os, "VLRR");
    io::put_le<std::uint32_t>(os, kFileVersion);
    io::put_le<std::uint64_t>(os, num_pages_);
    io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(stripes_.pages_per_stripe()));
    for (std::size_t i = 0; i < num_pages_; ++i) io::put_le<std::uint32_t>(os, checksum(i));
    for (std::size_t s = 0; s < num_stripes_; ++s) io::put_bytes(os, parity(s));
    io::put_le<std::uint32_t>(os, meta_checksum());
    if (!os) throw io::format_error("write failed: " + path.string());
  }

  static std::unique_ptr<RedundancyRegion> load(const std::filesystem::path& path) {
    const auto file_size = std::filesystem::file_size(path);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io::format_error("cannot open " + path.string());
    io::expect_magic(is, "VLRR");
    if (io::get_le<std::uint32_t>(is) != kFileVersion) throw io::format_error("unsupported region version");
    const auto num_pages = io::get_le<std::uint64_t>(is);
    const auto per_stripe = io::get_le<std::uint32_t>(is);
    if (num_pages == 0 || per_stripe < 2) throw io::format_error("bad region header");
    StripeConfig sc{per_stripe - 1};
    const std::uint64_t header = 20;
    const std::uint64_t fixed = header + 4 * num_pages + 4;
    const std::uint64_t stripes = sc.num_stripes(num_pages);
    if (file_size < fixed || (file_size - fixed) % stripes != 0) throw io::format_error("bad region size");
    const std::size_t page_size = (file_size - fixed) / stripes;
    auto region = std::make_unique<RedundancyRegion>(num_pages, page_size, sc);
    for (std::size_t i = 0; i < num_pages; ++i)
      region->checksums_[i].store(io::get_le<std::uint32_t>(is), std::memory_order_relaxed);
    io::get_bytes(is, region->parity_);
    region->meta_.store(io::get_le<std::uint32_t>(is), std::memory_order_relaxed);
    return region;
  }

 private:
  std::size_t num_pages_;
  std::size_t page_size_;
  StripeConfig stripes_;
  std::size_t num_stripes_ = 0;
  std::unique_ptr<std::atomic<std::uint32_t>[]> checksums_;
  std::vector<std::byte> parity_;
  mutable std::unique_ptr<std::mutex[]> parity_locks_;
  std::atomic<std::uint32_t> meta_{0};
  std::atomic<std::uint64_t> epoch_{0};
  PersistenceLog log_;
};

}  // namespace asyred
