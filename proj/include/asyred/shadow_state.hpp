#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>

#include "binary_io.hpp"
#include "dirty_bitvector.hpp"
#include "paged_store.hpp"

namespace asyred {

/// Persistent shadow copy of the dirty bits of the batch currently being processed: one bitvector
/// of the batch size plus the batch's first page. Pages outside the current batch never need one,
/// because only the current batch's dirty bits are being cleared.
class ShadowState {
 public:
  explicit ShadowState(std::size_t batch_size)
      : capacity_(batch_size), nwords_((batch_size + 63) / 64) {
    bits_ = std::make_unique<std::atomic<std::uint64_t>[]>(nwords_);
    for (std::size_t i = 0; i < nwords_; ++i) bits_[i].store(0, std::memory_order_relaxed);
  }

  std::size_t capacity() const { return capacity_; }

  /// Caller must have cleared the previous batch's bits first.
  void persist(const DirtyBitvector& bv) {
    if (bv.size() > capacity_) throw bounds_error("shadow bitvector larger than batch size");
    batch_start_.store(bv.base_page(), std::memory_order_release);
    batch_len_.store(bv.size(), std::memory_order_release);
    for (std::size_t i = 0; i < nwords_; ++i)
      bits_[i].store(i < bv.words().size() ? bv.words()[i] : 0, std::memory_order_release);
  }

  void clear() {
    for (std::size_t i = 0; i < nwords_; ++i) bits_[i].store(0, std::memory_order_release);
  }

  bool any() const {
    for (std::size_t i = 0; i < nwords_; ++i)
      if (bits_[i].load(std::memory_order_acquire) != 0) return true;
    return false;
  }

  std::size_t batch_start() const { return batch_start_.load(std::memory_order_acquire); }

  DirtyBitvector load() const {
    DirtyBitvector bv(batch_start(), batch_len_.load(std::memory_order_acquire));
    for (std::size_t i = 0; i < bv.words().size(); ++i) bv.words()[i] = bits_[i].load(std::memory_order_acquire);
    return bv;
  }

  bool test_page(std::size_t page) const {
    const std::size_t start = batch_start();
    if (page < start || page - start >= capacity_) return false;
    const std::size_t i = page - start;
    return (bits_[i / 64].load(std::memory_order_acquire) >> (i % 64)) & 1u;
  }

  // "VLSS", u32 version, u64 capacity, u64 batch start, u64 batch length, bit words.
  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw io::format_error("cannot open " + path.string());
    io::put_magic(os, "VLSS");
    io::put_le<std::uint32_t>(os, 1);
    io::put_le<std::uint64_t>(os, capacity_);
    io::put_le<std::uint64_t>(os, batch_start());
    io::put_le<std::uint64_t>(os, batch_len_.load(std::memory_order_acquire));
    for (std::size_t i = 0; i < nwords_; ++i) io::put_le<std::uint64_t>(os, bits_[i].load(std::memory_order_acquire));
  }

  static std::unique_ptr<ShadowState> load_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io::format_error("cannot open " + path.string());
    io::expect_magic(is, "VLSS");
    if (io::get_le<std::uint32_t>(is) != 1) throw io::format_error("unsupported shadow version");
    auto s = std::make_unique<ShadowState>(io::get_le<std::uint64_t>(is));
    s->batch_start_.store(io::get_le<std::uint64_t>(is));
    s->batch_len_.store(io::get_le<std::uint64_t>(is));
    for (std::size_t i = 0; i < s->nwords_; ++i) s->bits_[i].store(io::get_le<std::uint64_t>(is));
    return s;
  }

 private:
  std::size_t capacity_;
  std::size_t nwords_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> bits_;
  std::atomic<std::size_t> batch_start_{0};
  std::atomic<std::size_t> batch_len_{0};
};

/// True while the page's redundancy may be stale: its dirty bit is set, or it is in the current
/// batch with its shadow bit set. The dirty bit is read first; the updater persists the shadow bit
/// before clearing the dirty bit, so the pair cannot be observed both clear mid-update.
inline bool is_covered_pending(const ShadowState& shadow, const PagedStore& store, std::size_t page) {
  if (store.is_dirty(page)) return true;
  return shadow.test_page(page);
}

}  // namespace asyred
