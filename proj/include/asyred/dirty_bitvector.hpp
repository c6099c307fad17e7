#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace asyred {

/// Snapshot of dirty bits for pages [base_page, base_page + size()).
class DirtyBitvector {
 public:
  DirtyBitvector() = default;
  DirtyBitvector(std::size_t base_page, std::size_t nbits)
      : base_page_(base_page), nbits_(nbits), words_((nbits + 63) / 64, 0) {}

  std::size_t base_page() const { return base_page_; }
  std::size_t size() const { return nbits_; }
  std::size_t end_page() const { return base_page_ + nbits_; }

  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool v = true) {
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (v)
      words_[i / 64] |= bit;
    else
      words_[i / 64] &= ~bit;
  }
  bool test_page(std::size_t page) const {
    return page >= base_page_ && page < end_page() && test(page - base_page_);
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool none() const { return count() == 0; }

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  /// Bit i printed at position i, e.g. "01010000".
  std::string to_string() const {
    std::string s(nbits_, '0');
    for (std::size_t i = 0; i < nbits_; ++i)
      if (test(i)) s[i] = '1';
    return s;
  }

  friend bool operator==(const DirtyBitvector&, const DirtyBitvector&) = default;

 private:
  std::size_t base_page_ = 0;
  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace asyred
