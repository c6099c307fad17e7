#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "paged_store.hpp"
#include "redundancy.hpp"
#include "shadow_state.hpp"

namespace asyred {

/// total_pages counts every page in the system (data and parity), so that with every stripe
/// vulnerable, vulnerable_stripes * pages_per_stripe == total_pages.
struct MttdlInputs {
  double mttf_page = 1e6;  // hours
  double total_pages = 0;
  double pages_per_stripe = 5;
  double vulnerable_stripes = 0;
};

/// Any single page corruption loses data.
inline double mttdl_no_redundancy(const MttdlInputs& in) {
  if (in.total_pages <= 0) throw std::domain_error("total_pages must be positive");
  return in.mttf_page / in.total_pages;
}

/// Only corruptions in stripes with pending redundancy lose data. Infinite when none are vulnerable.
inline double mttdl_async_redundancy(const MttdlInputs& in) {
  if (in.pages_per_stripe <= 0) throw std::domain_error("pages_per_stripe must be positive");
  if (in.vulnerable_stripes <= 0) return std::numeric_limits<double>::infinity();
  return in.mttf_page / (in.vulnerable_stripes * in.pages_per_stripe);
}

inline double mttdl_improvement(const MttdlInputs& in) {
  return mttdl_async_redundancy(in) / mttdl_no_redundancy(in);
}

inline double system_pages(std::size_t data_pages, const StripeConfig& sc) {
  return static_cast<double>(sc.num_stripes(data_pages) * sc.pages_per_stripe());
}

/// Stripes holding at least one page whose redundancy is pending (dirty or shadow-dirty).
inline std::size_t sample_vulnerable_stripes(const PagedStore& store, const ShadowState& shadow,
                                             const StripeConfig& stripes) {
  const std::size_t n = store.num_pages();
  std::size_t vulnerable = 0;
  for (std::size_t s = 0, nstripes = stripes.num_stripes(n); s < nstripes; ++s) {
    const std::size_t first = stripes.first_page(s);
    const std::size_t last = std::min(first + stripes.data_pages_per_stripe, n);
    for (std::size_t p = first; p < last; ++p) {
      if (is_covered_pending(shadow, store, p)) {
        ++vulnerable;
        break;
      }
    }
  }
  return vulnerable;
}

class VulnerabilitySampler {
 public:
  void add(std::size_t v) {
    ++samples_;
    sum_ += static_cast<double>(v);
    max_ = std::max(max_, v);
  }
  std::uint64_t samples() const { return samples_; }
  double mean() const { return samples_ ? sum_ / static_cast<double>(samples_) : 0.0; }
  std::size_t max() const { return max_; }

 private:
  std::uint64_t samples_ = 0;
  double sum_ = 0;
  std::size_t max_ = 0;
};

struct MttdlReport {
  double total_pages = 0;
  double pages_per_stripe = 0;
  double vulnerable_avg = 0;
  std::size_t vulnerable_max = 0;
  std::uint64_t samples = 0;
  double mttf_page = 0;
  double mttdl_none = 0;
  double mttdl_protected = 0;
  double improvement = 0;
};

inline MttdlReport make_mttdl_report(const VulnerabilitySampler& sampler, std::size_t data_pages,
                                     const StripeConfig& sc, double mttf_page) {
  MttdlInputs in{mttf_page, system_pages(data_pages, sc), static_cast<double>(sc.pages_per_stripe()),
                 sampler.mean()};
  MttdlReport r;
  r.total_pages = in.total_pages;
  r.pages_per_stripe = in.pages_per_stripe;
  r.vulnerable_avg = in.vulnerable_stripes;
  r.vulnerable_max = sampler.max();
  r.samples = sampler.samples();
  r.mttf_page = mttf_page;
  r.mttdl_none = mttdl_no_redundancy(in);
  r.mttdl_protected = mttdl_async_redundancy(in);
  r.improvement = mttdl_improvement(in);
  return r;
}

}  // namespace asyred
