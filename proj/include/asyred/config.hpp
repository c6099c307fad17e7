#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace asyred {

struct bounds_error : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct StoreConfig {
  std::size_t page_size = 4096;
  std::size_t cache_line = 64;
  std::size_t num_pages = 16384;
  std::size_t batch_size = 512;

  void validate() const {
    if (cache_line == 0 || page_size == 0 || page_size % cache_line != 0)
      throw config_error("page_size must be a positive multiple of cache_line");
    if (num_pages == 0) throw config_error("num_pages must be at least 1");
    if (batch_size == 0 || batch_size > num_pages)
      throw config_error("batch_size must be in [1, num_pages]");
  }

  std::size_t lines_per_page() const { return page_size / cache_line; }
  std::size_t num_batches() const { return (num_pages + batch_size - 1) / batch_size; }
};

struct StripeConfig {
  std::size_t data_pages_per_stripe = 4;

  std::size_t pages_per_stripe() const { return data_pages_per_stripe + 1; }

  void validate() const {
    if (data_pages_per_stripe == 0) throw config_error("a stripe needs at least one data page");
  }

  std::size_t stripe_of(std::size_t page) const { return page / data_pages_per_stripe; }
  std::size_t first_page(std::size_t stripe) const { return stripe * data_pages_per_stripe; }
  std::size_t num_stripes(std::size_t num_pages) const {
    return (num_pages + data_pages_per_stripe - 1) / data_pages_per_stripe;
  }
};

}  // namespace asyred
