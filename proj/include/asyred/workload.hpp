#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "config.hpp"
#include "cost_model.hpp"
#include "paged_store.hpp"

namespace asyred {

enum class AccessMode : std::uint8_t { write_only, read_only, mixed };
enum class AccessPattern : std::uint8_t { uniform_random, sequential, zipf };

inline std::string_view to_string(AccessMode m) {
  switch (m) {
    case AccessMode::write_only: return "write_only";
    case AccessMode::read_only: return "read_only";
    case AccessMode::mixed: return "mixed";
  }
  return "?";
}

inline std::string_view to_string(AccessPattern p) {
  switch (p) {
    case AccessPattern::uniform_random: return "uniform_random";
    case AccessPattern::sequential: return "sequential";
    case AccessPattern::zipf: return "zipf";
  }
  return "?";
}

inline std::optional<AccessMode> access_mode_from_string(std::string_view s) {
  for (auto m : {AccessMode::write_only, AccessMode::read_only, AccessMode::mixed})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

inline std::optional<AccessPattern> access_pattern_from_string(std::string_view s) {
  for (auto p : {AccessPattern::uniform_random, AccessPattern::sequential, AccessPattern::zipf})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

struct WorkloadSpec {
  AccessMode mode = AccessMode::write_only;
  double read_fraction = 0.0;  // used by mixed
  AccessPattern pattern = AccessPattern::uniform_random;
  double zipf_theta = 0.99;
  std::size_t io_size = 64;
  std::uint64_t total_ops = 0;
  std::size_t threads = 1;
  std::uint64_t seed = 1;
  bool shared_range = false;  // all threads address the whole store instead of disjoint slices

  double effective_read_fraction() const {
    switch (mode) {
      case AccessMode::write_only: return 0.0;
      case AccessMode::read_only: return 1.0;
      case AccessMode::mixed: return read_fraction;
    }
    return 0.0;
  }

  void validate(const StoreConfig& store) const {
    if (io_size == 0 || io_size % store.cache_line != 0 || io_size > store.page_size ||
        store.page_size % io_size != 0)
      throw config_error("io_size must be a cache-line multiple dividing the page size");
    if (read_fraction < 0.0 || read_fraction > 1.0) throw config_error("read_fraction must be in [0, 1]");
    if (pattern == AccessPattern::zipf && !(zipf_theta > 0.0 && zipf_theta <= 1.2))
      throw config_error("zipf theta must be in (0, 1.2]");
    if (threads == 0) throw config_error("threads must be at least 1");
    if (!shared_range && threads > store.num_pages) throw config_error("more threads than pages");
  }

  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

/// YCSB-style key-value mix: zipf(0.99) keys hashed onto the store.
inline WorkloadSpec make_ycsb_like_mix(double read_fraction) {
  if (read_fraction < 0.0 || read_fraction > 1.0) throw config_error("read_fraction must be in [0, 1]");
  WorkloadSpec s;
  s.mode = read_fraction >= 1.0 ? AccessMode::read_only : AccessMode::mixed;
  s.read_fraction = read_fraction;
  s.pattern = AccessPattern::zipf;
  s.zipf_theta = 0.99;
  return s;
}

/// Exact zipf sampler over ranks [0, n): P(rank k) proportional to 1 / (k+1)^theta.
class ZipfTable {
 public:
  ZipfTable(std::size_t n, double theta) : cdf_(n) {
    if (n == 0) throw config_error("zipf over an empty key space");
    double sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
      sum += std::pow(static_cast<double>(k + 1), -theta);
      cdf_[k] = sum;
    }
    for (auto& c : cdf_) c /= sum;
    cdf_.back() = 1.0;
  }

  std::size_t size() const { return cdf_.size(); }
  double mass(std::size_t rank) const { return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1]; }

  std::size_t sample(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

inline std::uint64_t fnv1a64(std::uint64_t v) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct Op {
  bool write;
  std::size_t page;
  std::size_t offset;

  friend bool operator==(const Op&, const Op&) = default;
};

/// Deterministic operation sequence for one thread over pages [first_page, first_page + num_pages).
/// The address space is cut into io_size slots. Sequential walks them in order; uniform_random
/// visits a fresh permutation of them, so each slot is hit exactly once per cycle; zipf hashes a
/// zipf-distributed key rank onto a slot.
class OpStream {
 public:
  OpStream(const WorkloadSpec& spec, const StoreConfig& store, std::size_t first_page, std::size_t num_pages,
           std::size_t thread_index, std::shared_ptr<const ZipfTable> zipf = nullptr)
      : spec_(spec),
        first_page_(first_page),
        slots_per_page_(store.page_size / spec.io_size),
        slots_(num_pages * slots_per_page_),
        rng_(spec.seed * 0x9E3779B97F4A7C15ull + thread_index + 1),
        read_fraction_(spec.effective_read_fraction()),
        zipf_(std::move(zipf)) {
    if (spec_.pattern == AccessPattern::zipf && !zipf_) zipf_ = std::make_shared<ZipfTable>(slots_, spec_.zipf_theta);
  }

  Op next() {
    const bool is_write = read_fraction_ <= 0.0 ? true : read_fraction_ >= 1.0 ? false : coin_(rng_) >= read_fraction_;
    const std::size_t slot = next_slot();
    return {is_write, first_page_ + slot / slots_per_page_, (slot % slots_per_page_) * spec_.io_size};
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::size_t next_slot() {
    switch (spec_.pattern) {
      case AccessPattern::sequential:
        return cursor_++ % slots_;
      case AccessPattern::uniform_random:
        if (cursor_ % slots_ == 0) {
          if (perm_.empty()) {
            perm_.resize(slots_);
            std::iota(perm_.begin(), perm_.end(), 0u);
          }
          std::shuffle(perm_.begin(), perm_.end(), rng_);
        }
        return perm_[cursor_++ % slots_];
      case AccessPattern::zipf: {
        const std::size_t rank = zipf_->sample(coin_(rng_));
        return static_cast<std::size_t>(fnv1a64(rank) % slots_);
      }
    }
    return 0;
  }

  WorkloadSpec spec_;
  std::size_t first_page_;
  std::size_t slots_per_page_;
  std::size_t slots_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> coin_{0.0, 1.0};
  double read_fraction_;
  std::shared_ptr<const ZipfTable> zipf_;
  std::vector<std::uint32_t> perm_;
  std::uint64_t cursor_ = 0;
};

struct WorkloadStats {
  std::uint64_t ops = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::size_t distinct_pages_touched = 0;
  std::size_t distinct_pages_written = 0;
  double simulated_seconds = 0;
  std::vector<double> thread_ops_per_sec;
};

using WriteObserver = std::function<void(std::size_t page, std::size_t offset, std::span<const std::byte>)>;

/// Drives a workload against a store in chunks; op streams continue across `run` calls.
class WorkloadRunner {
 public:
  WorkloadRunner(PagedStore& store, WorkloadSpec spec, CostModel cost = {}, WriteObserver observer = {})
      : store_(store), spec_(spec), cost_(cost), observer_(std::move(observer)) {
    spec_.validate(store.config());
    const std::size_t n = store.num_pages();
    std::shared_ptr<const ZipfTable> shared_zipf;
    for (std::size_t t = 0; t < spec_.threads; ++t) {
      std::size_t first = 0;
      std::size_t count = n;
      if (!spec_.shared_range) {
        first = n * t / spec_.threads;
        count = n * (t + 1) / spec_.threads - first;
      }
      std::shared_ptr<const ZipfTable> zipf;
      if (spec_.pattern == AccessPattern::zipf) {
        if (spec_.shared_range) {
          if (!shared_zipf)
            shared_zipf = std::make_shared<ZipfTable>(count * (store.page_size() / spec_.io_size), spec_.zipf_theta);
          zipf = shared_zipf;
        }
      }
      streams_.emplace_back(spec_, store.config(), first, count, t, zipf);
    }
    touched_.assign(n, 0);
    written_.assign(n, 0);
    thread_ops_.assign(spec_.threads, 0);
    thread_reads_.assign(spec_.threads, 0);
    thread_writes_.assign(spec_.threads, 0);
  }

  const WorkloadSpec& spec() const { return spec_; }

  WorkloadStats run(std::uint64_t ops) {
    const std::size_t nt = spec_.threads;
    std::vector<std::uint64_t> share(nt, ops / nt);
    for (std::size_t t = 0; t < ops % nt; ++t) share[t] += 1;

    if (nt == 1) {
      run_thread(0, share[0]);
    } else {
      std::vector<std::jthread> workers;
      workers.reserve(nt);
      for (std::size_t t = 0; t < nt; ++t) workers.emplace_back([this, t, n = share[t]] { run_thread(t, n); });
    }
    return totals();
  }

  WorkloadStats totals() const {
    std::lock_guard g(mu_);
    WorkloadStats s;
    for (std::size_t t = 0; t < spec_.threads; ++t) {
      s.ops += thread_ops_[t];
      s.reads += thread_reads_[t];
      s.writes += thread_writes_[t];
      const double secs = cost_.workload_seconds(thread_reads_[t], thread_writes_[t]);
      s.simulated_seconds = std::max(s.simulated_seconds, secs);
      s.thread_ops_per_sec.push_back(secs > 0 ? static_cast<double>(thread_ops_[t]) / secs : 0.0);
    }
    s.distinct_pages_touched = static_cast<std::size_t>(std::count(touched_.begin(), touched_.end(), 1));
    s.distinct_pages_written = static_cast<std::size_t>(std::count(written_.begin(), written_.end(), 1));
    return s;
  }

 private:
  void run_thread(std::size_t t, std::uint64_t n) {
    OpStream& stream = streams_[t];
    std::vector<std::byte> payload(spec_.io_size);
    std::vector<std::byte> sink(spec_.io_size);
    std::vector<std::size_t> touched;
    std::vector<std::size_t> written;
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const Op op = stream.next();
      touched.push_back(op.page);
      if (op.write) {
        fill_payload(stream.rng(), payload);
        store_.write(op.page, op.offset, payload);
        if (observer_) observer_(op.page, op.offset, payload);
        written.push_back(op.page);
        ++writes;
      } else {
        store_.read_into(op.page, op.offset, sink);
        ++reads;
      }
    }
    std::lock_guard g(mu_);
    for (auto p : touched) touched_[p] = 1;
    for (auto p : written) written_[p] = 1;
    thread_ops_[t] += n;
    thread_reads_[t] += reads;
    thread_writes_[t] += writes;
  }

  static void fill_payload(std::mt19937_64& rng, std::span<std::byte> out) {
    for (std::size_t i = 0; i < out.size(); i += 8) {
      const std::uint64_t v = rng();
      for (std::size_t j = 0; j < 8 && i + j < out.size(); ++j)
        out[i + j] = static_cast<std::byte>((v >> (8 * j)) & 0xFF);
    }
  }

  PagedStore& store_;
  WorkloadSpec spec_;
  CostModel cost_;
  WriteObserver observer_;
  std::vector<OpStream> streams_;
  mutable std::mutex mu_;
  std::vector<std::uint8_t> touched_;
  std::vector<std::uint8_t> written_;
  std::vector<std::uint64_t> thread_ops_;
  std::vector<std::uint64_t> thread_reads_;
  std::vector<std::uint64_t> thread_writes_;
};

inline WorkloadStats run_workload(PagedStore& store, const WorkloadSpec& spec, CostModel cost = {},
                                  WriteObserver observer = {}) {
  WorkloadRunner runner(store, spec, cost, std::move(observer));
  return runner.run(spec.total_ops);
}

}  // namespace asyred
