#pragma once

#include <cstddef>
#include <cstdint>

#include "updater.hpp"

namespace asyred {

/// Nanosecond costs used to turn operation counts into simulated time. Rough NVM-era figures;
/// only ratios between runs are meaningful.
struct CostModel {
  double checksum_ns_per_page = 4000;    // CRC-32C of one 4 KiB page read from NVM
  double parity_ns_per_stripe = 12000;   // read every data page of the stripe, write parity
  double syscall_ns = 1000;
  double walk_step_ns = 150;
  double dirty_bit_ns = 5;               // read (and possibly reset) one PTE dirty bit
  double invalidation_ns = 400;          // one TLB entry invalidation
  double meta_ns_per_page = 1;           // meta-checksum input is 4 bytes per page
  double write_op_ns = 300;
  double read_op_ns = 150;

  double dirty_bit_seconds(const DirtyBitCounters& c) const {
    return 1e-9 * (syscall_ns * static_cast<double>(c.syscalls()) + walk_step_ns * static_cast<double>(c.walk_steps) +
                   dirty_bit_ns * static_cast<double>(c.bits_read) +
                   invalidation_ns * static_cast<double>(c.invalidations));
  }

  double pass_seconds(const PassStats& s, std::size_t num_pages) const {
    return dirty_bit_seconds(s.dirty_ops) +
           1e-9 * (checksum_ns_per_page * static_cast<double>(s.pages_checksummed) +
                   parity_ns_per_stripe * static_cast<double>(s.stripes_reparitied) +
                   meta_ns_per_page * static_cast<double>(num_pages));
  }

  double workload_seconds(std::uint64_t reads, std::uint64_t writes) const {
    return 1e-9 * (read_op_ns * static_cast<double>(reads) + write_op_ns * static_cast<double>(writes));
  }
};

}  // namespace asyred
