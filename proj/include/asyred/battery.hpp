#pragma once

namespace asyred {

/// Server draw and energy-storage prices for the post-power-failure redundancy pass.
struct BatteryModel {
  double server_watts = 500.0;
  double ultracap_usd_per_kj = 2.85;
  double liion_usd_per_kj = 0.02;
};

struct BatteryCost {
  double pass_seconds = 0;
  double energy_kj = 0;
  double ultracap_usd = 0;
  double liion_usd = 0;

  friend bool operator==(const BatteryCost&, const BatteryCost&) = default;
};

inline BatteryCost battery_cost(const BatteryModel& m, double pass_seconds) {
  BatteryCost c;
  c.pass_seconds = pass_seconds;
  c.energy_kj = m.server_watts * pass_seconds / 1000.0;
  c.ultracap_usd = c.energy_kj * m.ultracap_usd_per_kj;
  c.liion_usd = c.energy_kj * m.liion_usd_per_kj;
  return c;
}

}  // namespace asyred
