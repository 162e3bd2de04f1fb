#pragma once

// Flexible duty cycle: a slot o is split into o1 (vehicles own the
// unlicensed band) and o2 = o - o1 (WiFi owns it).

namespace semalloc::coexist {

struct DutyCycle {
  double o_total_s = 1.0;
  double o1_fraction = 0.5;
  double o1_min = 0.05;
  double o1_max = 0.95;
};

struct SlotSplit {
  double o1_s = 0.0;
  double o2_s = 0.0;
  bool clamped = false;  // requested fraction was outside [o1_min, o1_max]
};

// o2 is always derived as o_total - o1, never computed independently.
SlotSplit split_slot(const DutyCycle& dc);

struct WifiGroup {
  double rate_bits_s = 143e6;
  int associated_vehicle = 0;
  double st_floor = 0.0;
};

// (R_w / u) * o2. Throws std::invalid_argument for u < 1 or a non-positive rate.
double st_wifi(const WifiGroup& group, int u, double o2_s);

}  // namespace semalloc::coexist
