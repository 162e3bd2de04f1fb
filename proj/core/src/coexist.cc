#include "semalloc/coexist.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semalloc::coexist {

SlotSplit split_slot(const DutyCycle& dc) {
  SlotSplit out;
  double f = std::clamp(dc.o1_fraction, dc.o1_min, dc.o1_max);
  out.clamped = f != dc.o1_fraction;
  const double o = dc.o_total_s;
  out.o1_s = f * o;
  out.o2_s = o - out.o1_s;
  // o - o1 can round so that o1 + o2 != o; then re-derive o1 from o2 and
  // step it by ulps until the pair sums to o exactly.
  if (out.o1_s + out.o2_s != o) out.o1_s = o - out.o2_s;
  for (int i = 0; i < 8 && out.o1_s + out.o2_s != o; ++i) {
    out.o1_s = std::nextafter(out.o1_s, out.o1_s + out.o2_s < o ? o : 0.0);
  }
  return out;
}

double st_wifi(const WifiGroup& group, int u, double o2_s) {
  if (u < 1) throw std::invalid_argument("u must be >= 1");
  if (!(group.rate_bits_s > 0.0)) throw std::invalid_argument("WiFi rate must be positive");
  return group.rate_bits_s / u * o2_s;
}

}  // namespace semalloc::coexist
