#include <gtest/gtest.h>

#include <algorithm>

#include "semalloc/coexist.h"
#include "semalloc/rng.h"

namespace semalloc::coexist {
namespace {

TEST(DutyCycle, SplitConservesTheSlotExactly) {
  Rng rng = make_stream(1, "dc");
  for (int i = 0; i < 1000000; ++i) {
    double o = 0.001 + 2.0 * uniform01(rng);
    double f = -0.5 + 2.0 * uniform01(rng);
    SlotSplit s = split_slot({o, f, 0.05, 0.95});
    ASSERT_EQ(s.o1_s + s.o2_s, o);
    ASSERT_NEAR(s.o1_s, std::clamp(f, 0.05, 0.95) * o, 1e-15);
  }
}

TEST(DutyCycle, ClampsAndFlags) {
  SlotSplit lo = split_slot({1.0, 0.0, 0.05, 0.95});
  EXPECT_TRUE(lo.clamped);
  EXPECT_DOUBLE_EQ(lo.o1_s, 0.05);
  SlotSplit mid = split_slot({1.0, 0.3, 0.05, 0.95});
  EXPECT_FALSE(mid.clamped);
  EXPECT_DOUBLE_EQ(mid.o1_s, 0.3);
  EXPECT_DOUBLE_EQ(mid.o2_s, 0.7);
}

TEST(Wifi, ThroughputIsRateOverUTimesAirtime) {
  WifiGroup g{100.0, 0, 0.0};
  EXPECT_DOUBLE_EQ(st_wifi(g, 8, 1.0), 12.5);
  EXPECT_DOUBLE_EQ(st_wifi(g, 4, 1.0), 25.0);
  EXPECT_DOUBLE_EQ(st_wifi(g, 4, 0.5), 12.5);
  EXPECT_THROW(st_wifi(g, 0, 1.0), std::invalid_argument);
}

TEST(Wifi, MoreVehicleAirtimeMeansLessWifi) {
  WifiGroup g;
  double prev = 1e300;
  for (double f = 0.05; f <= 0.95; f += 0.05) {
    SlotSplit s = split_slot({1.0, f, 0.05, 0.95});
    double st = st_wifi(g, 8, s.o2_s);
    EXPECT_LT(st, prev);
    prev = st;
  }
}

}  // namespace
}  // namespace semalloc::coexist
