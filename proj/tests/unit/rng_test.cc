#include <gtest/gtest.h>

#include "semalloc/rng.h"

namespace semalloc {
namespace {

TEST(Rng, NamedStreamsAreIndependentAndStable) {
  EXPECT_EQ(derive_seed(1, "fading"), derive_seed(1, "fading"));
  EXPECT_NE(derive_seed(1, "fading"), derive_seed(1, "mobility"));
  EXPECT_NE(derive_seed(1, "episode", 0), derive_seed(1, "episode", 1));
  Rng a = make_stream(5, "policy"), b = make_stream(5, "policy");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, Uniform01StaysInHalfOpenInterval) {
  Rng r = make_stream(3, "u");
  for (int i = 0; i < 100000; ++i) {
    double u = uniform01(r);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace semalloc
