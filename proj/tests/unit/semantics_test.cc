#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "semalloc/error.h"
#include "semalloc/semantics.h"

namespace semalloc::semantics {
namespace {

TEST(Xi, ParametricClosedForm) {
  XiModel m = XiModel::parametric();
  // (1 - e^{-0.3 u}) / (1 + e^{-0.5 (s - 5)})
  double expected = (1.0 - std::exp(-2.4)) / (1.0 + std::exp(-7.5));
  EXPECT_NEAR(m(8, 20.0), expected, 1e-15);
  EXPECT_NEAR(m(1, 5.0), 0.5 * (1.0 - std::exp(-0.3)), 1e-15);
}

TEST(Xi, BoundedAndMonotone) {
  XiModel m = XiModel::parametric();
  for (int u = 1; u <= 25; ++u) {
    for (double s = -20.0; s <= 40.0; s += 0.5) {
      double v = m(u, s);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      ASSERT_GE(m(u + 1, s), v);
      ASSERT_GE(m(u, s + 0.5), v);
    }
  }
}

TEST(Xi, ThresholdNeedsEightSymbolsAtHighSinr) {
  XiModel m = XiModel::parametric();
  EXPECT_EQ(smallest_feasible_u(m, 20.0, 0.9, 20), 8);
  EXPECT_EQ(smallest_feasible_u(m, -10.0, 0.9, 20), 0);
}

TEST(Xi, TableReproducesGridAndInterpolates) {
  ParametricXi c;
  std::vector<int> us = {1, 2, 4, 8, 16};
  std::vector<double> ss = {-5.0, 0.0, 5.0, 10.0, 20.0};
  XiModel t = XiModel::table(XiModel::tabulate(c, us, ss));
  XiModel p = XiModel::parametric(c);
  for (int u : us) {
    for (double s : ss) EXPECT_NEAR(t(u, s), p(u, s), 1e-15);
  }
  // Midpoint in SINR is the average of the neighbours.
  EXPECT_NEAR(t(4, 7.5), 0.5 * (p(4, 5.0) + p(4, 10.0)), 1e-15);
  // Midpoint in u.
  EXPECT_NEAR(t(3, 10.0), 0.5 * (p(2, 10.0) + p(4, 10.0)), 1e-15);
}

TEST(Xi, TableClampsOutsideGridAndFlagsU) {
  XiModel t = XiModel::table(XiModel::tabulate({}, {2, 4}, {0.0, 10.0}));
  XiSample s = t.evaluate(1, 30.0);
  EXPECT_TRUE(s.u_clamped);
  EXPECT_NEAR(s.value, t(2, 10.0), 1e-15);
  EXPECT_FALSE(t.evaluate(3, -40.0).u_clamped);
  EXPECT_NEAR(t(3, -40.0), 0.5 * (t(2, 0.0) + t(4, 0.0)), 1e-15);
}

TEST(Xi, NanSinrIsRejected) {
  XiModel m = XiModel::parametric();
  EXPECT_THROW(m(4, std::nan("")), std::invalid_argument);
  XiModel t = XiModel::table(XiModel::tabulate({}, {1, 2}, {0.0, 1.0}));
  EXPECT_THROW(t(1, std::nan("")), std::invalid_argument);
}

TEST(Xi, TableFileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "semalloc_xi_table.csv";
  XiTable table = XiModel::tabulate({}, {1, 5, 10, 20}, {-10.0, 0.0, 10.5, 30.0});
  write_table(table, path);
  XiModel loaded = XiModel::load_table(path);
  for (std::size_t i = 0; i < table.u_values.size(); ++i) {
    for (std::size_t j = 0; j < table.sinr_db.size(); ++j) {
      EXPECT_EQ(loaded.grid().values[i][j], table.values[i][j]);
    }
  }
  std::filesystem::remove(path);
}

TEST(Xi, MalformedTablesAreConfigErrors) {
  XiTable bad = XiModel::tabulate({}, {1, 2}, {0.0, 1.0});
  bad.values[0][1] = 1.5;
  EXPECT_THROW(XiModel::table(bad), ConfigError);
  bad = XiModel::tabulate({}, {2, 1}, {0.0, 1.0});
  EXPECT_THROW(XiModel::table(bad), ConfigError);
  EXPECT_THROW(XiModel::load_table("/nonexistent/xi.csv"), IoError);
}

TEST(Rates, HandValues) {
  EXPECT_NEAR(hsr(15e3, {1.0, 5}, 0.9), 2700.0, 1e-9);
  EXPECT_NEAR(hsse({1.0, 8}, 0.9), 0.1125, 1e-15);
  EXPECT_NEAR(hsse_bit(255.0, 8.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(st_vehicle(2700.0, 0.5, 1.0), 1350.0, 1e-12);
}

TEST(Rates, RejectOutOfDomainInputs) {
  EXPECT_THROW(hsse({1.0, 0}, 0.5), std::invalid_argument);
  EXPECT_THROW(hsse({1.0, 3}, 1.2), std::invalid_argument);
  EXPECT_THROW(hsse_bit(10.0, 0.5, 1.0), std::invalid_argument);
}

TEST(Rates, HsrIsBandwidthTimesHsse) {
  for (int u = 1; u <= 20; ++u) {
    for (double xi : {0.0, 0.3, 0.91, 1.0}) {
      EXPECT_NEAR(hsr(15e3, {2.0, u}, xi), 15e3 * hsse({2.0, u}, xi), 1e-9);
    }
  }
}

TEST(Rates, BitEfficiencyFallsAsOneOverMu) {
  double prev = hsse_bit(100.0, 5.0, 1.0);
  for (int mu = 6; mu <= 25; ++mu) {
    double h = hsse_bit(100.0, mu, 1.0);
    EXPECT_LT(h, prev);
    EXPECT_NEAR(h * mu, std::log2(101.0), 1e-12);
    prev = h;
  }
}

}  // namespace
}  // namespace semalloc::semantics
