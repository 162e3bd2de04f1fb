#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "../support/brute_force.h"
#include "semalloc/netsim.h"

namespace semalloc::netsim {
namespace {

TEST(PathLoss, MatchesLogDistanceLaw) {
  EXPECT_NEAR(path_loss_db(0.1), 90.5, 1e-12);
  EXPECT_NEAR(path_loss_db(1.0), 128.1, 1e-12);
  EXPECT_NEAR(path_loss_db(10.0), 165.7, 1e-12);
}

TEST(PathLoss, IncreasesWithDistance) {
  double prev = path_loss_db(0.01);
  for (double d = 0.02; d < 2.0; d += 0.01) {
    double pl = path_loss_db(d);
    EXPECT_GT(pl, prev);
    prev = pl;
  }
}

TEST(Units, DbConversions) {
  EXPECT_NEAR(db_to_linear(30.0), 1000.0, 1e-9);
  EXPECT_NEAR(linear_to_db(0.01), -20.0, 1e-12);
  EXPECT_NEAR(dbm_to_watts(30.0), 1.0, 1e-12);
  EXPECT_NEAR(dbm_to_watts(23.0), 0.19952623149688797, 1e-15);
}

TEST(Noise, ThermalPlusFigureOverOneRb) {
  ScenarioConfig cfg;
  // -174 + 10 log10(15e3) + 9 dBm
  double expected_dbm = -174.0 + 10.0 * std::log10(15e3) + 9.0;
  EXPECT_NEAR(expected_dbm, -123.23908740944319, 1e-9);
  EXPECT_NEAR(linear_to_db(noise_power_w(cfg)) + 30.0, expected_dbm, 1e-9);
}

TEST(Topology, DeterministicAndInsideArea) {
  ScenarioConfig cfg;
  Topology a = build_topology(cfg), b = build_topology(cfg);
  ASSERT_EQ(a.mib_positions.size(), 2u);
  for (std::size_t i = 0; i < a.mib_positions.size(); ++i) {
    EXPECT_EQ(a.mib_positions[i].x, b.mib_positions[i].x);
    EXPECT_GE(a.mib_positions[i].x, 0.0);
    EXPECT_LE(a.mib_positions[i].x, cfg.area_side_m);
  }
  EXPECT_DOUBLE_EQ(a.mab_positions[0].x, 500.0);
  EXPECT_EQ(a.num_links(), 12 + 2 * 12);
  EXPECT_EQ(a.num_macro_links(), 12);
}

TEST(Topology, LinkIndexRoundTrips) {
  ScenarioConfig cfg;
  cfg.rb_count_mib = 5;
  Topology t = build_topology(cfg);
  for (int i = 0; i < t.num_links(); ++i) EXPECT_EQ(t.link_index(t.link(i)), i);
  EXPECT_EQ(t.tier(t.link(0).bs), Tier::kMacro);
  EXPECT_EQ(t.tier(t.link(t.num_links() - 1).bs), Tier::kMicro);
}

TEST(Topology, RejectsDegenerateScenarios) {
  ScenarioConfig cfg;
  cfg.rb_count_mab = 0;
  EXPECT_THROW(build_topology(cfg), std::invalid_argument);
  cfg = {};
  cfg.num_mab = 0;
  cfg.num_mib = 0;
  EXPECT_THROW(build_topology(cfg), std::invalid_argument);
  cfg = {};
  cfg.area_side_m = -1.0;
  EXPECT_THROW(build_topology(cfg), std::invalid_argument);
}

TEST(Mobility, StraightLineStep) {
  ScenarioConfig cfg;
  Topology topo = build_topology(cfg);
  std::vector<VehicleState> v = {{{500.0, 500.0}, {1.0, 0.0}, 10.0}};
  step_mobility(v, 0.005, topo);
  EXPECT_NEAR(v[0].position.x, 500.05, 1e-12);
  EXPECT_NEAR(v[0].position.y, 500.0, 1e-12);
}

TEST(Mobility, ReflectsAtWallsAndStaysInside) {
  ScenarioConfig cfg;
  Topology topo = build_topology(cfg);
  std::vector<VehicleState> v = {{{999.99, 0.02}, {1.0, -1.0}, 10.0}};
  step_mobility(v, 0.005, topo);
  EXPECT_LE(v[0].position.x, 1000.0);
  EXPECT_GE(v[0].position.y, 0.0);
  EXPECT_LT(v[0].heading.x, 0.0);
  EXPECT_GT(v[0].heading.y, 0.0);

  Rng rng = make_stream(4, "walk");
  auto fleet = place_vehicles(cfg, topo, rng);
  for (int t = 0; t < 5000; ++t) {
    step_mobility(fleet, 0.5, topo);
    for (const auto& s : fleet) {
      ASSERT_GE(s.position.x, 0.0);
      ASSERT_LE(s.position.x, 1000.0);
      ASSERT_GE(s.position.y, 0.0);
      ASSERT_LE(s.position.y, 1000.0);
    }
  }
}

TEST(Mobility, RejectsNonPositiveStep) {
  ScenarioConfig cfg;
  Topology topo = build_topology(cfg);
  std::vector<VehicleState> v(1);
  EXPECT_THROW(step_mobility(v, 0.0, topo), std::invalid_argument);
}

TEST(Channel, GainAtOneKilometreWithoutFading) {
  ScenarioConfig cfg;
  cfg.rayleigh_fading = false;
  Topology topo = build_topology(cfg);
  // Horizontal offset chosen so the 3D distance is exactly 1 km.
  double dz = cfg.bs_height_m - cfg.vehicle_height_m;
  double dx = std::sqrt(1000.0 * 1000.0 - dz * dz);
  std::vector<VehicleState> v = {{{500.0 + dx, 500.0}, {1.0, 0.0}, 0.0}};
  Rng rng(1);
  auto ch = realize_channel(v, topo, cfg, rng);
  EXPECT_NEAR(ch.gain(0, 0, 0) / std::pow(10.0, -12.81), 1.0, 1e-9);
}

TEST(Channel, DistanceIsClamped) {
  ScenarioConfig cfg;
  cfg.rayleigh_fading = false;
  Topology topo = build_topology(cfg);
  cfg.bs_height_m = 1.5;
  topo.bs_height_m = 1.5;
  std::vector<VehicleState> v = {{{500.0, 500.0}, {1.0, 0.0}, 0.0}};
  Rng rng(1);
  auto ch = realize_channel(v, topo, cfg, rng);
  EXPECT_NEAR(ch.path_loss_db(0, 0), path_loss_db(0.01), 1e-12);
}

TEST(Channel, RayleighPowerHasUnitMean) {
  ScenarioConfig cfg;
  Topology topo = build_topology(cfg);
  std::vector<VehicleState> v = {{{100.0, 100.0}, {1.0, 0.0}, 0.0}};
  Rng rng = make_stream(11, "fading");
  double sum = 0.0, sq = 0.0;
  int count = 0;
  for (int i = 0; i < 4000; ++i) {
    auto ch = realize_channel(v, topo, cfg, rng);
    for (int b = 0; b < topo.num_bs(); ++b) {
      for (int r = 0; r < topo.rb_count(b); ++r) {
        double f = ch.fading(0, b, r);
        ASSERT_GE(f, 0.0);
        sum += f;
        sq += f * f;
        ++count;
      }
    }
  }
  double mean = sum / count;
  EXPECT_NEAR(mean, 1.0, 0.02);
  // Exponential: E[f^2] = 2.
  EXPECT_NEAR(sq / count, 2.0, 0.08);
}

struct Fixture {
  ScenarioConfig cfg;
  Topology topo;
  std::vector<VehicleState> veh;
  ChannelRealization ch;
  Fixture() {
    cfg.rb_count_mab = 3;
    cfg.rb_count_mib = 3;
    topo = build_topology(cfg);
    Rng rng = make_stream(9, "fixture");
    veh = place_vehicles(cfg, topo, rng);
    ch = realize_channel(veh, topo, cfg, rng);
  }
};

TEST(Interference, SameTierNeverInterferes) {
  Fixture f;
  Allocation alloc(f.veh.size());
  // Two macro-tier users on RB 0 and two micro users on RB 1 of different MiBs.
  alloc[0] = {{0, 0}, 0.1};
  alloc[1] = {{0, 0}, 0.1};
  alloc[2] = {{1, 1}, 0.1};
  alloc[3] = {{2, 1}, 0.1};
  EXPECT_EQ(interference(alloc, f.ch, f.topo, 0, alloc[0].link), 0.0);
  EXPECT_EQ(interference(alloc, f.ch, f.topo, 2, alloc[2].link), 0.0);
}

TEST(Interference, CrossTierOnSameRbIndexOnly) {
  Fixture f;
  Allocation alloc(f.veh.size());
  alloc[0] = {{0, 1}, 0.1};
  alloc[1] = {{1, 1}, 0.2};  // micro, same RB index: interferes
  alloc[2] = {{2, 2}, 0.3};  // micro, other RB: silent
  double d = interference(alloc, f.ch, f.topo, 0, alloc[0].link);
  EXPECT_NEAR(d, 0.2 * f.ch.gain(1, 0, 1), 1e-30);
  EXPECT_GT(d, 0.0);
}

TEST(Sinr, MatchesBruteForce) {
  Fixture f;
  Rng rng = make_stream(2, "alloc");
  std::vector<testing::BruteLink> links(f.veh.size());
  Allocation alloc(f.veh.size());
  for (int trial = 0; trial < 200; ++trial) {
    for (std::size_t n = 0; n < f.veh.size(); ++n) {
      LinkId id = f.topo.link(static_cast<int>(uniform01(rng) * f.topo.num_links()));
      double p = 0.2 * (1.0 - uniform01(rng));
      alloc[n] = {id, p};
      links[n] = {id.bs, id.rb, p};
    }
    for (int n = 0; n < static_cast<int>(f.veh.size()); ++n) {
      double ours = sinr(alloc, f.ch, f.topo, n, alloc[n].link);
      double ref = testing::brute_sinr(links, f.veh, f.topo, f.ch, n, f.ch.noise_power_w());
      ASSERT_LT(testing::rel_err(ours, ref), 1e-12);
    }
  }
}

TEST(Sinr, ZeroWhenNotAttachedThere) {
  Fixture f;
  Allocation alloc(f.veh.size());
  alloc[0] = {{0, 0}, 0.1};
  EXPECT_EQ(sinr(alloc, f.ch, f.topo, 0, {1, 0}), 0.0);
}

}  // namespace
}  // namespace semalloc::netsim
