#pragma once

// Three-tier radio environment: macro cells (licensed), micro cells
// (unlicensed) and WiFi access points, vehicle mobility, path loss with
// Rayleigh fading, cross-tier interference and per-link SINR.

#include <cstdint>
#include <span>
#include <vector>

#include "semalloc/rng.h"

namespace semalloc::netsim {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class Tier { kMacro, kMicro };

struct ScenarioConfig {
  int num_mab = 1;
  int num_mib = 2;
  int num_wifi_ap = 2;
  int rb_count_mab = 12;
  int rb_count_mib = 12;
  double rb_bandwidth_hz = 15e3;
  double bs_height_m = 25.0;
  double vehicle_height_m = 1.5;
  double area_side_m = 1000.0;
  int num_vehicles = 5;
  double speed_mps = 10.0;
  double step_s = 0.005;
  double min_distance_m = 10.0;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  bool rayleigh_fading = true;
  std::uint64_t layout_seed = 7;
};

// Thermal noise over one RB plus the receiver noise figure, in watts.
double noise_power_w(const ScenarioConfig& cfg);

struct LinkId {
  int bs = -1;
  int rb = -1;
  friend bool operator==(const LinkId&, const LinkId&) = default;
};

// Base stations are indexed macro-first: [0, num_mab) are MaBs, the rest MiBs.
class Topology {
 public:
  std::vector<Point> mab_positions;
  std::vector<Point> mib_positions;
  std::vector<Point> wifi_ap_positions;
  int rb_count_mab = 0;
  int rb_count_mib = 0;
  double rb_bandwidth_hz = 0.0;
  double bs_height_m = 0.0;
  double vehicle_height_m = 0.0;
  double area_side_m = 0.0;

  int num_bs() const {
    return static_cast<int>(mab_positions.size() + mib_positions.size());
  }
  Tier tier(int bs) const;
  Point bs_position(int bs) const;
  int rb_count(int bs) const;
  int max_rb_count() const;

  // Flattened (BS, RB) index space used by the attachment head.
  int num_links() const;
  LinkId link(int index) const;
  int link_index(LinkId id) const;
  int num_macro_links() const;
};

// Deterministic for a given config (positions come from layout_seed).
// Throws std::invalid_argument on non-positive dimensions or zero RBs.
Topology build_topology(const ScenarioConfig& cfg);

struct VehicleState {
  Point position;
  Point heading{1.0, 0.0};
  double speed_mps = 0.0;
};

// Places vehicles uniformly in the area with uniform random headings.
std::vector<VehicleState> place_vehicles(const ScenarioConfig& cfg,
                                         const Topology& topo, Rng& rng);

// Advances each vehicle by speed*dt along its heading. Vehicles leaving the
// square are reflected back inside with the matching heading component
// mirrored. Throws std::invalid_argument if dt_s <= 0.
void step_mobility(std::span<VehicleState> vehicles, double dt_s,
                   const Topology& topo);

// 128.1 + 37.6 log10(d) with d in km.
double path_loss_db(double distance_km);

double db_to_linear(double db);
double linear_to_db(double linear);
double dbm_to_watts(double dbm);

class ChannelRealization {
 public:
  ChannelRealization() = default;
  ChannelRealization(int num_vehicles, int num_bs, int max_rb,
                     double noise_power_w);

  int num_vehicles() const { return num_vehicles_; }
  int num_bs() const { return num_bs_; }
  int max_rb() const { return max_rb_; }
  double noise_power_w() const { return noise_power_w_; }

  double& path_loss_db(int n, int b) { return path_loss_db_[n * num_bs_ + b]; }
  double path_loss_db(int n, int b) const {
    return path_loss_db_[n * num_bs_ + b];
  }
  double& fading(int n, int b, int r) { return fading_[index(n, b, r)]; }
  double fading(int n, int b, int r) const { return fading_[index(n, b, r)]; }

  // Linear channel gain H_{n,b,r}.
  double gain(int n, int b, int r) const {
    return db_to_linear(-path_loss_db(n, b)) * fading(n, b, r);
  }

 private:
  std::size_t index(int n, int b, int r) const {
    return (static_cast<std::size_t>(n) * num_bs_ + b) * max_rb_ + r;
  }

  int num_vehicles_ = 0;
  int num_bs_ = 0;
  int max_rb_ = 0;
  double noise_power_w_ = 0.0;
  std::vector<double> path_loss_db_;
  std::vector<double> fading_;
};

double distance_3d_m(const VehicleState& v, Point bs, const Topology& topo);

// Path loss from clamped 3D distance times a fading draw per (n, b, r).
// With rayleigh disabled every fading sample is exactly 1.
ChannelRealization realize_channel(std::span<const VehicleState> vehicles,
                                   const Topology& topo,
                                   const ScenarioConfig& cfg, Rng& rng);

// One vehicle's transmission choice. An inactive choice (bs < 0) means the
// vehicle transmits nothing this step.
struct LinkChoice {
  LinkId link;
  double power_w = 0.0;
  bool active() const { return link.bs >= 0; }
};

using Allocation = std::vector<LinkChoice>;

// Cross-tier interference on RB r at BS b experienced by vehicle n: other
// vehicles attached to the opposite tier on the same RB index. Same-tier
// links never contribute.
double interference(std::span<const LinkChoice> alloc,
                    const ChannelRealization& ch, const Topology& topo, int n,
                    LinkId at);

// eta * p * H / (D + noise); zero when vehicle n is not on (b, r).
double sinr(std::span<const LinkChoice> alloc, const ChannelRealization& ch,
            const Topology& topo, int n, LinkId at);

}  // namespace semalloc::netsim
