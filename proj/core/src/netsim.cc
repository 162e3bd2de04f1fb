#include "semalloc/netsim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace semalloc::netsim {

double noise_power_w(const ScenarioConfig& cfg) {
  double dbm = cfg.noise_psd_dbm_hz + 10.0 * std::log10(cfg.rb_bandwidth_hz) +
               cfg.noise_figure_db;
  return dbm_to_watts(dbm);
}

Tier Topology::tier(int bs) const {
  return bs < static_cast<int>(mab_positions.size()) ? Tier::kMacro
                                                     : Tier::kMicro;
}

Point Topology::bs_position(int bs) const {
  int n_mab = static_cast<int>(mab_positions.size());
  return bs < n_mab ? mab_positions.at(bs) : mib_positions.at(bs - n_mab);
}

int Topology::rb_count(int bs) const {
  return tier(bs) == Tier::kMacro ? rb_count_mab : rb_count_mib;
}

int Topology::max_rb_count() const {
  int m = 0;
  if (!mab_positions.empty()) m = std::max(m, rb_count_mab);
  if (!mib_positions.empty()) m = std::max(m, rb_count_mib);
  return m;
}

int Topology::num_macro_links() const {
  return static_cast<int>(mab_positions.size()) * rb_count_mab;
}

int Topology::num_links() const {
  return num_macro_links() + static_cast<int>(mib_positions.size()) * rb_count_mib;
}

LinkId Topology::link(int index) const {
  if (index < 0 || index >= num_links()) {
    throw std::out_of_range("link index out of range");
  }
  int macro = num_macro_links();
  if (index < macro) return {index / rb_count_mab, index % rb_count_mab};
  int rest = index - macro;
  return {static_cast<int>(mab_positions.size()) + rest / rb_count_mib,
          rest % rb_count_mib};
}

int Topology::link_index(LinkId id) const {
  if (id.bs < 0 || id.bs >= num_bs() || id.rb < 0 || id.rb >= rb_count(id.bs)) {
    throw std::out_of_range("link id out of range");
  }
  int n_mab = static_cast<int>(mab_positions.size());
  if (id.bs < n_mab) return id.bs * rb_count_mab + id.rb;
  return num_macro_links() + (id.bs - n_mab) * rb_count_mib + id.rb;
}

Topology build_topology(const ScenarioConfig& cfg) {
  if (!(cfg.area_side_m > 0.0)) throw std::invalid_argument("area_side_m must be positive");
  if (cfg.num_mab < 0 || cfg.num_mib < 0 || cfg.num_wifi_ap < 0) {
    throw std::invalid_argument("station counts must be non-negative");
  }
  if (cfg.num_mab + cfg.num_mib < 1) {
    throw std::invalid_argument("at least one base station is required");
  }
  if (cfg.rb_count_mab < 1 || cfg.rb_count_mib < 1) {
    throw std::invalid_argument("RB counts must be >= 1");
  }
  if (!(cfg.rb_bandwidth_hz > 0.0)) throw std::invalid_argument("rb_bandwidth_hz must be positive");
  if (!(cfg.bs_height_m > 0.0) || !(cfg.vehicle_height_m >= 0.0)) {
    throw std::invalid_argument("antenna heights must be positive");
  }

  Topology topo;
  topo.rb_count_mab = cfg.rb_count_mab;
  topo.rb_count_mib = cfg.rb_count_mib;
  topo.rb_bandwidth_hz = cfg.rb_bandwidth_hz;
  topo.bs_height_m = cfg.bs_height_m;
  topo.vehicle_height_m = cfg.vehicle_height_m;
  topo.area_side_m = cfg.area_side_m;

  Rng rng = make_stream(cfg.layout_seed, "layout");
  const double side = cfg.area_side_m;
  auto random_point = [&](double margin) {
    double lo = margin * side;
    double span = (1.0 - 2.0 * margin) * side;
    double x = lo + span * uniform01(rng);
    double y = lo + span * uniform01(rng);
    return Point{x, y};
  };

  // A single macro cell sits at the centre; several are spread at random.
  if (cfg.num_mab == 1) {
    topo.mab_positions.push_back({side / 2.0, side / 2.0});
  } else {
    for (int i = 0; i < cfg.num_mab; ++i) topo.mab_positions.push_back(random_point(0.1));
  }
  for (int i = 0; i < cfg.num_mib; ++i) topo.mib_positions.push_back(random_point(0.1));
  for (int i = 0; i < cfg.num_wifi_ap; ++i) topo.wifi_ap_positions.push_back(random_point(0.05));
  return topo;
}

std::vector<VehicleState> place_vehicles(const ScenarioConfig& cfg,
                                         const Topology& topo, Rng& rng) {
  std::vector<VehicleState> out(static_cast<std::size_t>(cfg.num_vehicles));
  for (auto& v : out) {
    v.position = {topo.area_side_m * uniform01(rng), topo.area_side_m * uniform01(rng)};
    double angle = 2.0 * std::numbers::pi * uniform01(rng);
    v.heading = {std::cos(angle), std::sin(angle)};
    v.speed_mps = cfg.speed_mps;
  }
  return out;
}

namespace {

void reflect(double& coord, double& heading, double side) {
  // A single step never spans the whole area, but loop anyway for huge dt.
  while (coord < 0.0 || coord > side) {
    if (coord < 0.0) {
      coord = -coord;
    } else {
      coord = 2.0 * side - coord;
    }
    heading = -heading;
  }
}

}  // namespace

void step_mobility(std::span<VehicleState> vehicles, double dt_s,
                   const Topology& topo) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("dt_s must be positive");
  for (auto& v : vehicles) {
    v.position.x += v.speed_mps * dt_s * v.heading.x;
    v.position.y += v.speed_mps * dt_s * v.heading.y;
    reflect(v.position.x, v.heading.x, topo.area_side_m);
    reflect(v.position.y, v.heading.y, topo.area_side_m);
  }
}

double path_loss_db(double distance_km) {
  return 128.1 + 37.6 * std::log10(distance_km);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

ChannelRealization::ChannelRealization(int num_vehicles, int num_bs, int max_rb,
                                       double noise_power_w)
    : num_vehicles_(num_vehicles),
      num_bs_(num_bs),
      max_rb_(max_rb),
      noise_power_w_(noise_power_w),
      path_loss_db_(static_cast<std::size_t>(num_vehicles) * num_bs, 0.0),
      fading_(static_cast<std::size_t>(num_vehicles) * num_bs * max_rb, 1.0) {
  if (!(noise_power_w > 0.0)) throw std::invalid_argument("noise power must be positive");
}

double distance_3d_m(const VehicleState& v, Point bs, const Topology& topo) {
  double dx = v.position.x - bs.x;
  double dy = v.position.y - bs.y;
  double dh = topo.bs_height_m - topo.vehicle_height_m;
  return std::sqrt(dx * dx + dy * dy + dh * dh);
}

ChannelRealization realize_channel(std::span<const VehicleState> vehicles,
                                   const Topology& topo,
                                   const ScenarioConfig& cfg, Rng& rng) {
  const int n_veh = static_cast<int>(vehicles.size());
  ChannelRealization ch(n_veh, topo.num_bs(), topo.max_rb_count(), noise_power_w(cfg));
  for (int n = 0; n < n_veh; ++n) {
    for (int b = 0; b < topo.num_bs(); ++b) {
      double d_m = std::max(distance_3d_m(vehicles[n], topo.bs_position(b), topo),
                            cfg.min_distance_m);
      ch.path_loss_db(n, b) = path_loss_db(d_m / 1000.0);
      for (int r = 0; r < ch.max_rb(); ++r) {
        // Unit-mean exponential power gain; 1 - u keeps the argument in (0, 1].
        ch.fading(n, b, r) = cfg.rayleigh_fading ? -std::log(1.0 - uniform01(rng)) : 1.0;
      }
    }
  }
  return ch;
}

double interference(std::span<const LinkChoice> alloc,
                    const ChannelRealization& ch, const Topology& topo, int n,
                    LinkId at) {
  const Tier victim = topo.tier(at.bs);
  double total = 0.0;
  for (int m = 0; m < static_cast<int>(alloc.size()); ++m) {
    const LinkChoice& other = alloc[m];
    if (m == n || !other.active()) continue;
    if (other.link.rb != at.rb || topo.tier(other.link.bs) == victim) continue;
    total += other.power_w * ch.gain(m, at.bs, at.rb);
  }
  return total;
}

double sinr(std::span<const LinkChoice> alloc, const ChannelRealization& ch,
            const Topology& topo, int n, LinkId at) {
  const LinkChoice& own = alloc[n];
  if (!own.active() || !(own.link == at)) return 0.0;
  double signal = own.power_w * ch.gain(n, at.bs, at.rb);
  return signal / (interference(alloc, ch, topo, n, at) + ch.noise_power_w());
}

}  // namespace semalloc::netsim
