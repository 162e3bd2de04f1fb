#pragma once

// Multi-agent decision process over the radio environment: each vehicle is an
// agent choosing (BS/RB, power, duty-cycle fraction, symbols per word); all
// agents share one population-level reward.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semalloc/coexist.h"
#include "semalloc/netsim.h"
#include "semalloc/rng.h"
#include "semalloc/semantics.h"

namespace semalloc::mdp {

struct SemanticsConfig {
  std::string xi_mode = "parametric";  // "parametric" | "table"
  semantics::ParametricXi xi_coeffs;
  std::string xi_table_path;
  double i_over_l = 1.0;
  int u_max = 20;
  double xi_threshold = 0.9;
  // Operating point used to derive default throughput floors.
  double reference_sinr_db = 20.0;
};

struct CoexistConfig {
  double o_total_s = 1.0;
  double o1_min = 0.05;
  double o1_max = 0.95;
  double wifi_rate_bits_s = 143e6;
  double wifi_bandwidth_hz = 20e6;
};

struct MdpConfig {
  double p_max_dbm = 23.0;
  double penalty_c = 1.0;
  int t_max = 100;
  double floor_fraction = 0.1;
  // Explicit floors in suts; <= 0 means derive from floor_fraction.
  double st_floor_vehicle = 0.0;  // per vehicle
  double st_floor_wifi = 0.0;     // aggregate over WiFi groups
};

struct EnvironmentConfig {
  netsim::ScenarioConfig scenario;
  SemanticsConfig semantics;
  CoexistConfig coexist;
  MdpConfig mdp;
};

semantics::XiModel make_xi_model(const SemanticsConfig& cfg);

enum class Scoring { kSemantic, kBit };

struct Action {
  int attach = 0;  // flattened (BS, RB) index
  double power_w = 0.0;
  double o1_fraction = 0.5;
  int u = 1;
};

struct ActionSpace {
  int num_links = 0;
  int u_max = 0;
  double p_max_w = 0.0;
  double o1_min = 0.0;
  double o1_max = 1.0;

  bool contains(const Action& a) const;
};

// Agent state: channel gain, SINR and HSSE at the agent's current attachment
// under the current channel, the WiFi HSSE and interference seen in the
// previous step, which link that attachment is, and the agent's index.
// HSSE reads 0 when the previous transmission collided.
struct Observation {
  int agent = 0;
  int num_agents = 0;
  int link = -1;  // previous attachment; -1 before the first step
  int num_links = 0;
  double gain = 0.0;
  double sinr = 0.0;
  double hsse_vehicle = 0.0;
  double hsse_wifi_prev = 0.0;
  double interference_prev = 0.0;
};

struct ObservationScales {
  int num_links = 0;
  double noise_power_w = 1.0;
  double i_over_l = 1.0;
  double wifi_hsse_max = 1.0;
};

inline constexpr int kLinkFeatures = 5;

// Affine-in-dB / ratio normalization to O(1), then a one-hot of the previous
// link, then a one-hot agent id.
std::vector<double> features(const Observation& obs, const ObservationScales& s);
// Inverse of features() for values above the dB floors.
Observation from_features(std::span<const double> f, const ObservationScales& s);

struct LinkOutcome {
  int attach = 0;
  netsim::LinkId link;
  netsim::Tier tier = netsim::Tier::kMacro;
  double power_w = 0.0;
  double o1_fraction = 0.0;  // after clamping to the DC bounds
  double o1_s = 0.0;
  double o2_s = 0.0;
  double vehicle_airtime_s = 0.0;
  double wifi_airtime_s = 0.0;
  int u = 1;
  double interference_w = 0.0;
  double sinr = 0.0;
  double sinr_db = 0.0;
  double xi = 0.0;
  double hsse = 0.0;
  bool collided = false;
  bool xi_ok = true;
  double st_vehicle = 0.0;
  double st_wifi = 0.0;
  double hsse_wifi = 0.0;
};

struct RewardBreakdown {
  double st_sum_vehicles = 0.0;
  double st_sum_wifi = 0.0;
  int wifi_gate = 0;
  int collision_penalty_count = 0;
  double reward = 0.0;
};

struct ConstraintFlags {
  bool vehicle_floor = true;   // sum ST_n >= N * floor
  bool wifi_floor = true;      // sum ST_w >= floor
  bool rb_exclusive = true;    // no (BS, RB) shared by two agents
  bool xi_threshold = true;    // every link has xi >= xi_th
  bool u_in_range = true;      // 1 <= u <= u_max
};

struct StepOutcome {
  std::vector<LinkOutcome> links;
  RewardBreakdown breakdown;
  ConstraintFlags constraints;
};

struct StepResult {
  StepOutcome outcome;
  std::vector<Observation> observations;
  int t = 0;  // steps completed in this episode
  bool done = false;
};

struct ConstraintReport {
  int steps = 0;
  double vehicle_floor_rate = 1.0;
  double wifi_floor_rate = 1.0;
  double rb_exclusive_rate = 1.0;
  double xi_threshold_rate = 1.0;
  double u_in_range_rate = 1.0;
  double collision_rate = 0.0;  // fraction of agent-steps in a collision
};

ConstraintReport constraint_report(std::span<const StepOutcome> trace);

class Environment {
 public:
  explicit Environment(EnvironmentConfig cfg);

  std::vector<Observation> reset(std::uint64_t seed);
  // Applies one action per agent, scores the step on the current channel,
  // then moves vehicles and redraws the channel. Throws
  // std::invalid_argument for a malformed action vector.
  StepResult step(std::span<const Action> actions);
  // Scores a joint action on the current channel without advancing.
  StepOutcome evaluate(std::span<const Action> actions) const;
  Observation build_observation(int n) const;
  std::vector<Observation> observations() const;

  void set_scoring(Scoring scoring, double bits_per_word = 8.0);
  Scoring scoring() const { return scoring_; }
  double bits_per_word() const { return bits_per_word_; }

  const EnvironmentConfig& config() const { return cfg_; }
  const netsim::Topology& topology() const { return topo_; }
  const semantics::XiModel& xi_model() const { return xi_; }
  const netsim::ChannelRealization& channel() const { return channel_; }
  const std::vector<netsim::VehicleState>& vehicles() const { return vehicles_; }
  ActionSpace action_space() const;
  ObservationScales observation_scales() const;
  int num_agents() const { return cfg_.scenario.num_vehicles; }
  int observation_dim() const { return kLinkFeatures + topo_.num_links() + num_agents(); }
  int t() const { return t_; }
  bool done() const { return t_ >= cfg_.mdp.t_max; }
  double p_max_w() const;
  double floor_vehicle() const { return floor_vehicle_; }
  double floor_wifi() const { return floor_wifi_; }

  netsim::Allocation allocation(std::span<const Action> actions) const;

 private:
  void validate(std::span<const Action> actions) const;

  EnvironmentConfig cfg_;
  netsim::Topology topo_;
  semantics::XiModel xi_;
  std::vector<coexist::WifiGroup> wifi_groups_;
  double floor_vehicle_ = 0.0;
  double floor_wifi_ = 0.0;
  Scoring scoring_ = Scoring::kSemantic;
  double bits_per_word_ = 8.0;

  Rng mobility_rng_;
  Rng fading_rng_;
  std::vector<netsim::VehicleState> vehicles_;
  netsim::ChannelRealization channel_;
  int t_ = 0;
  std::vector<Action> last_actions_;
  StepOutcome last_outcome_;
};

}  // namespace semalloc::mdp
