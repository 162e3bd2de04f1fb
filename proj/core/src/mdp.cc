#include "semalloc/mdp.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "semalloc/error.h"

namespace semalloc::mdp {
namespace {

constexpr double kGainFloor = 1e-30;
constexpr double kSinrFloor = 1e-6;
constexpr double kGainOffsetDb = 110.0;
constexpr double kSinrOffsetDb = 10.0;
constexpr double kDbScale = 20.0;

}  // namespace

semantics::XiModel make_xi_model(const SemanticsConfig& cfg) {
  if (cfg.xi_mode == "parametric") return semantics::XiModel::parametric(cfg.xi_coeffs);
  if (cfg.xi_mode == "table") return semantics::XiModel::load_table(cfg.xi_table_path);
  throw ConfigError("unknown xi_mode '" + cfg.xi_mode + "'");
}

bool ActionSpace::contains(const Action& a) const {
  return a.attach >= 0 && a.attach < num_links && a.u >= 1 && a.u <= u_max &&
         a.power_w > 0.0 && a.power_w <= p_max_w && a.o1_fraction >= 0.0 &&
         a.o1_fraction <= 1.0;
}

std::vector<double> features(const Observation& obs, const ObservationScales& s) {
  if (obs.num_links != s.num_links) throw std::invalid_argument("observation link count mismatch");
  std::vector<double> f(static_cast<std::size_t>(kLinkFeatures + s.num_links + obs.num_agents),
                        0.0);
  f[0] = (netsim::linear_to_db(std::max(obs.gain, kGainFloor)) + kGainOffsetDb) / kDbScale;
  f[1] = (netsim::linear_to_db(std::max(obs.sinr, kSinrFloor)) - kSinrOffsetDb) / kDbScale;
  f[2] = obs.hsse_vehicle / s.i_over_l;
  f[3] = obs.hsse_wifi_prev / s.wifi_hsse_max;
  f[4] = netsim::linear_to_db(1.0 + obs.interference_prev / s.noise_power_w) / kDbScale;
  if (obs.link >= 0 && obs.link < s.num_links) f[kLinkFeatures + obs.link] = 1.0;
  if (obs.agent >= 0 && obs.agent < obs.num_agents) {
    f[kLinkFeatures + s.num_links + obs.agent] = 1.0;
  }
  return f;
}

Observation from_features(std::span<const double> f, const ObservationScales& s) {
  if (f.size() < static_cast<std::size_t>(kLinkFeatures + s.num_links)) {
    throw std::invalid_argument("feature vector too short");
  }
  Observation obs;
  obs.num_links = s.num_links;
  obs.num_agents = static_cast<int>(f.size()) - kLinkFeatures - s.num_links;
  for (int i = 0; i < s.num_links; ++i) {
    if (f[kLinkFeatures + i] == 1.0) obs.link = i;
  }
  for (int i = 0; i < obs.num_agents; ++i) {
    if (f[kLinkFeatures + s.num_links + i] == 1.0) obs.agent = i;
  }
  obs.gain = netsim::db_to_linear(f[0] * kDbScale - kGainOffsetDb);
  obs.sinr = netsim::db_to_linear(f[1] * kDbScale + kSinrOffsetDb);
  obs.hsse_vehicle = f[2] * s.i_over_l;
  obs.hsse_wifi_prev = f[3] * s.wifi_hsse_max;
  obs.interference_prev = (netsim::db_to_linear(f[4] * kDbScale) - 1.0) * s.noise_power_w;
  return obs;
}

ConstraintReport constraint_report(std::span<const StepOutcome> trace) {
  ConstraintReport rep;
  rep.steps = static_cast<int>(trace.size());
  if (trace.empty()) return rep;
  double b = 0, c = 0, d = 0, e = 0, f = 0, collided = 0, links = 0;
  for (const auto& s : trace) {
    b += s.constraints.vehicle_floor;
    c += s.constraints.wifi_floor;
    d += s.constraints.rb_exclusive;
    e += s.constraints.xi_threshold;
    f += s.constraints.u_in_range;
    for (const auto& l : s.links) {
      collided += l.collided;
      links += 1.0;
    }
  }
  const double n = static_cast<double>(trace.size());
  rep.vehicle_floor_rate = b / n;
  rep.wifi_floor_rate = c / n;
  rep.rb_exclusive_rate = d / n;
  rep.xi_threshold_rate = e / n;
  rep.u_in_range_rate = f / n;
  rep.collision_rate = links > 0 ? collided / links : 0.0;
  return rep;
}

Environment::Environment(EnvironmentConfig cfg)
    : cfg_(std::move(cfg)),
      topo_(netsim::build_topology(cfg_.scenario)),
      xi_(make_xi_model(cfg_.semantics)) {
  if (cfg_.scenario.num_vehicles < 1) throw ConfigError("num_vehicles must be >= 1");
  if (cfg_.semantics.u_max < 1) throw ConfigError("u_max must be >= 1");
  if (!(cfg_.semantics.i_over_l > 0.0)) throw ConfigError("i_over_l must be positive");
  if (!(cfg_.coexist.o_total_s > 0.0)) throw ConfigError("o_total_s must be positive");
  if (!(cfg_.coexist.o1_min >= 0.0 && cfg_.coexist.o1_min <= cfg_.coexist.o1_max &&
        cfg_.coexist.o1_max <= 1.0)) {
    throw ConfigError("duty-cycle bounds must satisfy 0 <= o1_min <= o1_max <= 1");
  }
  if (!(cfg_.coexist.wifi_rate_bits_s > 0.0) || !(cfg_.coexist.wifi_bandwidth_hz > 0.0)) {
    throw ConfigError("WiFi rate and bandwidth must be positive");
  }
  if (cfg_.mdp.t_max < 1) throw ConfigError("t_max must be >= 1");
  if (!(cfg_.mdp.penalty_c >= 0.0)) throw ConfigError("penalty_c must be non-negative");

  const int n = num_agents();
  const double slot = cfg_.coexist.o_total_s;
  if (cfg_.mdp.st_floor_vehicle > 0.0) {
    floor_vehicle_ = cfg_.mdp.st_floor_vehicle;
  } else {
    // Best single-link full-slot semantic throughput at the reference SINR,
    // restricted to u meeting the similarity threshold when any does.
    double best = 0.0, best_any = 0.0;
    for (int u = 1; u <= cfg_.semantics.u_max; ++u) {
      double xi = xi_(u, cfg_.semantics.reference_sinr_db);
      double st = semantics::hsr(topo_.rb_bandwidth_hz, {cfg_.semantics.i_over_l, u}, xi) * slot;
      best_any = std::max(best_any, st);
      if (xi >= cfg_.semantics.xi_threshold) best = std::max(best, st);
    }
    floor_vehicle_ = cfg_.mdp.floor_fraction * (best > 0.0 ? best : best_any);
  }
  floor_wifi_ = cfg_.mdp.st_floor_wifi > 0.0
                    ? cfg_.mdp.st_floor_wifi
                    : cfg_.mdp.floor_fraction * cfg_.coexist.wifi_rate_bits_s * slot;

  for (int i = 0; i < n; ++i) {
    wifi_groups_.push_back({cfg_.coexist.wifi_rate_bits_s, i, floor_wifi_ / n});
  }
  reset(0);
}

double Environment::p_max_w() const { return netsim::dbm_to_watts(cfg_.mdp.p_max_dbm); }

ActionSpace Environment::action_space() const {
  return {topo_.num_links(), cfg_.semantics.u_max, p_max_w(), cfg_.coexist.o1_min,
          cfg_.coexist.o1_max};
}

ObservationScales Environment::observation_scales() const {
  return {topo_.num_links(), channel_.noise_power_w(), cfg_.semantics.i_over_l,
          cfg_.coexist.wifi_rate_bits_s / cfg_.coexist.wifi_bandwidth_hz};
}

void Environment::set_scoring(Scoring scoring, double bits_per_word) {
  if (!(bits_per_word >= 1.0)) throw std::invalid_argument("bits per word must be >= 1");
  scoring_ = scoring;
  bits_per_word_ = bits_per_word;
}

std::vector<Observation> Environment::reset(std::uint64_t seed) {
  mobility_rng_ = make_stream(seed, "mobility");
  fading_rng_ = make_stream(seed, "fading");
  vehicles_ = netsim::place_vehicles(cfg_.scenario, topo_, mobility_rng_);
  channel_ = netsim::realize_channel(vehicles_, topo_, cfg_.scenario, fading_rng_);
  t_ = 0;
  last_actions_.clear();
  last_outcome_ = StepOutcome{};
  return observations();
}

netsim::Allocation Environment::allocation(std::span<const Action> actions) const {
  netsim::Allocation alloc(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    alloc[i].link = topo_.link(actions[i].attach);
    alloc[i].power_w = actions[i].power_w;
  }
  return alloc;
}

void Environment::validate(std::span<const Action> actions) const {
  if (static_cast<int>(actions.size()) != num_agents()) {
    throw std::invalid_argument("expected one action per agent");
  }
  const ActionSpace space = action_space();
  for (const auto& a : actions) {
    if (!space.contains(a) || !std::isfinite(a.power_w) || !std::isfinite(a.o1_fraction)) {
      throw std::invalid_argument("action out of range");
    }
  }
}

StepOutcome Environment::evaluate(std::span<const Action> actions) const {
  validate(actions);
  const int n_agents = num_agents();
  const auto& sem = cfg_.semantics;
  const auto& cx = cfg_.coexist;
  const double bandwidth = topo_.rb_bandwidth_hz;
  netsim::Allocation alloc = allocation(actions);

  std::map<int, int> occupancy;
  for (const auto& a : actions) ++occupancy[a.attach];

  StepOutcome out;
  out.links.resize(actions.size());
  for (int n = 0; n < n_agents; ++n) {
    const Action& a = actions[n];
    LinkOutcome& l = out.links[n];
    l.attach = a.attach;
    l.link = alloc[n].link;
    l.tier = topo_.tier(l.link.bs);
    l.power_w = a.power_w;
    l.u = a.u;
    l.collided = occupancy[a.attach] > 1;

    coexist::SlotSplit split =
        coexist::split_slot({cx.o_total_s, a.o1_fraction, cx.o1_min, cx.o1_max});
    l.o1_fraction = std::clamp(a.o1_fraction, cx.o1_min, cx.o1_max);
    l.o1_s = split.o1_s;
    l.o2_s = split.o2_s;
    const bool licensed = l.tier == netsim::Tier::kMacro;
    l.vehicle_airtime_s = licensed ? cx.o_total_s : split.o1_s;
    l.wifi_airtime_s = licensed ? cx.o_total_s : split.o2_s;

    l.interference_w = netsim::interference(alloc, channel_, topo_, n, l.link);
    l.sinr = netsim::sinr(alloc, channel_, topo_, n, l.link);
    l.sinr_db = netsim::linear_to_db(l.sinr);

    double rate = 0.0;
    int wifi_divisor = a.u;
    if (scoring_ == Scoring::kSemantic) {
      l.xi = xi_(a.u, l.sinr_db);
      l.xi_ok = l.xi >= sem.xi_threshold;
      l.hsse = semantics::hsse({sem.i_over_l, a.u}, l.xi);
      rate = semantics::hsr(bandwidth, {sem.i_over_l, a.u}, l.xi);
    } else {
      // Bit pipe: no semantic similarity gate; mu bits carry one word.
      l.xi = 1.0;
      l.xi_ok = true;
      l.hsse = semantics::hsse_bit(l.sinr, bits_per_word_, sem.i_over_l);
      rate = bandwidth * l.hsse;
      wifi_divisor = static_cast<int>(std::lround(bits_per_word_));
    }
    const double frac = licensed ? 1.0 : l.o1_fraction;
    l.st_vehicle = (l.collided || !l.xi_ok)
                       ? 0.0
                       : semantics::st_vehicle(rate, frac, cx.o_total_s);
    l.st_wifi = coexist::st_wifi(wifi_groups_[n], wifi_divisor, l.wifi_airtime_s);
    l.hsse_wifi = l.st_wifi / (cx.wifi_bandwidth_hz * cx.o_total_s);

    out.breakdown.st_sum_vehicles += l.st_vehicle;
    out.breakdown.st_sum_wifi += l.st_wifi;
    out.breakdown.collision_penalty_count += l.collided ? 1 : 0;
    if (!l.xi_ok) out.constraints.xi_threshold = false;
    if (a.u < 1 || a.u > sem.u_max) out.constraints.u_in_range = false;
  }

  auto& br = out.breakdown;
  br.wifi_gate = br.st_sum_wifi >= floor_wifi_ ? 1 : 0;
  br.reward = br.st_sum_vehicles / (n_agents * floor_vehicle_) * br.wifi_gate -
              cfg_.mdp.penalty_c * br.collision_penalty_count;
  out.constraints.vehicle_floor = br.st_sum_vehicles >= n_agents * floor_vehicle_;
  out.constraints.wifi_floor = br.wifi_gate == 1;
  out.constraints.rb_exclusive = br.collision_penalty_count == 0;
  return out;
}

StepResult Environment::step(std::span<const Action> actions) {
  if (done()) throw std::logic_error("episode finished; call reset()");
  StepResult res;
  res.outcome = evaluate(actions);
  last_actions_.assign(actions.begin(), actions.end());
  last_outcome_ = res.outcome;
  ++t_;
  netsim::step_mobility(vehicles_, cfg_.scenario.step_s, topo_);
  channel_ = netsim::realize_channel(vehicles_, topo_, cfg_.scenario, fading_rng_);
  res.observations = observations();
  res.t = t_;
  res.done = done();
  return res;
}

Observation Environment::build_observation(int n) const {
  Observation obs;
  obs.agent = n;
  obs.num_agents = num_agents();
  obs.num_links = topo_.num_links();
  if (last_actions_.empty()) return obs;

  const Action& a = last_actions_[n];
  netsim::Allocation alloc = allocation(last_actions_);
  const netsim::LinkId link = alloc[n].link;
  obs.link = a.attach;
  obs.gain = channel_.gain(n, link.bs, link.rb);
  obs.sinr = netsim::sinr(alloc, channel_, topo_, n, link);
  if (last_outcome_.links[n].collided) {
    obs.hsse_vehicle = 0.0;
  } else if (scoring_ == Scoring::kSemantic) {
    double xi = xi_(a.u, netsim::linear_to_db(obs.sinr));
    obs.hsse_vehicle = semantics::hsse({cfg_.semantics.i_over_l, a.u}, xi);
  } else {
    obs.hsse_vehicle = semantics::hsse_bit(obs.sinr, bits_per_word_, cfg_.semantics.i_over_l);
  }
  obs.hsse_wifi_prev = last_outcome_.links[n].hsse_wifi;
  obs.interference_prev = last_outcome_.links[n].interference_w;
  return obs;
}

std::vector<Observation> Environment::observations() const {
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(num_agents()));
  for (int n = 0; n < num_agents(); ++n) out.push_back(build_observation(n));
  return out;
}

}  // namespace semalloc::mdp
