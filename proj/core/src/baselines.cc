#include "semalloc/baselines.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace semalloc::baselines {

PolicyKind parse_policy_kind(std::string_view tag) {
  if (tag == "random_all") return PolicyKind::kRandomAll;
  if (tag == "fixed_dc") return PolicyKind::kFixedDc;
  if (tag == "random_dc") return PolicyKind::kRandomDc;
  if (tag == "bit_based") return PolicyKind::kBitBased;
  if (tag == "oracle_greedy") return PolicyKind::kOracleGreedy;
  throw std::invalid_argument("unknown baseline policy '" + std::string(tag) + "'");
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRandomAll: return "random_all";
    case PolicyKind::kFixedDc: return "fixed_dc";
    case PolicyKind::kRandomDc: return "random_dc";
    case PolicyKind::kBitBased: return "bit_based";
    case PolicyKind::kOracleGreedy: return "oracle_greedy";
  }
  return "unknown";
}

mdp::Action heuristic_action(const mdp::Observation& obs, const mdp::Environment& env) {
  const auto& topo = env.topology();
  const auto& sem = env.config().semantics;
  mdp::Action a;
  int pool = topo.num_macro_links() > 0 ? topo.num_macro_links() : topo.num_links();
  a.attach = obs.agent % pool;
  a.power_w = env.p_max_w();
  a.o1_fraction = kFixedDcFraction;
  double sinr_db = obs.sinr > 0.0 ? netsim::linear_to_db(obs.sinr) : sem.reference_sinr_db;
  int u = semantics::smallest_feasible_u(env.xi_model(), sinr_db, sem.xi_threshold, sem.u_max);
  a.u = u > 0 ? u : sem.u_max;
  return a;
}

namespace {

double uniform_o1(const mdp::Environment& env, Rng& rng) {
  const auto& cx = env.config().coexist;
  return cx.o1_min + (cx.o1_max - cx.o1_min) * uniform01(rng);
}

}  // namespace

mdp::Action act_baseline(PolicyKind kind, const mdp::Observation& obs,
                         const mdp::Environment& env, Rng& rng, const mdp::Action* base) {
  const mdp::ActionSpace space = env.action_space();
  switch (kind) {
    case PolicyKind::kRandomAll: {
      mdp::Action a;
      a.attach = std::min(static_cast<int>(uniform01(rng) * space.num_links), space.num_links - 1);
      a.u = 1 + std::min(static_cast<int>(uniform01(rng) * space.u_max), space.u_max - 1);
      a.power_w = space.p_max_w * (1.0 - uniform01(rng));
      a.o1_fraction = uniform_o1(env, rng);
      return a;
    }
    case PolicyKind::kFixedDc: {
      mdp::Action a = base ? *base : heuristic_action(obs, env);
      a.o1_fraction = kFixedDcFraction;
      return a;
    }
    case PolicyKind::kRandomDc: {
      mdp::Action a = base ? *base : heuristic_action(obs, env);
      a.o1_fraction = uniform_o1(env, rng);
      return a;
    }
    case PolicyKind::kBitBased:
      return base ? *base : heuristic_action(obs, env);
    case PolicyKind::kOracleGreedy:
      break;
  }
  throw std::invalid_argument("oracle_greedy acts jointly; use oracle_greedy()");
}

OracleGrid OracleGrid::defaults(const mdp::Environment& env) {
  OracleGrid g;
  const double p_max = env.p_max_w();
  for (double e : {-2.0, -1.5, -1.0, -0.5, 0.0}) g.power_w.push_back(p_max * std::pow(10.0, e));
  g.o1 = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (int u = 1; u <= env.config().semantics.u_max; ++u) g.u.push_back(u);
  return g;
}

double joint_grid_size(const mdp::Environment& env, const OracleGrid& grid) {
  double per_agent = static_cast<double>(env.topology().num_links()) * grid.power_w.size() *
                     grid.o1.size() * grid.u.size();
  return std::pow(per_agent, env.num_agents());
}

namespace {

struct LinkOption {
  int u_pos = 0;
  int o1_pos = 0;
  double hsse = 0.0;
  double st_vehicle = 0.0;
  double st_wifi = 0.0;
};

}  // namespace

OracleResult oracle_greedy(const mdp::Environment& snapshot, const OracleGrid& grid,
                           double max_points) {
  const double size = joint_grid_size(snapshot, grid);
  if (size > max_points) {
    std::ostringstream msg;
    msg << "oracle instance too large: " << size << " joint grid points (limit " << max_points
        << ")";
    throw std::length_error(msg.str());
  }
  const int n_agents = snapshot.num_agents();
  const auto& topo = snapshot.topology();
  const auto& cfg = snapshot.config();
  const auto& sem = cfg.semantics;
  const auto& cx = cfg.coexist;
  const int n_links = topo.num_links();
  const int n_pow = static_cast<int>(grid.power_w.size());
  const double vehicle_floor = n_agents * snapshot.floor_vehicle();

  OracleResult best;
  best.mean_hsse = -1.0;
  std::vector<int> link_of(n_agents), pow_of(n_agents);
  std::vector<std::vector<LinkOption>> options(n_agents);
  std::vector<int> chosen(n_agents);

  // Enumerate option tuples for a fixed (link, power) assignment.
  std::function<void(int, double, double, double)> pick = [&](int n, double hsse_sum,
                                                              double st_v, double st_w) {
    if (n == n_agents) {
      if (st_v < vehicle_floor || st_w < snapshot.floor_wifi()) return;
      double mean = hsse_sum / n_agents;
      if (mean > best.mean_hsse) {
        best.mean_hsse = mean;
        best.feasible = true;
        best.actions.assign(n_agents, {});
        for (int i = 0; i < n_agents; ++i) {
          const LinkOption& o = options[i][chosen[i]];
          best.actions[i] = {link_of[i], grid.power_w[pow_of[i]], grid.o1[o.o1_pos],
                             grid.u[o.u_pos]};
        }
      }
      return;
    }
    for (int k = 0; k < static_cast<int>(options[n].size()); ++k) {
      const LinkOption& o = options[n][k];
      chosen[n] = k;
      pick(n + 1, hsse_sum + o.hsse, st_v + o.st_vehicle, st_w + o.st_wifi);
    }
  };

  const std::uint64_t per_assignment = static_cast<std::uint64_t>(grid.o1.size() * grid.u.size());
  const long assignments = static_cast<long>(std::pow(n_links * n_pow, n_agents));
  netsim::Allocation alloc(n_agents);
  for (long code = 0; code < assignments; ++code) {
    long c = code;
    for (int n = 0; n < n_agents; ++n) {
      int slot = static_cast<int>(c % (n_links * n_pow));
      c /= n_links * n_pow;
      link_of[n] = slot / n_pow;
      pow_of[n] = slot % n_pow;
    }
    best.evaluated += static_cast<std::uint64_t>(std::pow(per_assignment, n_agents));

    bool exclusive = true;
    for (int i = 0; i < n_agents && exclusive; ++i) {
      for (int j = i + 1; j < n_agents; ++j) {
        if (link_of[i] == link_of[j]) {
          exclusive = false;
          break;
        }
      }
    }
    if (!exclusive) continue;

    for (int n = 0; n < n_agents; ++n) {
      alloc[n].link = topo.link(link_of[n]);
      alloc[n].power_w = grid.power_w[pow_of[n]];
    }
    bool any_empty = false;
    for (int n = 0; n < n_agents; ++n) {
      options[n].clear();
      const netsim::LinkId link = alloc[n].link;
      const bool licensed = topo.tier(link.bs) == netsim::Tier::kMacro;
      const double s = netsim::sinr(alloc, snapshot.channel(), topo, n, link);
      const double s_db = netsim::linear_to_db(s);
      for (int ui = 0; ui < static_cast<int>(grid.u.size()); ++ui) {
        const int u = grid.u[ui];
        if (u < 1 || u > sem.u_max) continue;
        const double xi = snapshot.xi_model()(u, s_db);
        if (xi < sem.xi_threshold) continue;
        const double h = semantics::hsse({sem.i_over_l, u}, xi);
        const double rate = semantics::hsr(topo.rb_bandwidth_hz, {sem.i_over_l, u}, xi);
        for (int oi = 0; oi < static_cast<int>(grid.o1.size()); ++oi) {
          coexist::SlotSplit split =
              coexist::split_slot({cx.o_total_s, grid.o1[oi], cx.o1_min, cx.o1_max});
          const double frac = licensed ? 1.0 : std::clamp(grid.o1[oi], cx.o1_min, cx.o1_max);
          LinkOption o;
          o.u_pos = ui;
          o.o1_pos = oi;
          o.hsse = h;
          o.st_vehicle = semantics::st_vehicle(rate, frac, cx.o_total_s);
          o.st_wifi = coexist::st_wifi({cx.wifi_rate_bits_s, n, 0.0}, u,
                                       licensed ? cx.o_total_s : split.o2_s);
          options[n].push_back(o);
        }
      }
      if (options[n].empty()) any_empty = true;
    }
    if (any_empty) continue;
    pick(0, 0.0, 0.0, 0.0);
  }
  if (!best.feasible) best.mean_hsse = 0.0;
  return best;
}

double mean_effective_hsse(const mdp::StepOutcome& outcome) {
  if (outcome.links.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& l : outcome.links) sum += (l.collided || !l.xi_ok) ? 0.0 : l.hsse;
  return sum / static_cast<double>(outcome.links.size());
}

}  // namespace semalloc::baselines
