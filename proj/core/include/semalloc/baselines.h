#pragma once

// Non-learning comparison policies and an exhaustive single-step oracle.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "semalloc/mdp.h"
#include "semalloc/rng.h"

namespace semalloc::baselines {

enum class PolicyKind { kRandomAll, kFixedDc, kRandomDc, kBitBased, kOracleGreedy };

// Throws std::invalid_argument for an unknown tag.
PolicyKind parse_policy_kind(std::string_view tag);
std::string_view to_string(PolicyKind kind);

inline constexpr double kFixedDcFraction = 0.5;

// Round-robin over macro links by agent index at full power, with the
// smallest u meeting the similarity threshold at the observed SINR.
mdp::Action heuristic_action(const mdp::Observation& obs, const mdp::Environment& env);

// fixed_dc / random_dc keep the allocation of `base` (a learned policy's
// action) when given, else the heuristic, and only replace o1.
// oracle_greedy is a joint policy and is rejected here.
mdp::Action act_baseline(PolicyKind kind, const mdp::Observation& obs,
                         const mdp::Environment& env, Rng& rng,
                         const mdp::Action* base = nullptr);

struct OracleGrid {
  std::vector<double> power_w;
  std::vector<double> o1;
  std::vector<int> u;

  // Five log-spaced powers up to P_max (P_max * 10^{-2, -1.5, -1, -0.5, 0}),
  // o1 in {0.1, 0.3, 0.5, 0.7, 0.9}, u in 1..u_max.
  static OracleGrid defaults(const mdp::Environment& env);
};

struct OracleResult {
  std::vector<mdp::Action> actions;
  double mean_hsse = 0.0;
  bool feasible = false;
  std::uint64_t evaluated = 0;
};

// Number of joint grid points: (links * powers * o1 * u) ^ N.
double joint_grid_size(const mdp::Environment& env, const OracleGrid& grid);

// Exhaustive maximizer of single-step mean HSSE on the environment's current
// channel, subject to RB exclusivity, xi >= xi_th, u range and both
// throughput floors. Throws std::length_error (with the size estimate) when
// the joint grid exceeds max_points.
OracleResult oracle_greedy(const mdp::Environment& snapshot, const OracleGrid& grid,
                           double max_points = 1e7);

// Mean HSSE over links, counting collided or below-threshold links as 0.
double mean_effective_hsse(const mdp::StepOutcome& outcome);

}  // namespace semalloc::baselines
