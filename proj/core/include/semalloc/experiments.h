#pragma once

// Command implementations behind the CLI. Each writes its artifacts into
// cfg.run.output_dir and returns their paths.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semalloc/baselines.h"
#include "semalloc/config.h"
#include "semalloc/metrics.h"
#include "semalloc/ppo.h"

namespace semalloc::experiments {

using JointPolicy = std::function<std::vector<mdp::Action>(
    const mdp::Environment&, const std::vector<mdp::Observation>&)>;

// "sarad" needs an agent and samples from it with the seed's "policy" stream. fixed_dc / random_dc take
// their allocation from the agent when one is given, else from the heuristic.
JointPolicy make_policy(const std::string& tag, const learner::PpoAgent* agent,
                        std::uint64_t seed);

struct EpisodeStats {
  double reward = 0.0;          // sum over steps
  double mean_hsse = 0.0;       // per link-step
  double mean_effective_hsse = 0.0;
  double st_vehicles = 0.0;     // per-step mean
  double st_wifi = 0.0;
  double collision_rate = 0.0;  // colliding agent-steps / agent-steps
};

// Runs `episodes` episodes; episode e resets with derive_seed(seed, stream, e).
std::vector<EpisodeStats> run_episodes(mdp::Environment& env, const JointPolicy& policy,
                                       int episodes, std::uint64_t seed,
                                       const std::string& stream,
                                       metrics::MetricsWriter* writer = nullptr,
                                       const std::string& policy_tag = "");

struct Options {
  std::optional<std::filesystem::path> checkpoint;
  std::string policy = "sarad";
  std::ostream* log = nullptr;
};

struct Artifacts {
  std::vector<std::filesystem::path> files;
};

// Loads a checkpoint and checks it against the environment. Throws ConfigError
// on a dimension mismatch.
learner::PpoAgent load_agent(const std::filesystem::path& path, const config::ExperimentConfig& cfg,
                             const mdp::Environment& env);

Artifacts run_train(const config::ExperimentConfig& cfg, const Options& opt);
Artifacts run_eval(const config::ExperimentConfig& cfg, const Options& opt);
Artifacts run_sweep_mu(const config::ExperimentConfig& cfg, const Options& opt);
Artifacts run_sweep_dc(const config::ExperimentConfig& cfg, const Options& opt);
Artifacts run_oracle(const config::ExperimentConfig& cfg, const Options& opt);

struct SummaryRow {
  std::string policy;
  std::string metric;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

// Per-policy means with normal-approximation 95% intervals over rows, plus a
// crossover_mu row per semantic policy when bit-scored rows span several mu.
std::vector<SummaryRow> summarize(std::span<const std::filesystem::path> files);
void write_summary(const std::filesystem::path& path, std::span<const SummaryRow> rows);

// Bits-per-word at which K / mu meets the flat level.
double crossover_mu(double bit_constant, double semantic_level);

}  // namespace semalloc::experiments
