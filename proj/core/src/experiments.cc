#include "semalloc/experiments.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include "semalloc/error.h"

namespace semalloc::experiments {
namespace fs = std::filesystem;
using metrics::format_double;

namespace {

fs::path prepare_output(const config::ExperimentConfig& cfg) {
  fs::path dir(cfg.run.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

void note(const Options& opt, const std::string& msg) {
  if (opt.log) *opt.log << msg << '\n';
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean_of(const std::vector<EpisodeStats>& eps, double EpisodeStats::*field) {
  if (eps.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : eps) s += e.*field;
  return s / static_cast<double>(eps.size());
}

void check_finite(const mdp::StepOutcome& o) {
  if (!std::isfinite(o.breakdown.reward)) throw NumericError("non-finite reward during rollout");
}

// Trains in-process when no checkpoint is given; the checkpoint lands in the
// output directory so later runs can reuse it.
learner::PpoAgent obtain_agent(const config::ExperimentConfig& cfg, const Options& opt,
                               const fs::path& dir, Artifacts& art) {
  mdp::Environment env(cfg.env);
  if (opt.checkpoint) return load_agent(*opt.checkpoint, cfg, env);
  note(opt, "no checkpoint given; training " + std::to_string(cfg.learner.episodes) +
                " episodes");
  auto result = learner::train(env, cfg.learner, cfg.run.seed);
  fs::path ck = dir / "checkpoint.txt";
  result.agent.save(ck);
  art.files.push_back(ck);
  return std::move(result.agent);
}

}  // namespace

JointPolicy make_policy(const std::string& tag, const learner::PpoAgent* agent,
                        std::uint64_t seed) {
  if (tag == "sarad") {
    if (!agent) throw ConfigError("policy 'sarad' needs a trained checkpoint");
    // Sampled like during training; the argmax of a near-uniform link head
    // sends several agents to the same RB.
    auto rng = std::make_shared<Rng>(make_stream(seed, "policy"));
    return [agent, rng](const mdp::Environment& env, const std::vector<mdp::Observation>& obs) {
      return agent->act_env(obs, env.observation_scales(), *rng, false);
    };
  }
  baselines::PolicyKind kind;
  try {
    kind = baselines::parse_policy_kind(tag);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (kind == baselines::PolicyKind::kOracleGreedy) {
    throw ConfigError("oracle_greedy is only available through the oracle command");
  }
  auto rng = std::make_shared<Rng>(make_stream(seed, "baseline"));
  auto policy_rng = std::make_shared<Rng>(make_stream(seed, "policy"));
  return [kind, agent, rng, policy_rng](const mdp::Environment& env,
                            const std::vector<mdp::Observation>& obs) {
    std::vector<mdp::Action> base;
    if (agent && kind != baselines::PolicyKind::kRandomAll &&
        kind != baselines::PolicyKind::kBitBased) {
      base = agent->act_env(obs, env.observation_scales(), *policy_rng, false);
    }
    std::vector<mdp::Action> out;
    for (std::size_t n = 0; n < obs.size(); ++n) {
      out.push_back(baselines::act_baseline(kind, obs[n], env, *rng,
                                            base.empty() ? nullptr : &base[n]));
    }
    return out;
  };
}

std::vector<EpisodeStats> run_episodes(mdp::Environment& env, const JointPolicy& policy,
                                       int episodes, std::uint64_t seed,
                                       const std::string& stream,
                                       metrics::MetricsWriter* writer,
                                       const std::string& policy_tag) {
  std::vector<EpisodeStats> out;
  const double n_agents = env.num_agents();
  for (int e = 0; e < episodes; ++e) {
    auto obs = env.reset(derive_seed(seed, stream, static_cast<std::uint64_t>(e)));
    EpisodeStats s;
    int steps = 0;
    while (!env.done()) {
      auto actions = policy(env, obs);
      auto res = env.step(actions);
      check_finite(res.outcome);
      if (writer) writer->write({policy_tag, e, steps}, env, res.outcome);
      const auto& b = res.outcome.breakdown;
      s.reward += b.reward;
      s.st_vehicles += b.st_sum_vehicles;
      s.st_wifi += b.st_sum_wifi;
      s.collision_rate += b.collision_penalty_count / n_agents;
      double h = 0.0;
      for (const auto& l : res.outcome.links) h += l.hsse;
      s.mean_hsse += h / n_agents;
      s.mean_effective_hsse += baselines::mean_effective_hsse(res.outcome);
      obs = std::move(res.observations);
      ++steps;
    }
    const double k = steps > 0 ? steps : 1;
    s.st_vehicles /= k;
    s.st_wifi /= k;
    s.collision_rate /= k;
    s.mean_hsse /= k;
    s.mean_effective_hsse /= k;
    out.push_back(s);
  }
  return out;
}

learner::PpoAgent load_agent(const fs::path& path, const config::ExperimentConfig& cfg,
                             const mdp::Environment& env) {
  learner::PpoAgent agent = learner::PpoAgent::load(path, cfg.learner);
  if (agent.actor().input_dim() != env.observation_dim()) {
    throw ConfigError("checkpoint expects " + std::to_string(agent.actor().input_dim()) +
                      " observation features, scenario provides " +
                      std::to_string(env.observation_dim()));
  }
  const auto space = env.action_space();
  if (agent.space().num_links != space.num_links || agent.space().u_max != space.u_max) {
    throw ConfigError("checkpoint action space does not match the scenario");
  }
  return agent;
}

Artifacts run_train(const config::ExperimentConfig& cfg, const Options& opt) {
  fs::path dir = prepare_output(cfg);
  Artifacts art;
  mdp::Environment env(cfg.env);
  std::vector<std::vector<std::string>> rows;
  auto result = learner::train(env, cfg.learner, cfg.run.seed, [&](const learner::TrainLogRow& r) {
    rows.push_back({std::to_string(r.episode), format_double(r.episode_reward),
                    format_double(r.mean_step_reward), format_double(r.st_vehicles),
                    format_double(r.st_wifi), format_double(r.mean_hsse),
                    format_double(r.collision_rate), format_double(r.actor_loss),
                    format_double(r.critic_loss), format_double(r.entropy),
                    std::to_string(r.skipped_updates)});
    if (opt.log && (r.episode + 1) % 50 == 0) {
      *opt.log << "episode " << r.episode + 1 << " reward " << r.episode_reward << '\n';
    }
  });
  fs::path ck = dir / "checkpoint.txt";
  result.agent.save(ck);
  fs::path log = dir / "train_log.csv";
  metrics::write_csv(log,
                     {"episode", "episode_reward", "mean_step_reward", "st_vehicles", "st_wifi",
                      "mean_hsse", "collision_rate", "actor_loss", "critic_loss", "entropy",
                      "skipped_updates"},
                     rows);
  fs::path resolved = dir / "config.json";
  {
    std::ofstream out(resolved, std::ios::binary);
    if (!out) throw IoError("cannot write " + resolved.string());
    out << config::dump(cfg);
  }
  art.files = {ck, log, resolved};
  return art;
}

Artifacts run_eval(const config::ExperimentConfig& cfg, const Options& opt) {
  fs::path dir = prepare_output(cfg);
  Artifacts art;
  mdp::Environment env(cfg.env);
  std::optional<learner::PpoAgent> agent;
  if (opt.checkpoint) agent = load_agent(*opt.checkpoint, cfg, env);
  if (opt.policy == "sarad" && !agent) throw ConfigError("eval --policy sarad needs --checkpoint");
  if (opt.policy == "bit_based") env.set_scoring(mdp::Scoring::kBit, 8.0);
  JointPolicy policy = make_policy(opt.policy, agent ? &*agent : nullptr, cfg.run.seed);
  fs::path path = dir / ("metrics_" + opt.policy + ".csv");
  metrics::MetricsWriter writer(path, env.num_agents());
  auto eps = run_episodes(env, policy, cfg.run.eval_episodes, cfg.run.seed, "eval", &writer,
                          opt.policy);
  note(opt, opt.policy + ": mean episode reward " +
                format_double(mean_of(eps, &EpisodeStats::reward)));
  art.files.push_back(path);
  return art;
}

Artifacts run_sweep_mu(const config::ExperimentConfig& cfg, const Options& opt) {
  fs::path dir = prepare_output(cfg);
  Artifacts art;
  mdp::Environment env(cfg.env);
  std::optional<learner::PpoAgent> agent;
  if (opt.checkpoint) agent = load_agent(*opt.checkpoint, cfg, env);
  const std::string semantic_tag = agent ? "sarad" : "fixed_dc";

  fs::path metrics_path = dir / "metrics_sweep_mu.csv";
  metrics::MetricsWriter writer(metrics_path, env.num_agents());
  std::vector<std::vector<std::string>> rows;
  const std::uint64_t seed = cfg.run.seed;
  for (int mu = cfg.run.mu_min; mu <= cfg.run.mu_max; ++mu) {
    for (const std::string& tag : {semantic_tag, std::string("bit_based")}) {
      const bool bit = tag == "bit_based";
      env.set_scoring(bit ? mdp::Scoring::kBit : mdp::Scoring::kSemantic, mu);
      // Fresh policy per point so every mu sees the same action stream.
      JointPolicy policy = make_policy(tag, agent ? &*agent : nullptr, seed);
      auto eps = run_episodes(env, policy, cfg.run.sweep_episodes, seed, "sweep", &writer, tag);
      rows.push_back({tag, bit ? "bit" : "semantic", std::to_string(mu),
                      format_double(mean_of(eps, &EpisodeStats::mean_hsse)),
                      format_double(mean_of(eps, &EpisodeStats::mean_effective_hsse)),
                      format_double(mean_of(eps, &EpisodeStats::reward)),
                      format_double(mean_of(eps, &EpisodeStats::st_vehicles)),
                      format_double(mean_of(eps, &EpisodeStats::st_wifi))});
    }
  }
  env.set_scoring(mdp::Scoring::kSemantic);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a[0] < b[0]; });
  fs::path sweep_path = dir / "sweep_mu.csv";
  metrics::write_csv(sweep_path,
                     {"policy", "scoring", "mu", "mean_hsse", "mean_effective_hsse",
                      "episode_reward", "st_vehicles", "st_wifi"},
                     rows);

  // Crossover against the flat semantic level.
  double sem = 0.0, k = 0.0;
  int n_sem = 0, n_bit = 0;
  for (const auto& r : rows) {
    double h = std::stod(r[3]);
    if (r[1] == "semantic") {
      sem += h;
      ++n_sem;
    } else {
      k += h * std::stod(r[2]);
      ++n_bit;
    }
  }
  if (n_sem && n_bit) {
    double mu_star = crossover_mu(k / n_bit, sem / n_sem);
    note(opt, "crossover mu* = " + format_double(mu_star));
  }
  art.files = {sweep_path, metrics_path};
  return art;
}

Artifacts run_sweep_dc(const config::ExperimentConfig& cfg, const Options& opt) {
  fs::path dir = prepare_output(cfg);
  Artifacts art;
  learner::PpoAgent agent = obtain_agent(cfg, opt, dir, art);
  mdp::Environment env(cfg.env);
  fs::path metrics_path = dir / "metrics_sweep_dc.csv";
  metrics::MetricsWriter writer(metrics_path, env.num_agents());
  std::vector<std::vector<std::string>> rows;
  const std::vector<std::string> tags = {"sarad", "fixed_dc", "random_dc"};
  std::map<std::string, std::vector<double>> per_policy;
  for (int s = 0; s < cfg.run.eval_seeds; ++s) {
    const std::uint64_t seed = derive_seed(cfg.run.seed, "dc_seed", static_cast<std::uint64_t>(s));
    for (const auto& tag : tags) {
      JointPolicy policy = make_policy(tag, &agent, seed);
      auto eps = run_episodes(env, policy, cfg.run.eval_episodes, seed, "eval", &writer, tag);
      double st_v = mean_of(eps, &EpisodeStats::st_vehicles);
      double st_w = mean_of(eps, &EpisodeStats::st_wifi);
      per_policy[tag].push_back(st_v + st_w);
      rows.push_back({tag, std::to_string(s), format_double(st_v), format_double(st_w),
                      format_double(st_v + st_w)});
    }
  }
  for (const auto& tag : tags) {
    rows.push_back({tag, "median", "", "", format_double(median(per_policy[tag]))});
    note(opt, tag + ": median total ST " + format_double(median(per_policy[tag])));
  }
  fs::path path = dir / "sweep_dc.csv";
  metrics::write_csv(path, {"policy", "seed", "st_vehicles", "st_wifi", "st_total"}, rows);
  art.files.push_back(path);
  art.files.push_back(metrics_path);
  return art;
}

Artifacts run_oracle(const config::ExperimentConfig& cfg, const Options& opt) {
  fs::path dir = prepare_output(cfg);
  Artifacts art;
  mdp::Environment env(cfg.env);
  const auto grid = baselines::OracleGrid::defaults(env);
  const double size = baselines::joint_grid_size(env, grid);
  if (size > cfg.run.oracle_max_points) {
    throw ConfigError("oracle instance too large: " + format_double(size) +
                      " joint grid points (limit " + format_double(cfg.run.oracle_max_points) +
                      ")");
  }
  std::optional<learner::PpoAgent> agent;
  if (opt.checkpoint || opt.policy == "sarad") agent = obtain_agent(cfg, opt, dir, art);
  const std::string tag = agent ? "sarad" : opt.policy;

  std::vector<std::vector<std::string>> rows;
  std::vector<double> ratios;
  for (int s = 0; s < cfg.run.eval_seeds; ++s) {
    const std::uint64_t seed =
        derive_seed(cfg.run.seed, "oracle_seed", static_cast<std::uint64_t>(s));
    JointPolicy policy = make_policy(tag, agent ? &*agent : nullptr, seed);
    auto obs = env.reset(seed);
    for (int t = 0; t < cfg.run.oracle_warmup_steps && !env.done(); ++t) {
      obs = env.step(policy(env, obs)).observations;
    }
    auto actions = policy(env, obs);
    double policy_hsse = baselines::mean_effective_hsse(env.evaluate(actions));
    auto best = baselines::oracle_greedy(env, grid, cfg.run.oracle_max_points);
    double ratio = best.mean_hsse > 0.0 ? policy_hsse / best.mean_hsse : 0.0;
    ratios.push_back(ratio);
    rows.push_back({tag, std::to_string(s), format_double(policy_hsse),
                    format_double(best.mean_hsse), format_double(ratio),
                    best.feasible ? "1" : "0", std::to_string(best.evaluated)});
  }
  rows.push_back({tag, "median", "", "", format_double(median(ratios)), "", ""});
  note(opt, "median policy/oracle HSSE ratio " + format_double(median(ratios)));
  fs::path path = dir / "oracle.csv";
  metrics::write_csv(path,
                     {"policy", "seed", "policy_hsse", "oracle_hsse", "ratio", "oracle_feasible",
                      "grid_points"},
                     rows);
  art.files.push_back(path);
  return art;
}

double crossover_mu(double bit_constant, double semantic_level) {
  if (!(semantic_level > 0.0)) throw NumericError("semantic HSSE level must be positive");
  return bit_constant / semantic_level;
}

std::vector<SummaryRow> summarize(std::span<const fs::path> files) {
  if (files.empty()) throw ConfigError("summarize needs at least one metrics file");
  struct Acc {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    void add(double v) {
      sum += v;
      sq += v * v;
      ++n;
    }
  };
  static const std::vector<std::string> kMetrics = {"reward", "hsse", "st_vehicles", "st_wifi",
                                                    "collision_rate"};
  std::map<std::string, std::map<std::string, Acc>> acc;
  std::map<std::string, Acc> semantic_level;
  Acc bit_constant;
  std::set<double> bit_mus;
  std::vector<std::string> reference;
  for (const auto& f : files) {
    metrics::Table t = metrics::read_csv(f);
    const int agents = metrics::check_schema(t.columns);
    if (reference.empty()) {
      reference = t.columns;
    } else if (t.columns != reference) {
      for (std::size_t i = 0; i < std::max(t.columns.size(), reference.size()); ++i) {
        const std::string got = i < t.columns.size() ? t.columns[i] : "<none>";
        const std::string want = i < reference.size() ? reference[i] : "<none>";
        if (got != want) {
          throw SchemaError(f.string() + ": column '" + got + "' does not match '" + want +
                            "' of the first file");
        }
      }
    }
    if (t.rows.empty()) throw IoError(f.string() + " has no data rows");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string& policy = t.text(r, "policy");
      double hsse = 0.0;
      for (int a = 0; a < agents; ++a) hsse += t.number(r, "a" + std::to_string(a) + "_hsse");
      hsse /= agents;
      auto& m = acc[policy];
      m["reward"].add(t.number(r, "reward"));
      m["hsse"].add(hsse);
      m["st_vehicles"].add(t.number(r, "st_vehicles"));
      m["st_wifi"].add(t.number(r, "st_wifi"));
      m["collision_rate"].add(t.number(r, "collisions") / agents);
      if (t.text(r, "scoring") == "bit") {
        const double mu = t.number(r, "mu");
        bit_constant.add(hsse * mu);
        bit_mus.insert(mu);
      } else {
        semantic_level[policy].add(hsse);
      }
    }
  }
  std::vector<SummaryRow> out;
  for (const auto& [policy, metrics] : acc) {
    for (const auto& name : kMetrics) {
      const Acc& a = metrics.at(name);
      SummaryRow row{policy, name, a.sum / a.n, 0.0, 0.0, a.n};
      double var = a.n > 1 ? std::max(0.0, (a.sq - a.sum * a.sum / a.n) / (a.n - 1)) : 0.0;
      double half = 1.96 * std::sqrt(var / a.n);
      row.ci_low = row.mean - half;
      row.ci_high = row.mean + half;
      out.push_back(row);
    }
  }
  if (bit_mus.size() >= 2) {
    const double k = bit_constant.sum / bit_constant.n;
    for (const auto& [policy, lvl] : semantic_level) {
      const double level = lvl.sum / lvl.n;
      if (level <= 0.0) continue;
      const double mu_star = crossover_mu(k, level);
      out.push_back({policy, "crossover_mu", mu_star, mu_star, mu_star, lvl.n});
    }
  }
  return out;
}

void write_summary(const fs::path& path, std::span<const SummaryRow> rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.policy, r.metric, format_double(r.mean), format_double(r.ci_low),
                     format_double(r.ci_high), std::to_string(r.n)});
  }
  metrics::write_csv(path, {"policy", "metric", "mean", "ci95_low", "ci95_high", "n"}, cells);
}

}  // namespace semalloc::experiments
