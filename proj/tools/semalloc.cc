// Command-line front end: train | eval | sweep-mu | sweep-dc | oracle | summarize.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "semalloc/config.h"
#include "semalloc/error.h"
#include "semalloc/experiments.h"

namespace {

namespace fs = std::filesystem;
using semalloc::config::ExperimentConfig;
namespace ex = semalloc::experiments;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string policy = "sarad";
  std::optional<int> episodes;
  std::optional<std::string> checkpoint;
  std::vector<std::string> inputs;
};

ExperimentConfig resolve(const Flags& f, bool episodes_are_training) {
  ExperimentConfig cfg;
  if (f.config) {
    cfg = semalloc::config::load(*f.config);
  } else {
    nlohmann::json j = semalloc::config::to_json(cfg);
    semalloc::config::apply_env_overrides(j);
    cfg = semalloc::config::from_json(j);
    semalloc::config::validate(cfg);
  }
  if (f.seed) cfg.run.seed = *f.seed;
  if (f.out) cfg.run.output_dir = *f.out;
  if (f.episodes) {
    if (*f.episodes < 1) throw semalloc::ConfigError("--episodes must be >= 1");
    if (episodes_are_training) {
      cfg.learner.episodes = *f.episodes;
    } else {
      cfg.run.eval_episodes = *f.episodes;
      cfg.run.sweep_episodes = *f.episodes;
    }
  }
  return cfg;
}

void add_common(CLI::App* cmd, Flags& f, bool with_policy) {
  cmd->add_option("--config", f.config, "JSON config file (comments allowed)");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--episodes", f.episodes, "Training episodes (train) or evaluation episodes");
  cmd->add_option("--checkpoint", f.checkpoint, "Trained policy checkpoint");
  if (with_policy) {
    cmd->add_option("--policy", f.policy, "sarad|random_all|fixed_dc|random_dc|bit_based")
        ->check(CLI::IsMember({"sarad", "random_all", "fixed_dc", "random_dc", "bit_based"}));
  }
}

void report(const ex::Artifacts& art) {
  for (const auto& p : art.files) std::cout << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-aware V2X resource allocation simulator"};
  app.require_subcommand(1);
  Flags f;
  auto* train = app.add_subcommand("train", "Train the PPO policy; writes checkpoint and reward log");
  auto* eval = app.add_subcommand("eval", "Roll out a policy or baseline; writes per-step metrics");
  auto* sweep_mu = app.add_subcommand("sweep-mu", "HSSE versus bits per word, semantic and bit scoring");
  auto* sweep_dc = app.add_subcommand("sweep-dc", "Total throughput under flexible, fixed and random duty cycle");
  auto* oracle = app.add_subcommand("oracle", "Compare a policy with the exhaustive single-step optimum");
  auto* summarize = app.add_subcommand("summarize", "Per-policy means and 95% intervals of metrics files");
  add_common(train, f, false);
  add_common(eval, f, true);
  add_common(sweep_mu, f, false);
  add_common(sweep_dc, f, false);
  add_common(oracle, f, true);
  summarize->add_option("files", f.inputs, "Metrics CSV files")->required();
  summarize->add_option("--out", f.out, "Write the summary CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ex::Options opt;
    opt.policy = f.policy;
    opt.log = &std::cerr;
    if (f.checkpoint) opt.checkpoint = fs::path(*f.checkpoint);
    if (*train) {
      report(ex::run_train(resolve(f, true), opt));
    } else if (*eval) {
      report(ex::run_eval(resolve(f, false), opt));
    } else if (*sweep_mu) {
      report(ex::run_sweep_mu(resolve(f, false), opt));
    } else if (*sweep_dc) {
      report(ex::run_sweep_dc(resolve(f, false), opt));
    } else if (*oracle) {
      if (!f.checkpoint && oracle->count("--policy") == 0) opt.policy = "fixed_dc";
      report(ex::run_oracle(resolve(f, false), opt));
    } else if (*summarize) {
      std::vector<fs::path> files(f.inputs.begin(), f.inputs.end());
      auto rows = ex::summarize(files);
      if (f.out) {
        ex::write_summary(*f.out, rows);
        std::cout << *f.out << '\n';
      } else {
        std::cout << "policy,metric,mean,ci95_low,ci95_high,n\n";
        for (const auto& r : rows) {
          std::cout << r.policy << ',' << r.metric << ',' << r.mean << ',' << r.ci_low << ','
                    << r.ci_high << ',' << r.n << '\n';
        }
      }
    }
  } catch (const semalloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const semalloc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const semalloc::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
