#pragma once

// Proximal policy optimization with a shared actor-critic pair for all
// agents: on-policy trajectory buffer, discounted returns, max-abs
// normalized advantages, clipped surrogate, entropy bonus and Adam.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "semalloc/dense_net.h"
#include "semalloc/mdp.h"
#include "semalloc/policy.h"
#include "semalloc/rng.h"

namespace semalloc::learner {

struct LearnerConfig {
  std::vector<int> hidden = {128, 64};
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  int episodes = 1000;
  int update_interval = 5;  // env steps between update rounds
  int epochs = 5;           // minibatch updates per round
  int minibatch = 32;
  double gamma = 0.99;
  double clip_eps = 0.2;
  double entropy_coef = 0.01;
  double init_stddev = 0.1;
  // Critic output is value_scale * net(s) so returns of O(100) are reachable
  // at a small learning rate.
  double value_scale = 100.0;
  int max_nonfinite_updates = 10;
};

struct Transition {
  Eigen::VectorXd obs;
  RawAction action;
  double logp_old = 0.0;
  double reward = 0.0;
  Eigen::VectorXd next_obs;
  bool done = false;
  int agent = 0;
  // Derived at update time.
  double ret = 0.0;
  double value_old = 0.0;
  double adv = 0.0;
};

// Pooled experience of all agents for one update round; cleared after use.
class TrajectoryBuffer {
 public:
  explicit TrajectoryBuffer(std::size_t capacity = 0) : capacity_(capacity) {
    items_.reserve(capacity);
  }
  void add(Transition t) { items_.push_back(std::move(t)); }
  void clear() { items_.clear(); }
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  std::vector<Transition>& items() { return items_; }
  const std::vector<Transition>& items() const { return items_; }

  // Fills ret per agent trajectory: R_t = r_t + gamma R_{t+1}, seeded by
  // bootstrap(next_obs) at a non-terminal cut and 0 at a terminal one.
  void compute_returns(double gamma,
                       const std::function<double(const Eigen::VectorXd&)>& bootstrap);

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
};

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma,
                                       double bootstrap = 0.0);
// (R - V) / max|R - V|; all zeros when every residual is (near) zero.
std::vector<double> advantages(std::span<const double> returns, std::span<const double> values);
double actor_loss(std::span<const double> logp_new, std::span<const double> logp_old,
                  std::span<const double> adv, double clip_eps);
double critic_loss(std::span<const double> returns, std::span<const double> values);
double total_loss(double actor, double critic, double entropy, double entropy_coef);

struct LossTerms {
  double actor = 0.0;
  double critic = 0.0;
  double entropy = 0.0;  // batch mean
  double total = 0.0;
};

struct LossConfig {
  double clip_eps = 0.2;
  double entropy_coef = 0.01;
  double value_scale = 1.0;
};

struct Gradients {
  Eigen::VectorXd actor;
  Eigen::VectorXd critic;
};

// Batch-mean total loss and, if grads is non-null, its analytic gradient with
// respect to both parameter vectors.
LossTerms ppo_loss(const DenseNet& actor, const DenseNet& critic, const HeadLayout& layout,
                   const mdp::ActionSpace& space, std::span<const Transition* const> batch,
                   const LossConfig& cfg, Gradients* grads);

class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, double lr, double beta1, double beta2, double eps);

  // Returns false (and leaves params untouched) when grad is not finite.
  bool step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  long steps() const { return steps_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

 private:
  double lr_ = 1e-4, beta1_ = 0.9, beta2_ = 0.99, eps_ = 1e-8;
  long steps_ = 0;
  Eigen::VectorXd m_, v_;
};

class PpoAgent {
 public:
  PpoAgent() = default;
  PpoAgent(int obs_dim, const mdp::ActionSpace& space, const LearnerConfig& cfg,
           std::uint64_t seed);

  const HeadLayout& layout() const { return layout_; }
  const mdp::ActionSpace& space() const { return space_; }
  const LearnerConfig& config() const { return cfg_; }
  DenseNet& actor() { return actor_; }
  DenseNet& critic() { return critic_; }
  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic() const { return critic_; }
  const DenseNet& actor_old() const { return actor_old_; }
  const DenseNet& critic_old() const { return critic_old_; }

  // Acts with the frozen (old) parameters.
  std::vector<RawAction> act(const Eigen::MatrixXd& features, Rng& rng, bool deterministic,
                             std::vector<double>* logps = nullptr) const;
  std::vector<mdp::Action> act_env(std::span<const mdp::Observation> obs,
                                   const mdp::ObservationScales& scales, Rng& rng,
                                   bool deterministic) const;
  double value_old(const Eigen::VectorXd& features) const;

  struct UpdateStats {
    LossTerms mean;
    int applied = 0;
    int skipped = 0;
  };
  // Returns, advantages, K epochs of minibatch Adam steps, then syncs the
  // old parameters. Does not clear the buffer.
  UpdateStats update(TrajectoryBuffer& buffer, Rng& rng);
  void sync_old();

  void save(const std::filesystem::path& path) const;
  static PpoAgent load(const std::filesystem::path& path, const LearnerConfig& cfg);

 private:
  LearnerConfig cfg_;
  mdp::ActionSpace space_;
  HeadLayout layout_;
  DenseNet actor_, critic_, actor_old_, critic_old_;
  Adam actor_opt_, critic_opt_;
};

Eigen::MatrixXd feature_matrix(std::span<const mdp::Observation> obs,
                               const mdp::ObservationScales& scales);

struct TrainLogRow {
  int episode = 0;
  double episode_reward = 0.0;  // sum over steps of the shared reward
  double mean_step_reward = 0.0;
  double st_vehicles = 0.0;  // per-step means
  double st_wifi = 0.0;
  double mean_hsse = 0.0;
  double collision_rate = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  int skipped_updates = 0;
};

struct TrainResult {
  PpoAgent agent;
  std::vector<TrainLogRow> log;
};

// Runs cfg.episodes episodes of env.config().mdp.t_max steps. Throws
// NumericError after more than max_nonfinite_updates consecutive skipped
// updates.
TrainResult train(mdp::Environment& env, const LearnerConfig& cfg, std::uint64_t seed,
                  const std::function<void(const TrainLogRow&)>& on_episode = {});

}  // namespace semalloc::learner
