#include "semalloc/ppo.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "semalloc/error.h"

namespace semalloc::learner {
namespace {

constexpr double kAdvantageGuard = 1e-12;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void TrajectoryBuffer::compute_returns(
    double gamma, const std::function<double(const Eigen::VectorXd&)>& bootstrap) {
  std::map<int, std::vector<std::size_t>> by_agent;
  for (std::size_t i = 0; i < items_.size(); ++i) by_agent[items_[i].agent].push_back(i);
  for (auto& [agent, idx] : by_agent) {
    const Transition& last = items_[idx.back()];
    double running = last.done ? 0.0 : bootstrap(last.next_obs);
    for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
      Transition& t = items_[*it];
      if (t.done) running = 0.0;
      running = t.reward + gamma * running;
      t.ret = running;
    }
  }
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma,
                                       double bootstrap) {
  std::vector<double> out(rewards.size());
  double running = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    running = rewards[i] + gamma * running;
    out[i] = running;
  }
  return out;
}

std::vector<double> advantages(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size()) throw std::invalid_argument("advantages: size mismatch");
  if (returns.empty()) throw std::invalid_argument("advantages: empty batch");
  std::vector<double> out(returns.size());
  double max_abs = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = returns[i] - values[i];
    max_abs = std::max(max_abs, std::abs(out[i]));
  }
  if (max_abs < kAdvantageGuard) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& a : out) a /= max_abs;
  return out;
}

double actor_loss(std::span<const double> logp_new, std::span<const double> logp_old,
                  std::span<const double> adv, double clip_eps) {
  if (logp_new.size() != logp_old.size() || logp_new.size() != adv.size() || adv.empty()) {
    throw std::invalid_argument("actor_loss: misaligned batches");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    double r = std::exp(logp_new[i] - logp_old[i]);
    double clipped = std::clamp(r, 1.0 - clip_eps, 1.0 + clip_eps);
    sum += -std::min(r * adv[i], clipped * adv[i]);
  }
  return sum / static_cast<double>(adv.size());
}

double critic_loss(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size() || returns.empty()) {
    throw std::invalid_argument("critic_loss: misaligned batches");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    double d = returns[i] - values[i];
    sum += 0.5 * d * d;
  }
  return sum / static_cast<double>(returns.size());
}

double total_loss(double actor, double critic, double entropy, double entropy_coef) {
  if (entropy_coef < 0.0) throw std::invalid_argument("entropy coefficient must be >= 0");
  return actor + critic - entropy_coef * entropy;
}

LossTerms ppo_loss(const DenseNet& actor, const DenseNet& critic, const HeadLayout& layout,
                   const mdp::ActionSpace& space, std::span<const Transition* const> batch,
                   const LossConfig& cfg, Gradients* grads) {
  if (batch.empty()) throw std::invalid_argument("ppo_loss: empty batch");
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd obs(actor.input_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) obs.col(i) = batch[i]->obs;

  DenseNet::Tape actor_tape, critic_tape;
  Eigen::MatrixXd out = actor.forward(obs, grads ? &actor_tape : nullptr);
  Eigen::MatrixXd vout = critic.forward(obs, grads ? &critic_tape : nullptr);

  std::vector<double> lp_new(n), lp_old(n), adv(n), rets(n), vals(n);
  double entropy_sum = 0.0;
  Eigen::MatrixXd d_out;
  if (grads) d_out = Eigen::MatrixXd::Zero(out.rows(), n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    PolicyHeads h = make_heads(out.col(i), layout);
    lp_new[i] = log_prob(h, t.action, space);
    lp_old[i] = t.logp_old;
    adv[i] = t.adv;
    rets[i] = t.ret;
    vals[i] = cfg.value_scale * vout(0, i);
    double h_link = -(h.link_probs.array() * h.link_log_probs.array()).sum();
    double h_u = -(h.u_probs.array() * h.u_log_probs.array()).sum();
    entropy_sum += entropy(h);

    if (!grads) continue;
    // dL_actor/dlogp: the unclipped branch carries -A r, a binding clip carries 0.
    double r = std::exp(lp_new[i] - lp_old[i]);
    double clipped = std::clamp(r, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    double g_lp = (r * adv[i] <= clipped * adv[i]) ? -adv[i] * r : 0.0;
    const double c = cfg.entropy_coef;

    auto col = d_out.col(i);
    for (int j = 0; j < layout.num_links; ++j) {
      double p = h.link_probs[j];
      double dlp = (j == t.action.link ? 1.0 : 0.0) - p;
      double dh = -p * (h.link_log_probs[j] + h_link);
      col[j] = (g_lp * dlp - c * dh) * inv_n;
    }
    for (int j = 0; j < layout.u_max; ++j) {
      double p = h.u_probs[j];
      double dlp = (j == t.action.u_index ? 1.0 : 0.0) - p;
      double dh = -p * (h.u_log_probs[j] + h_u);
      col[layout.num_links + j] = (g_lp * dlp - c * dh) * inv_n;
    }
    for (int k = 0; k < kContinuousHeads; ++k) {
      double var = std::exp(2.0 * h.log_std[k]);
      double diff = t.action.z[k] - h.mean[k];
      double dlp_mean = diff / var;
      double dlp_logstd = diff * diff / var - 1.0;
      double th = std::tanh(h.raw_log_std[k]);
      double dlogstd_draw = kLogStdHalfWidth * (1.0 - th * th);
      col[layout.mean_index(k)] = g_lp * dlp_mean * inv_n;
      col[layout.raw_log_std_index(k)] = (g_lp * dlp_logstd - c * 1.0) * dlogstd_draw * inv_n;
    }
  }

  LossTerms terms;
  terms.actor = actor_loss(lp_new, lp_old, adv, cfg.clip_eps);
  terms.critic = critic_loss(rets, vals);
  terms.entropy = entropy_sum * inv_n;
  terms.total = total_loss(terms.actor, terms.critic, terms.entropy, cfg.entropy_coef);

  if (grads) {
    grads->actor = Eigen::VectorXd::Zero(actor.parameter_count());
    grads->critic = Eigen::VectorXd::Zero(critic.parameter_count());
    actor.backward(actor_tape, d_out, grads->actor);
    Eigen::MatrixXd d_v(1, n);
    for (Eigen::Index i = 0; i < n; ++i) d_v(0, i) = (vals[i] - rets[i]) * cfg.value_scale * inv_n;
    critic.backward(critic_tape, d_v, grads->critic);
  }
  return terms;
}

Adam::Adam(Eigen::Index size, double lr, double beta1, double beta2, double eps)
    : lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

bool Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (grad.size() != params.size() || params.size() != m_.size()) {
    throw std::invalid_argument("Adam: size mismatch");
  }
  if (!grad.allFinite()) return false;
  ++steps_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  return true;
}

PpoAgent::PpoAgent(int obs_dim, const mdp::ActionSpace& space, const LearnerConfig& cfg,
                   std::uint64_t seed)
    : cfg_(cfg), space_(space), layout_{space.num_links, space.u_max} {
  std::vector<int> aw{obs_dim}, cw{obs_dim};
  for (int h : cfg.hidden) {
    aw.push_back(h);
    cw.push_back(h);
  }
  aw.push_back(layout_.output_dim());
  cw.push_back(1);
  actor_ = DenseNet(aw);
  critic_ = DenseNet(cw);
  Rng rng = make_stream(seed, "init");
  actor_.init_normal(rng, cfg.init_stddev);
  critic_.init_normal(rng, cfg.init_stddev);
  actor_opt_ = Adam(actor_.parameter_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  critic_opt_ = Adam(critic_.parameter_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  sync_old();
}

void PpoAgent::sync_old() {
  actor_old_ = actor_;
  critic_old_ = critic_;
}

std::vector<RawAction> PpoAgent::act(const Eigen::MatrixXd& features, Rng& rng,
                                     bool deterministic, std::vector<double>* logps) const {
  Eigen::MatrixXd out = actor_old_.forward(features);
  std::vector<RawAction> actions;
  actions.reserve(static_cast<std::size_t>(features.cols()));
  if (logps) logps->clear();
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    PolicyHeads h = make_heads(out.col(i), layout_);
    actions.push_back(sample_action(h, rng, deterministic));
    if (logps) logps->push_back(log_prob(h, actions.back(), space_));
  }
  return actions;
}

std::vector<mdp::Action> PpoAgent::act_env(std::span<const mdp::Observation> obs,
                                           const mdp::ObservationScales& scales, Rng& rng,
                                           bool deterministic) const {
  std::vector<mdp::Action> out;
  for (const RawAction& a : act(feature_matrix(obs, scales), rng, deterministic)) {
    out.push_back(decode(a, space_));
  }
  return out;
}

double PpoAgent::value_old(const Eigen::VectorXd& features) const {
  return cfg_.value_scale * critic_old_.forward(features)[0];
}

PpoAgent::UpdateStats PpoAgent::update(TrajectoryBuffer& buffer, Rng& rng) {
  UpdateStats stats;
  if (buffer.empty()) return stats;
  auto& items = buffer.items();
  buffer.compute_returns(cfg_.gamma, [this](const Eigen::VectorXd& s) { return value_old(s); });

  std::vector<double> rets, vals;
  for (auto& t : items) {
    t.value_old = value_old(t.obs);
    rets.push_back(t.ret);
    vals.push_back(t.value_old);
  }
  std::vector<double> adv = advantages(rets, vals);
  for (std::size_t i = 0; i < items.size(); ++i) items[i].adv = adv[i];

  const LossConfig loss_cfg{cfg_.clip_eps, cfg_.entropy_coef, cfg_.value_scale};
  const std::size_t batch_size =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg_.minibatch, 1)), items.size());
  std::vector<std::size_t> order(items.size());
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first batch_size entries are a uniform sample.
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::size_t j = i + static_cast<std::size_t>(uniform01(rng) * (order.size() - i));
      std::swap(order[i], order[std::min(j, order.size() - 1)]);
    }
    std::vector<const Transition*> batch;
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(&items[order[i]]);

    Gradients g;
    LossTerms terms = ppo_loss(actor_, critic_, layout_, space_, batch, loss_cfg, &g);
    const bool finite = std::isfinite(terms.total) && g.actor.allFinite() && g.critic.allFinite();
    if (!finite) {
      ++stats.skipped;
      continue;
    }
    actor_opt_.step(actor_.parameters(), g.actor);
    critic_opt_.step(critic_.parameters(), g.critic);
    ++stats.applied;
    stats.mean.actor += terms.actor;
    stats.mean.critic += terms.critic;
    stats.mean.entropy += terms.entropy;
    stats.mean.total += terms.total;
  }
  if (stats.applied > 0) {
    stats.mean.actor /= stats.applied;
    stats.mean.critic /= stats.applied;
    stats.mean.entropy /= stats.applied;
    stats.mean.total /= stats.applied;
  }
  sync_old();
  return stats;
}

namespace {

void write_net(std::ostream& out, const std::string& name, const DenseNet& net) {
  out << "net " << name << ' ' << net.widths().size();
  for (int w : net.widths()) out << ' ' << w;
  out << '\n';
  const Eigen::VectorXd& p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) out << format_double(p[i]) << '\n';
}

DenseNet read_net(std::istream& in, const std::string& expected) {
  std::string tag, name;
  std::size_t count = 0;
  if (!(in >> tag >> name >> count) || tag != "net" || name != expected || count < 2) {
    throw IoError("checkpoint: expected net '" + expected + "'");
  }
  std::vector<int> widths(count);
  for (auto& w : widths) {
    if (!(in >> w)) throw IoError("checkpoint: truncated widths");
  }
  DenseNet net(widths);
  Eigen::VectorXd& p = net.parameters();
  std::string token;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(in >> token)) throw IoError("checkpoint: truncated parameters");
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), p[i]);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw IoError("checkpoint: bad number '" + token + "'");
    }
  }
  return net;
}

}  // namespace

void PpoAgent::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << "semalloc-checkpoint 1\n";
  out << "space " << space_.num_links << ' ' << space_.u_max << ' '
      << format_double(space_.p_max_w) << ' ' << format_double(space_.o1_min) << ' '
      << format_double(space_.o1_max) << '\n';
  out << "value_scale " << format_double(cfg_.value_scale) << '\n';
  write_net(out, "actor", actor_);
  write_net(out, "critic", critic_);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

PpoAgent PpoAgent::load(const std::filesystem::path& path, const LearnerConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic, tag;
  int version = 0;
  if (!(in >> magic >> version) || magic != "semalloc-checkpoint" || version != 1) {
    throw IoError("not a semalloc checkpoint: " + path.string());
  }
  PpoAgent agent;
  agent.cfg_ = cfg;
  auto& s = agent.space_;
  if (!(in >> tag >> s.num_links >> s.u_max >> s.p_max_w >> s.o1_min >> s.o1_max) ||
      tag != "space") {
    throw IoError("checkpoint: bad action-space header");
  }
  if (!(in >> tag >> agent.cfg_.value_scale) || tag != "value_scale") {
    throw IoError("checkpoint: missing value_scale");
  }
  agent.layout_ = {s.num_links, s.u_max};
  agent.actor_ = read_net(in, "actor");
  agent.critic_ = read_net(in, "critic");
  if (agent.actor_.output_dim() != agent.layout_.output_dim()) {
    throw IoError("checkpoint: actor output does not match the action space");
  }
  agent.actor_opt_ = Adam(agent.actor_.parameter_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  agent.critic_opt_ = Adam(agent.critic_.parameter_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  agent.sync_old();
  return agent;
}

Eigen::MatrixXd feature_matrix(std::span<const mdp::Observation> obs,
                               const mdp::ObservationScales& scales) {
  if (obs.empty()) return {};
  std::vector<double> first = mdp::features(obs[0], scales);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(first.size()), static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    std::vector<double> f = i == 0 ? first : mdp::features(obs[i], scales);
    m.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(f.data(), m.rows());
  }
  return m;
}

TrainResult train(mdp::Environment& env, const LearnerConfig& cfg, std::uint64_t seed,
                  const std::function<void(const TrainLogRow&)>& on_episode) {
  if (cfg.episodes < 0 || cfg.update_interval < 1 || cfg.epochs < 1) {
    throw ConfigError("learner: episodes >= 0, update_interval >= 1 and epochs >= 1 required");
  }
  TrainResult result;
  result.agent = PpoAgent(env.observation_dim(), env.action_space(), cfg, seed);
  PpoAgent& agent = result.agent;
  Rng policy_rng = make_stream(seed, "policy");
  Rng batch_rng = make_stream(seed, "minibatch");
  const int n_agents = env.num_agents();
  const mdp::ObservationScales scales = env.observation_scales();
  TrajectoryBuffer buffer(static_cast<std::size_t>(cfg.update_interval) * n_agents);
  int consecutive_skips = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    auto obs = env.reset(derive_seed(seed, "episode", static_cast<std::uint64_t>(ep)));
    Eigen::MatrixXd feats = feature_matrix(obs, scales);
    TrainLogRow row;
    row.episode = ep;
    int steps = 0, updates = 0;
    double collided = 0.0, hsse = 0.0;
    while (!env.done()) {
      std::vector<double> logps;
      std::vector<RawAction> raw = agent.act(feats, policy_rng, false, &logps);
      std::vector<mdp::Action> actions;
      for (const auto& a : raw) actions.push_back(decode(a, agent.space()));
      mdp::StepResult res = env.step(actions);
      Eigen::MatrixXd next = feature_matrix(res.observations, scales);
      const double r = res.outcome.breakdown.reward;
      for (int n = 0; n < n_agents; ++n) {
        buffer.add({feats.col(n), raw[n], logps[n], r, next.col(n), res.done, n});
      }
      row.episode_reward += r;
      row.st_vehicles += res.outcome.breakdown.st_sum_vehicles;
      row.st_wifi += res.outcome.breakdown.st_sum_wifi;
      for (const auto& l : res.outcome.links) {
        collided += l.collided;
        hsse += l.hsse;
      }
      ++steps;
      feats = std::move(next);

      if (steps % cfg.update_interval == 0 || res.done) {
        PpoAgent::UpdateStats st = agent.update(buffer, batch_rng);
        buffer.clear();
        row.actor_loss += st.mean.actor;
        row.critic_loss += st.mean.critic;
        row.entropy += st.mean.entropy;
        row.skipped_updates += st.skipped;
        ++updates;
        consecutive_skips = st.applied == 0 ? consecutive_skips + st.skipped : 0;
        if (consecutive_skips > cfg.max_nonfinite_updates) {
          throw NumericError("training aborted: persistent non-finite losses");
        }
      }
    }
    row.mean_step_reward = row.episode_reward / steps;
    row.st_vehicles /= steps;
    row.st_wifi /= steps;
    row.collision_rate = collided / (static_cast<double>(steps) * n_agents);
    row.mean_hsse = hsse / (static_cast<double>(steps) * n_agents);
    if (updates > 0) {
      row.actor_loss /= updates;
      row.critic_loss /= updates;
      row.entropy /= updates;
    }
    result.log.push_back(row);
    if (on_episode) on_episode(row);
  }
  return result;
}

}  // namespace semalloc::learner
