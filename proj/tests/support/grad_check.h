#pragma once

// Central finite-difference check of the PPO total loss against the analytic
// gradient, over random networks, observations, actions and advantages.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "semalloc/policy.h"
#include "semalloc/ppo.h"
#include "semalloc/rng.h"

namespace semalloc::testing {

struct GradCheckResult {
  double actor_rel_err = 0.0;
  double critic_rel_err = 0.0;
  int coords_checked = 0;
};

inline double norm_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / scale;
}

// coords_per_net <= 0 checks every parameter; otherwise every output-layer
// parameter (all heads) plus that many random hidden-layer coordinates.
inline GradCheckResult check_ppo_gradients(std::uint64_t seed, const std::vector<int>& hidden,
                                           int batch_size, int coords_per_net,
                                           double h = 1e-5) {
  Rng rng = make_stream(seed, "gradcheck");
  const int obs_dim = 4 + static_cast<int>(uniform01(rng) * 5);
  mdp::ActionSpace space{3 + static_cast<int>(uniform01(rng) * 5),
                         2 + static_cast<int>(uniform01(rng) * 6), 0.2, 0.05, 0.95};
  learner::HeadLayout layout{space.num_links, space.u_max};
  std::vector<int> aw{obs_dim}, cw{obs_dim};
  for (int w : hidden) {
    aw.push_back(w);
    cw.push_back(w);
  }
  aw.push_back(layout.output_dim());
  cw.push_back(1);
  learner::DenseNet actor(aw), critic(cw);
  actor.init_normal(rng, 0.3);
  critic.init_normal(rng, 0.3);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<learner::Transition> items(static_cast<std::size_t>(batch_size));
  for (auto& t : items) {
    t.obs = Eigen::VectorXd(obs_dim);
    for (int i = 0; i < obs_dim; ++i) t.obs[i] = normal(rng);
    auto heads = learner::forward_policy(actor, t.obs, layout);
    t.action = learner::sample_action(heads, rng, false);
    // Old log-probabilities spread the ratios across both clip edges.
    t.logp_old = learner::log_prob(heads, t.action, space) + 0.5 * normal(rng);
    t.adv = 2.0 * uniform01(rng) - 1.0;
    t.ret = 3.0 * normal(rng);
  }
  std::vector<const learner::Transition*> batch;
  for (const auto& t : items) batch.push_back(&t);
  learner::LossConfig cfg{0.2, 0.01, 1.0 + 4.0 * uniform01(rng)};

  learner::Gradients g;
  learner::ppo_loss(actor, critic, layout, space, batch, cfg, &g);

  auto pick = [&](const learner::DenseNet& net) {
    std::vector<Eigen::Index> idx;
    const Eigen::Index total = net.parameter_count();
    if (coords_per_net <= 0) {
      idx.resize(static_cast<std::size_t>(total));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      return idx;
    }
    const auto& w = net.widths();
    const Eigen::Index last = static_cast<Eigen::Index>(w[w.size() - 2]) * w.back() + w.back();
    for (Eigen::Index i = total - last; i < total; ++i) idx.push_back(i);
    for (int k = 0; k < coords_per_net; ++k) {
      idx.push_back(static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(total - last)));
    }
    return idx;
  };

  GradCheckResult res;
  auto run = [&](learner::DenseNet& net, const Eigen::VectorXd& analytic) {
    std::vector<double> a, fd;
    for (Eigen::Index i : pick(net)) {
      double& p = net.parameters()[i];
      const double keep = p;
      p = keep + h;
      double up = learner::ppo_loss(actor, critic, layout, space, batch, cfg, nullptr).total;
      p = keep - h;
      double down = learner::ppo_loss(actor, critic, layout, space, batch, cfg, nullptr).total;
      p = keep;
      fd.push_back((up - down) / (2.0 * h));
      a.push_back(analytic[i]);
    }
    res.coords_checked += static_cast<int>(a.size());
    return norm_rel_err(a, fd);
  };
  res.actor_rel_err = run(actor, g.actor);
  res.critic_rel_err = run(critic, g.critic);
  return res;
}

}  // namespace semalloc::testing
