#pragma once

// Factored stochastic policy over the joint action: a categorical over
// (BS, RB) links, a categorical over symbols-per-word, and two
// tanh-squashed Gaussians for transmit power and duty-cycle fraction.

#include <array>

#include <Eigen/Dense>

#include "semalloc/dense_net.h"
#include "semalloc/mdp.h"
#include "semalloc/rng.h"

namespace semalloc::learner {

inline constexpr int kContinuousHeads = 2;  // 0: power, 1: o1 fraction
// Log-std is softly bounded to [mid - half, mid + half] via tanh.
inline constexpr double kLogStdMid = -1.0;
inline constexpr double kLogStdHalfWidth = 2.0;

// Actor output layout: [link logits | u logits | mean_p, raw_std_p, mean_o1, raw_std_o1].
struct HeadLayout {
  int num_links = 0;
  int u_max = 0;

  int output_dim() const { return num_links + u_max + 2 * kContinuousHeads; }
  int mean_index(int k) const { return num_links + u_max + 2 * k; }
  int raw_log_std_index(int k) const { return mean_index(k) + 1; }
};

struct PolicyHeads {
  Eigen::VectorXd link_probs;
  Eigen::VectorXd link_log_probs;
  Eigen::VectorXd u_probs;
  Eigen::VectorXd u_log_probs;
  std::array<double, kContinuousHeads> mean{};
  std::array<double, kContinuousHeads> log_std{};
  std::array<double, kContinuousHeads> raw_log_std{};
};

// Action in the policy's own coordinates (pre-squash Gaussian samples).
struct RawAction {
  int link = 0;
  int u_index = 0;  // u = u_index + 1
  std::array<double, kContinuousHeads> z{};
};

Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

PolicyHeads make_heads(const Eigen::Ref<const Eigen::VectorXd>& output, const HeadLayout& layout);
PolicyHeads forward_policy(const DenseNet& actor, const Eigen::VectorXd& features,
                           const HeadLayout& layout);

// Joint log-density, including the log-Jacobian of the tanh squash.
double log_prob(const PolicyHeads& heads, const RawAction& a, const mdp::ActionSpace& space);
// Log-density terms that depend on the network output (no squash term).
double log_prob_unsquashed(const PolicyHeads& heads, const RawAction& a);
double squash_log_jacobian(const RawAction& a, const mdp::ActionSpace& space);

// Categorical entropies plus pre-squash Gaussian differential entropies.
double entropy(const PolicyHeads& heads);

// Deterministic mode takes the argmax categories and the Gaussian means.
RawAction sample_action(const PolicyHeads& heads, Rng& rng, bool deterministic = false);
mdp::Action decode(const RawAction& a, const mdp::ActionSpace& space);

}  // namespace semalloc::learner
