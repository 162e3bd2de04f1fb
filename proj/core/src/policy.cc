#include "semalloc/policy.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace semalloc::learner {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
constexpr double kZLimit = 15.0;                // decode clamp; keeps p > 0

// log(1 - tanh(z)^2), stable for large |z|.
double log_one_minus_tanh_sq(double z) {
  double a = std::abs(z);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

double squash(double z, double lo, double hi) {
  double zc = std::clamp(z, -kZLimit, kZLimit);
  return lo + (hi - lo) * 0.5 * (1.0 + std::tanh(zc));
}

int categorical(const Eigen::VectorXd& probs, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index idx = 0;
  v.maxCoeff(&idx);
  return static_cast<int>(idx);
}

}  // namespace

Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  double m = logits.maxCoeff();
  double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

PolicyHeads make_heads(const Eigen::Ref<const Eigen::VectorXd>& output, const HeadLayout& layout) {
  PolicyHeads h;
  h.link_log_probs = log_softmax(output.segment(0, layout.num_links));
  h.link_probs = h.link_log_probs.array().exp();
  h.u_log_probs = log_softmax(output.segment(layout.num_links, layout.u_max));
  h.u_probs = h.u_log_probs.array().exp();
  for (int k = 0; k < kContinuousHeads; ++k) {
    h.mean[k] = output[layout.mean_index(k)];
    h.raw_log_std[k] = output[layout.raw_log_std_index(k)];
    h.log_std[k] = kLogStdMid + kLogStdHalfWidth * std::tanh(h.raw_log_std[k]);
  }
  return h;
}

PolicyHeads forward_policy(const DenseNet& actor, const Eigen::VectorXd& features,
                           const HeadLayout& layout) {
  return make_heads(actor.forward(features), layout);
}

double log_prob_unsquashed(const PolicyHeads& heads, const RawAction& a) {
  double lp = heads.link_log_probs[a.link] + heads.u_log_probs[a.u_index];
  for (int k = 0; k < kContinuousHeads; ++k) {
    double s = std::exp(heads.log_std[k]);
    double d = (a.z[k] - heads.mean[k]) / s;
    lp += -0.5 * d * d - heads.log_std[k] - 0.5 * kLog2Pi;
  }
  return lp;
}

double squash_log_jacobian(const RawAction& a, const mdp::ActionSpace& space) {
  const std::array<double, kContinuousHeads> range = {space.p_max_w,
                                                      space.o1_max - space.o1_min};
  double lj = 0.0;
  for (int k = 0; k < kContinuousHeads; ++k) {
    if (range[k] <= 0.0) continue;  // degenerate range: the head is a constant
    lj += std::log(0.5 * range[k]) + log_one_minus_tanh_sq(a.z[k]);
  }
  return lj;
}

double log_prob(const PolicyHeads& heads, const RawAction& a, const mdp::ActionSpace& space) {
  return log_prob_unsquashed(heads, a) - squash_log_jacobian(a, space);
}

double entropy(const PolicyHeads& heads) {
  double h = -(heads.link_probs.array() * heads.link_log_probs.array()).sum();
  h -= (heads.u_probs.array() * heads.u_log_probs.array()).sum();
  for (int k = 0; k < kContinuousHeads; ++k) h += heads.log_std[k] + 0.5 * (kLog2Pi + 1.0);
  return h;
}

RawAction sample_action(const PolicyHeads& heads, Rng& rng, bool deterministic) {
  RawAction a;
  if (deterministic) {
    a.link = argmax(heads.link_probs);
    a.u_index = argmax(heads.u_probs);
    a.z = heads.mean;
    return a;
  }
  a.link = categorical(heads.link_probs, rng);
  a.u_index = categorical(heads.u_probs, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < kContinuousHeads; ++k) {
    a.z[k] = heads.mean[k] + std::exp(heads.log_std[k]) * normal(rng);
  }
  return a;
}

mdp::Action decode(const RawAction& a, const mdp::ActionSpace& space) {
  mdp::Action out;
  out.attach = a.link;
  out.u = a.u_index + 1;
  out.power_w = std::max(squash(a.z[0], 0.0, space.p_max_w), 1e-12 * space.p_max_w);
  out.o1_fraction = squash(a.z[1], space.o1_min, space.o1_max);
  return out;
}

}  // namespace semalloc::learner
