#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "../support/grad_check.h"
#include "semalloc/dense_net.h"
#include "semalloc/error.h"
#include "semalloc/policy.h"
#include "semalloc/ppo.h"

namespace semalloc::learner {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

TEST(Losses, ClippedSurrogateHandVectors) {
  std::vector<double> old = {0.0};
  EXPECT_NEAR(actor_loss(std::vector<double>{std::log(1.5)}, old, std::vector<double>{1.0}, 0.2),
              -1.2, 1e-12);
  EXPECT_NEAR(actor_loss(std::vector<double>{std::log(0.5)}, old, std::vector<double>{-1.0}, 0.2),
              0.8, 1e-12);
  // Inside the band the ratio is used as is.
  EXPECT_NEAR(actor_loss(std::vector<double>{std::log(1.1)}, old, std::vector<double>{2.0}, 0.2),
              -2.2, 1e-12);
}

TEST(Losses, CriticAndTotal) {
  EXPECT_NEAR(critic_loss(std::vector<double>{3.0}, std::vector<double>{1.0}), 2.0, 1e-15);
  EXPECT_NEAR(critic_loss(std::vector<double>{3.0, 0.0}, std::vector<double>{1.0, 1.0}), 1.25,
              1e-15);
  EXPECT_NEAR(total_loss(-1.0, 2.0, 5.0, 0.01), 0.95, 1e-15);
  EXPECT_THROW(total_loss(0.0, 0.0, 1.0, -0.1), std::invalid_argument);
}

TEST(Advantages, MaxAbsNormalization) {
  auto a = advantages(std::vector<double>{2.0, -4.0}, std::vector<double>{0.0, 0.0});
  ASSERT_EQ(a.size(), 2u);
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], -1.0);
  auto z = advantages(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 1.0});
  EXPECT_EQ(z[0], 0.0);
  EXPECT_THROW(advantages(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(Advantages, AlwaysWithinUnitBox) {
  Rng rng = make_stream(1, "adv");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(25), v(25);
    for (int i = 0; i < 25; ++i) {
      r[i] = 1000.0 * (uniform01(rng) - 0.5);
      v[i] = 1000.0 * (uniform01(rng) - 0.5);
    }
    double max_abs = 0.0;
    for (double a : advantages(r, v)) {
      ASSERT_LE(std::abs(a), 1.0);
      max_abs = std::max(max_abs, std::abs(a));
    }
    EXPECT_DOUBLE_EQ(max_abs, 1.0);
  }
}

TEST(Returns, Discounting) {
  auto r = discounted_returns(std::vector<double>{1.0, 1.0}, 0.99);
  EXPECT_NEAR(r[0], 1.99, 1e-15);
  EXPECT_NEAR(r[1], 1.0, 1e-15);
  auto b = discounted_returns(std::vector<double>{0.0}, 0.5, 4.0);
  EXPECT_NEAR(b[0], 2.0, 1e-15);
}

TEST(Returns, BufferSeparatesAgentsAndBootstraps) {
  TrajectoryBuffer buf;
  for (int t = 0; t < 2; ++t) {
    for (int n = 0; n < 2; ++n) {
      Transition tr;
      tr.agent = n;
      tr.reward = 1.0;
      tr.next_obs = Eigen::VectorXd::Constant(1, n == 0 ? 10.0 : 20.0);
      tr.done = (n == 1 && t == 1);
      buf.add(tr);
    }
  }
  buf.compute_returns(0.5, [](const Eigen::VectorXd& s) { return s[0]; });
  const auto& it = buf.items();
  // Agent 0 is cut mid-episode: bootstrap 10.
  EXPECT_DOUBLE_EQ(it[2].ret, 1.0 + 0.5 * 10.0);
  EXPECT_DOUBLE_EQ(it[0].ret, 1.0 + 0.5 * 6.0);
  // Agent 1 terminates: no bootstrap.
  EXPECT_DOUBLE_EQ(it[3].ret, 1.0);
  EXPECT_DOUBLE_EQ(it[1].ret, 1.5);
}

TEST(Adam, FirstStepMovesEachCoordinateByLr) {
  Adam opt(3, 1e-4, 0.9, 0.99, 1e-8);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd g(3);
  g << 2.0, -0.5, 1e-3;
  ASSERT_TRUE(opt.step(p, g));
  EXPECT_NEAR(p[0], -1e-4, 1e-10);
  EXPECT_NEAR(p[1], 1e-4, 1e-10);
  EXPECT_NEAR(p[2], -1e-4, 1e-9);
}

TEST(Adam, SkipsNonFiniteGradients) {
  Adam opt(2, 1e-3, 0.9, 0.99, 1e-8);
  Eigen::VectorXd p = Eigen::VectorXd::Ones(2);
  Eigen::VectorXd g(2);
  g << std::nan(""), 1.0;
  EXPECT_FALSE(opt.step(p, g));
  EXPECT_EQ(p, Eigen::VectorXd::Ones(2));
  EXPECT_EQ(opt.steps(), 0);
}

TEST(DenseNet, ForwardMatchesHandComputation) {
  DenseNet net({2, 2, 1});
  // Layer 0 weights (column-major 2x2), bias; layer 1 weights (1x2), bias.
  net.parameters() << 0.1, 0.2, 0.3, 0.4, 0.0, -0.1, 1.0, -1.0, 0.5;
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  double h0 = std::tanh(0.1 * 1.0 + 0.3 * 2.0 + 0.0);
  double h1 = std::tanh(0.2 * 1.0 + 0.4 * 2.0 - 0.1);
  EXPECT_NEAR(net.forward(x)[0], h0 - h1 + 0.5, 1e-15);
  EXPECT_EQ(DenseNet::parameter_count(std::vector<int>{2, 2, 1}), 9);
}

TEST(DenseNet, InitHasRequestedSpread) {
  DenseNet net({10, 128, 64, 40});
  Rng rng = make_stream(1, "init");
  net.init_normal(rng, 0.1);
  const auto& p = net.parameters();
  double mean = p.mean();
  double sd = std::sqrt((p.array() - mean).square().mean());
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(sd, 0.1, 0.005);
}

TEST(Gradients, FullFiniteDifferenceOnSmallNets) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto r = testing::check_ppo_gradients(seed, {12, 8}, 6, 0);
    EXPECT_LT(r.actor_rel_err, 1e-4) << "seed " << seed;
    EXPECT_LT(r.critic_rel_err, 1e-4) << "seed " << seed;
  }
}

PolicyHeads sample_heads() {
  HeadLayout layout{3, 4};
  Eigen::VectorXd out(layout.output_dim());
  out << 0.2, -1.0, 0.7, 0.0, 0.5, -0.5, 1.5, 0.3, 0.4, -0.2, -0.6;
  return make_heads(out, layout);
}

TEST(Policy, SamplingFrequenciesMatchProbabilities) {
  PolicyHeads h = sample_heads();
  Rng rng = make_stream(8, "sample");
  const int draws = 100000;
  std::vector<int> link(3, 0), u(4, 0);
  double z_sum = 0.0;
  for (int i = 0; i < draws; ++i) {
    RawAction a = sample_action(h, rng);
    ++link[a.link];
    ++u[a.u_index];
    z_sum += a.z[0];
  }
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(link[j] / double(draws), h.link_probs[j], 0.01);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(u[j] / double(draws), h.u_probs[j], 0.01);
  EXPECT_NEAR(z_sum / draws, h.mean[0], 0.01);
}

TEST(Policy, LogStdStaysInBand) {
  HeadLayout layout{2, 2};
  for (double raw : {-1e6, -3.0, 0.0, 3.0, 1e6}) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.output_dim());
    out[layout.raw_log_std_index(0)] = raw;
    PolicyHeads h = make_heads(out, layout);
    EXPECT_GE(h.log_std[0], kLogStdMid - kLogStdHalfWidth);
    EXPECT_LE(h.log_std[0], kLogStdMid + kLogStdHalfWidth);
  }
}

TEST(Policy, LogProbIsDensityOfTheSquashedAction) {
  PolicyHeads h = sample_heads();
  mdp::ActionSpace space{3, 4, 0.2, 0.05, 0.95};
  RawAction a{2, 1, {0.3, -0.8}};
  double expected = h.link_log_probs[2] + h.u_log_probs[1];
  const std::array<double, 2> lo = {0.0, 0.05}, hi = {0.2, 0.95};
  for (int k = 0; k < 2; ++k) {
    double s = std::exp(h.log_std[k]);
    double d = (a.z[k] - h.mean[k]) / s;
    expected += -0.5 * d * d - std::log(s) - 0.5 * kLog2Pi;
    // Numerical derivative of the squash.
    auto y = [&](double z) { return lo[k] + (hi[k] - lo[k]) * 0.5 * (1.0 + std::tanh(z)); };
    double dy = (y(a.z[k] + 1e-6) - y(a.z[k] - 1e-6)) / 2e-6;
    expected -= std::log(dy);
  }
  EXPECT_NEAR(log_prob(h, a, space), expected, 1e-8);
}

TEST(Policy, EntropyOfIndependentHeads) {
  PolicyHeads h = sample_heads();
  double expected = 0.0;
  for (int j = 0; j < 3; ++j) expected -= h.link_probs[j] * std::log(h.link_probs[j]);
  for (int j = 0; j < 4; ++j) expected -= h.u_probs[j] * std::log(h.u_probs[j]);
  for (int k = 0; k < 2; ++k) expected += 0.5 * std::log(2.0 * M_PI * M_E * std::exp(2.0 * h.log_std[k]));
  EXPECT_NEAR(entropy(h), expected, 1e-12);
}

TEST(Policy, DecodeRespectsBounds) {
  mdp::ActionSpace space{5, 20, 0.2, 0.05, 0.95};
  Rng rng = make_stream(2, "decode");
  std::normal_distribution<double> wide(0.0, 30.0);
  for (int i = 0; i < 10000; ++i) {
    RawAction a{static_cast<int>(uniform01(rng) * 5), static_cast<int>(uniform01(rng) * 20),
                {wide(rng), wide(rng)}};
    mdp::Action act = decode(a, space);
    ASSERT_TRUE(space.contains(act));
    ASSERT_GT(act.power_w, 0.0);
    ASSERT_GE(act.o1_fraction, 0.05);
    ASSERT_LE(act.o1_fraction, 0.95);
  }
}

TEST(Agent, CheckpointRoundTrip) {
  mdp::ActionSpace space{6, 5, 0.2, 0.05, 0.95};
  LearnerConfig cfg;
  cfg.hidden = {16, 8};
  PpoAgent agent(7, space, cfg, 3);
  auto path = std::filesystem::temp_directory_path() / "semalloc_ckpt_test.txt";
  agent.save(path);
  PpoAgent back = PpoAgent::load(path, cfg);
  EXPECT_EQ(back.actor().parameters(), agent.actor().parameters());
  EXPECT_EQ(back.critic().parameters(), agent.critic().parameters());
  EXPECT_EQ(back.space().p_max_w, space.p_max_w);
  std::filesystem::remove(path);
  EXPECT_THROW(PpoAgent::load("/nonexistent/ckpt", cfg), IoError);
}

TEST(Agent, UpdateChangesParametersAndSyncsOld) {
  mdp::ActionSpace space{4, 3, 0.2, 0.05, 0.95};
  LearnerConfig cfg;
  cfg.hidden = {8};
  cfg.lr = 1e-2;
  PpoAgent agent(5, space, cfg, 1);
  Rng rng = make_stream(1, "u");
  TrajectoryBuffer buf;
  Eigen::MatrixXd feats = Eigen::MatrixXd::Random(5, 6);
  std::vector<double> logps;
  auto acts = agent.act(feats, rng, false, &logps);
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.obs = feats.col(i);
    t.next_obs = feats.col(i);
    t.action = acts[i];
    t.logp_old = logps[i];
    t.reward = i % 2 ? 1.0 : -1.0;
    t.agent = i % 3;
    t.done = i >= 3;
    buf.add(t);
  }
  Eigen::VectorXd before = agent.actor().parameters();
  auto stats = agent.update(buf, rng);
  EXPECT_EQ(stats.applied, cfg.epochs);
  EXPECT_GT((agent.actor().parameters() - before).norm(), 0.0);
  EXPECT_EQ(agent.actor_old().parameters(), agent.actor().parameters());
}

}  // namespace
}  // namespace semalloc::learner
