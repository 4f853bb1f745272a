#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "hetnet/channel.hpp"
#include "hetnet/error.hpp"
#include "hetnet/masc.hpp"

using namespace hetnet;

namespace {

ScenarioConfig toy(int T_d = 3, int D = 4, int T_u = 5) {
  ScenarioConfig c;
  c.name = "toy";
  c.aps = {ApSpec{0.0, 0.0, 1, 1.0, 10.0, 200.0}, ApSpec{300.0, 0.0, 2, 0.1, 10.0, 100.0}};
  c.timeline.T_d = T_d;
  c.timeline.D = D;
  c.timeline.T_u = T_u;
  c.timeline.M = 50;
  c.masc.actor_hidden = {8, 8};
  c.masc.critic_state_hidden = {12, 12};
  c.masc.critic_action_hidden = 6;
  c.masc.critic_mixed_hidden = 10;
  c.validate();
  return c;
}

struct ToyRun {
  ChannelTrace trace;
  TraceSource source;
  Trainer trainer;

  ToyRun(const ScenarioConfig& c, std::uint64_t seed, int slots)
      : trace(generate_trace(c, seed, slots + 2)), source(trace.gains), trainer(c, seed, source) {}
};

LocalState random_state(Rng& rng) {
  std::uniform_real_distribution<double> u(0.01, 5.0);
  LocalState s{u(rng), u(rng) / 5, u(rng), u(rng), u(rng), u(rng), u(rng)};
  return s;
}

GainMatrix random_gains(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.01, 10.0);
  GainMatrix g;
  g.g.resize(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) g.g(k, j) = u(rng);
  return g;
}

std::vector<GlobalExperience> random_experiences(int n, int count, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GlobalExperience> out(count);
  for (auto& e : out) {
    for (int k = 0; k < n; ++k) {
      e.states.push_back(random_state(rng));
      e.next_states.push_back(random_state(rng));
      e.actions.push_back(u(rng) * (k == 0 ? 1.0 : 0.1));
    }
    e.s_o = random_gains(n, rng);
    e.s_o_next = random_gains(n, rng);
    e.reward_sum = 3 * u(rng);
  }
  return out;
}

Batch toy_batch(const ScenarioConfig& c, int count, Rng& rng, std::vector<GlobalExperience>& keep) {
  keep = random_experiences(c.num_aps(), count, rng);
  std::vector<const GlobalExperience*> ptr;
  for (const auto& e : keep) ptr.push_back(&e);
  return make_batch(ptr, FeatureEncoder(c.p_max(), c.masc.feature_scale));
}

// Q = sum of actions: state branch ignored, action branch identity.
Critic sum_critic(int n, int state_width) {
  nn::Layer s{nn::Activation::linear(), nn::Matrix::Zero(1, state_width), nn::Vector::Zero(1),
              state_width, 1};
  nn::Layer a{nn::Activation::linear(), nn::Matrix::Identity(n, n), nn::Vector::Zero(n), n, n};
  nn::Matrix w = nn::Matrix::Ones(1, 1 + n);
  w(0, 0) = 0.0;
  nn::Layer m{nn::Activation::linear(), w, nn::Vector::Zero(1), 1 + n, 1};
  return Critic(nn::Mlp({s}), nn::Mlp({a}), nn::Mlp({m}));
}

double mean_q(const ActorSet& actors, const Critic& critic, const Batch& b,
              const FeatureEncoder& enc) {
  nn::Matrix a(actors.size(), b.size());
  for (int k = 0; k < actors.size(); ++k) {
    const nn::Matrix y = actors.agents[k].actor.predict(b.local[k]);
    for (int j = 0; j < b.size(); ++j) a(k, j) = enc.action(k, y(0, j));
  }
  return critic.predict(b.states, a).mean();
}

}  // namespace

TEST(Noise, ScheduleValues) {
  const NoiseSchedule n;
  EXPECT_NEAR(n.stddev(0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(n.stddev(1000), std::sqrt(2.0) * std::pow(0.9995, 1000), 1e-15);
  EXPECT_DOUBLE_EQ(n.stddev(100000), 0.01);
}

TEST(Actor, OutputWithinPowerRange) {
  const ScenarioConfig c = toy();
  Rng rng(1);
  const nn::Mlp net = make_actor_network(c.masc, 0.1, rng);
  FeatureEncoder enc(c.p_max(), 1.0);
  for (int i = 0; i < 100; ++i) {
    const double y = net.predict(enc.local(random_state(rng)))(0);
    EXPECT_GE(y, 0.0);
    EXPECT_LE(y, 0.1);
  }
}

TEST(Actor, SelectActionNoExplorationIsDeterministic) {
  const ScenarioConfig c = toy();
  Rng rng(2), a(10), b(20);
  const nn::Mlp net = make_actor_network(c.masc, 1.0, rng);
  const nn::Vector f = FeatureEncoder(c.p_max(), 1.0).local(random_state(rng));
  const NoiseSchedule noise;
  const double mu = net.predict(f)(0);
  EXPECT_EQ(select_action(net, f, noise, 0, a, false, 1.0, 1e-6), std::clamp(mu, 1e-6, 1.0));
  EXPECT_EQ(select_action(net, f, noise, 0, b, false, 1.0, 1e-6), std::clamp(mu, 1e-6, 1.0));
}

TEST(Actor, HugeNoiseClipsToBounds) {
  const ScenarioConfig c = toy();
  Rng rng(3);
  const nn::Mlp net = make_actor_network(c.masc, 1.0, rng);
  const nn::Vector f = FeatureEncoder(c.p_max(), 1.0).local(random_state(rng));
  NoiseSchedule noise{1e8, 1.0, 0.0};
  int high = 0, low = 0;
  for (int i = 0; i < 200; ++i) {
    const double a = select_action(net, f, noise, 0, rng, true, 1.0, 1e-6);
    ASSERT_TRUE(a == 1.0 || a == 1e-6) << a;
    (a == 1.0 ? high : low)++;
  }
  EXPECT_GT(high, 50);
  EXPECT_GT(low, 50);
}

TEST(Encoder, BatchLayout) {
  const ScenarioConfig c = toy();
  Rng rng(4);
  std::vector<GlobalExperience> keep;
  const Batch b = toy_batch(c, 6, rng, keep);
  EXPECT_EQ(b.states.rows(), 7 * 2 + 4);
  EXPECT_EQ(b.states.cols(), 6);
  EXPECT_EQ(b.actions.rows(), 2);
  EXPECT_DOUBLE_EQ(b.actions(1, 3), keep[3].actions[1] / 0.1);
  EXPECT_DOUBLE_EQ(b.rewards(5), keep[5].reward_sum);
  ASSERT_EQ(b.local.size(), 2u);
  FeatureEncoder enc(c.p_max(), 1.0);
  EXPECT_TRUE(b.local[1].col(2).isApprox(enc.local(keep[2].states[1])));
  EXPECT_TRUE(b.local_next[0].col(4).isApprox(enc.local(keep[4].next_states[0])));
  // Local features lead the global state vector.
  EXPECT_TRUE(b.states.col(0).head(7).isApprox(b.local[0].col(0)));
  EXPECT_TRUE(b.states.col(0).segment(7, 7).isApprox(b.local[1].col(0)));
}

TEST(Targets, NoDiscountGivesReward) {
  const ScenarioConfig c = toy();
  Rng rng(5);
  std::vector<GlobalExperience> keep;
  const Batch b = toy_batch(c, 5, rng, keep);
  const ActorSet actors = ActorSet::create(c, rng);
  const CriticPair critic = CriticPair::create(c, rng);
  FeatureEncoder enc(c.p_max(), 1.0);
  const nn::Vector y = compute_critic_targets(b, actors, critic.target, 0.0, enc);
  EXPECT_TRUE(y.isApprox(b.rewards, 1e-15));
}

TEST(Targets, ConstantCriticExample) {
  const ScenarioConfig c = toy();
  Rng rng(6);
  std::vector<GlobalExperience> keep;
  keep = random_experiences(2, 1, rng);
  keep[0].reward_sum = 3.7;
  const GlobalExperience* p = &keep[0];
  FeatureEncoder enc(c.p_max(), 1.0);
  const Batch b = make_batch(std::span<const GlobalExperience* const>(&p, 1), enc);
  const ActorSet actors = ActorSet::create(c, rng);
  Critic q = CriticPair::create(c, rng).target;
  auto& last = q.mixed_module().layers().back();
  last.weight.setZero();
  last.bias.setConstant(10.0);
  EXPECT_NEAR(compute_critic_targets(b, actors, q, 0.5, enc)(0), 8.7, 1e-12);
}

TEST(CriticStep, LossIsMeanSquaredResidual) {
  const ScenarioConfig c = toy();
  Rng rng(7);
  std::vector<GlobalExperience> keep;
  const Batch b = toy_batch(c, 8, rng, keep);
  CriticPair critic = CriticPair::create(c, rng);
  const nn::Vector y = nn::Vector::LinSpaced(8, 0.0, 3.0);
  const nn::Matrix q = critic.online.predict(b.states, b.actions);
  const double expect = (q.row(0).transpose() - y).squaredNorm() / 8.0;
  const CriticUpdate u = update_critic(critic, b, y);
  EXPECT_TRUE(u.applied);
  EXPECT_NEAR(u.loss, expect, 1e-12 * std::max(1.0, expect));
}

TEST(CriticStep, LossDecreasesOnFixedBatch) {
  const ScenarioConfig c = toy();
  Rng rng(8);
  std::vector<GlobalExperience> keep;
  const Batch b = toy_batch(c, 16, rng, keep);
  CriticPair critic = CriticPair::create(c, rng);
  const nn::Vector y = b.rewards;
  double prev = update_critic(critic, b, y).loss;
  const double first = prev;
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const double now = update_critic(critic, b, y).loss;
    if (now > prev) ++violations;
    prev = now;
  }
  EXPECT_LE(violations, 5);
  EXPECT_LT(prev, first);
}

TEST(CriticStep, NonFiniteTargetSkipsStep) {
  const ScenarioConfig c = toy();
  Rng rng(9);
  std::vector<GlobalExperience> keep;
  const Batch b = toy_batch(c, 4, rng, keep);
  CriticPair critic = CriticPair::create(c, rng);
  const Critic before = critic.online;
  nn::Vector y = b.rewards;
  y(2) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(update_critic(critic, b, y).applied);
  EXPECT_EQ(critic.online, before);
}

TEST(ActorStep, FlatCriticLeavesActorsUnchanged) {
  const ScenarioConfig c = toy();
  Rng rng(10);
  std::vector<GlobalExperience> keep;
  const Batch b = toy_batch(c, 8, rng, keep);
  ActorSet actors = ActorSet::create(c, rng);
  Critic q = CriticPair::create(c, rng).online;
  for (auto& l : q.action_module().layers()) l.weight.setZero();
  const ActorSet before = actors;
  FeatureEncoder enc(c.p_max(), 1.0);
  update_actors(actors, q, b, enc, OtherActions::Online);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(actors.agents[k].actor, before.agents[k].actor);
}

TEST(ActorStep, SumCriticMovesAgainstGradient) {
  const ScenarioConfig c = toy();
  Rng rng(11);
  std::vector<GlobalExperience> keep;
  const Batch b = toy_batch(c, 8, rng, keep);
  ActorSet actors = ActorSet::create(c, rng);
  const ActorSet before = actors;
  FeatureEncoder enc(c.p_max(), 1.0);
  const Critic q = sum_critic(2, enc.state_width());
  update_actors(actors, q, b, enc, OtherActions::Online);
  for (int k = 0; k < 2; ++k) {
    const Agent& a0 = before.agents[k];
    // d(-mean Q)/d(output) = -1 / (D p_max) on every column.
    nn::ForwardCache cache;
    a0.actor.forward(b.local[k], cache);
    const nn::Matrix up = nn::Matrix::Constant(1, 8, -1.0 / (8.0 * a0.p_max));
    const nn::Gradients g = nn::mlp_backward(a0.actor, cache, up).params;
    const double lr = c.masc.actor_lr;
    const auto& l0 = a0.actor.layers();
    const auto& l1 = actors.agents[k].actor.layers();
    int checked = 0;
    for (std::size_t i = 0; i < l0.size(); ++i) {
      if (!l0[i].trainable()) continue;
      for (int r = 0; r < l0[i].weight.rows(); ++r)
        for (int cidx = 0; cidx < l0[i].weight.cols(); ++cidx) {
          const double gi = g.weight[i](r, cidx);
          if (std::abs(gi) < 1e-4) continue;
          const double step = l1[i].weight(r, cidx) - l0[i].weight(r, cidx);
          EXPECT_NEAR(step, -lr * gi / std::abs(gi), 1e-3 * lr);
          ++checked;
        }
    }
    EXPECT_GT(checked, 10);
  }
}

TEST(ActorStep, SmallStepAscendsObjective) {
  ScenarioConfig c = toy();
  c.masc.actor_lr = 1e-6;
  FeatureEncoder enc(c.p_max(), 1.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    std::vector<GlobalExperience> keep;
    const Batch b = toy_batch(c, 8, rng, keep);
    ActorSet actors = ActorSet::create(c, rng);
    const Critic q = CriticPair::create(c, rng).online;
    const double j0 = mean_q(actors, q, b, enc);
    const ActorUpdate u = update_actors(actors, q, b, enc, OtherActions::Online);
    EXPECT_NEAR(u.mean_q, j0, 1e-12 * std::max(1.0, std::abs(j0)));
    EXPECT_GT(mean_q(actors, q, b, enc), j0) << "seed " << seed;
  }
}

TEST(ActorStep, LoggedModeMatchesOnlineForSeparableCritic) {
  const ScenarioConfig c = toy();
  Rng rng(12);
  std::vector<GlobalExperience> keep;
  const Batch b = toy_batch(c, 8, rng, keep);
  ActorSet online = ActorSet::create(c, rng);
  ActorSet logged = online;
  FeatureEncoder enc(c.p_max(), 1.0);
  const Critic q = sum_critic(2, enc.state_width());
  const ActorUpdate uo = update_actors(online, q, b, enc, OtherActions::Online);
  const ActorUpdate ul = update_actors(logged, q, b, enc, OtherActions::Logged);
  EXPECT_NEAR(uo.mean_q, ul.mean_q, 1e-14);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(online.agents[k].actor, logged.agents[k].actor);
    EXPECT_NEAR(uo.mean_action[k], ul.mean_action[k], 1e-15);
  }
}

TEST(Targets, SoftSyncLagsOnline) {
  const ScenarioConfig c = toy();
  Rng rng(13);
  ActorSet actors = ActorSet::create(c, rng);
  CriticPair critic = CriticPair::create(c, rng);
  actors.agents[0].actor.layers()[0].weight.array() += 1.0;
  critic.online.state_module().layers()[0].bias.array() += 2.0;
  const nn::Matrix w_t = actors.agents[0].target.layers()[0].weight;
  const nn::Matrix w_o = actors.agents[0].actor.layers()[0].weight;
  const nn::Vector b_t = critic.target.state_module().layers()[0].bias;
  const nn::Vector b_o = critic.online.state_module().layers()[0].bias;
  sync_targets(actors, critic, 0.1, 0.01);
  EXPECT_TRUE(actors.agents[0].target.layers()[0].weight.isApprox(0.9 * w_t + 0.1 * w_o, 1e-14));
  EXPECT_TRUE(critic.target.state_module().layers()[0].bias.isApprox(0.99 * b_t + 0.01 * b_o,
                                                                     1e-14));
}

TEST(Timeline, ClockFormulas) {
  const TrainerClock clk{3, 4, 5};
  EXPECT_EQ(clk.first_update_slot(), 7);
  EXPECT_EQ(clk.first_replacement_slot(), 15);
  EXPECT_TRUE(clk.random_phase(7));
  EXPECT_FALSE(clk.random_phase(8));
}

TEST(Timeline, ToyTrainerEvents) {
  ToyRun run(toy(3, 4, 5), 42, 40);
  run.trainer.train(40);
  const auto& ev = run.trainer.events();
  ASSERT_TRUE(ev.first_update.has_value());
  EXPECT_EQ(*ev.first_update, 7);
  ASSERT_FALSE(ev.push_slots.empty());
  EXPECT_EQ(ev.push_slots.front(), 12);
  ASSERT_FALSE(ev.replacement_slots.empty());
  EXPECT_EQ(ev.replacement_slots.front(), 15);
  EXPECT_EQ(ev.update_slots.size(), 33u);
  for (std::size_t i = 1; i < ev.replacement_slots.size(); ++i)
    EXPECT_EQ(ev.replacement_slots[i] - ev.replacement_slots[i - 1], 5);
  EXPECT_EQ(run.trainer.records().size(), 40u);
  EXPECT_EQ(run.trainer.log().size(), 40u);
  EXPECT_TRUE(std::isnan(run.trainer.log()[6].critic_loss));
  EXPECT_FALSE(std::isnan(run.trainer.log()[7].critic_loss));
}

TEST(Timeline, ZeroDelay) {
  ToyRun run(toy(0, 4, 5), 43, 20);
  run.trainer.train(20);
  const auto& ev = run.trainer.events();
  ASSERT_TRUE(ev.first_update.has_value());
  EXPECT_EQ(*ev.first_update, 4);
  ASSERT_FALSE(ev.replacement_slots.empty());
  EXPECT_EQ(ev.replacement_slots.front(), 9);
}

TEST(Timeline, BufferSmallerThanBatchNeverUpdates) {
  ScenarioConfig c = toy(1, 8, 5);
  c.timeline.M = 5;
  ToyRun run(c, 44, 30);
  run.trainer.train(30);
  EXPECT_FALSE(run.trainer.events().first_update.has_value());
  EXPECT_EQ(run.trainer.diagnostics().updates, 0);
  EXPECT_EQ(run.trainer.buffer().size(), 5u);
}

TEST(Timeline, ExperiencesArriveAfterDelay) {
  ToyRun run(toy(3, 4, 5), 45, 10);
  run.trainer.train(5);
  // Slots 1 and 2 carry experiences that arrive at slots 4 and 5.
  EXPECT_EQ(run.trainer.buffer().size(), 1u);
  EXPECT_EQ(run.trainer.buffer()[0].slot, 1);
}

TEST(Trainer, RandomPhasePowersWithinBounds) {
  const ScenarioConfig c = toy();
  ToyRun run(c, 46, 10);
  run.trainer.train(8);
  for (const auto& r : run.trainer.records())
    for (int k = 0; k < 2; ++k) {
      EXPECT_GE(r.powers[k], c.power_floor()[k]);
      EXPECT_LE(r.powers[k], c.p_max()[k]);
    }
}

TEST(Trainer, SameSeedSameRun) {
  const ScenarioConfig c = toy();
  ToyRun a(c, 47, 60), b(c, 47, 60);
  a.trainer.train(40);
  b.trainer.train(40);
  const auto ta = a.trainer.test(10), tb = b.trainer.test(10);
  for (std::size_t i = 0; i < a.trainer.records().size(); ++i)
    EXPECT_EQ(a.trainer.records()[i].powers, b.trainer.records()[i].powers);
  for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(ta[i].powers, tb[i].powers);
  for (int k = 0; k < 2; ++k)
    EXPECT_EQ(a.trainer.actors().agents[k].actor, b.trainer.actors().agents[k].actor);
}

TEST(Trainer, TestStageUsesLocalNetsWithoutNoise) {
  const ScenarioConfig c = toy();
  ToyRun run(c, 48, 50);
  run.trainer.train(30);
  const Environment& env = run.trainer.environment();
  FeatureEncoder enc(c.p_max(), c.masc.feature_scale);
  const Observation obs = env.observation();
  const auto rec = run.trainer.test(1);
  for (int k = 0; k < 2; ++k) {
    const double mu = run.trainer.actors().agents[k].local.predict(enc.local(obs.states[k]))(0);
    EXPECT_DOUBLE_EQ(rec[0].powers[k], std::clamp(mu, c.power_floor()[k], c.p_max()[k]));
  }
}

TEST(Trainer, TrainingLogCsv) {
  ToyRun run(toy(), 49, 12);
  run.trainer.train(10);
  std::ostringstream out;
  write_training_log_csv(out, run.trainer.log());
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("slot,critic_loss", 0), 0u) << header;
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 10);
}

TEST(Trainer, CheckpointsWritten) {
  const auto dir = std::filesystem::temp_directory_path() / "hetnet_ckpt_test";
  std::filesystem::remove_all(dir);
  ToyRun run(toy(), 50, 12);
  run.trainer.set_checkpoints({dir, 5});
  run.trainer.train(10);
  EXPECT_TRUE(std::filesystem::exists(dir / "slot_5"));
  EXPECT_TRUE(std::filesystem::exists(dir / "slot_10"));
  std::filesystem::remove_all(dir);
}
