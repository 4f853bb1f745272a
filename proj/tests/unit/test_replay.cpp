#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "hetnet/channel.hpp"
#include "hetnet/error.hpp"
#include "hetnet/replay.hpp"

using namespace hetnet;

namespace {

GlobalExperience tagged(long slot) {
  GlobalExperience e;
  e.slot = slot;
  return e;
}

GainMatrix random_gains(int n, Rng& rng) {
  std::lognormal_distribution<double> g(0.0, 4.0);
  GainMatrix m;
  m.g.resize(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) m.g(k, j) = g(rng);
  return m;
}

}  // namespace

TEST(Reconstruction, RoundTripRandomInstances) {
  Rng rng(1);
  std::uniform_int_distribution<int> size(1, 9);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int n = size(rng);
    const GainMatrix prev = random_gains(n, rng), now = random_gains(n, rng);
    std::vector<double> p(n), floor(n, 1e-7);
    std::uniform_real_distribution<double> u(1e-7, 1.0);
    for (double& x : p) x = u(rng);
    const SlotRecord rec = make_slot_record(0, prev, p, 1.0, 1.0);
    std::vector<LocalState> s(n);
    std::vector<AuxiliaryInfo> aux(n);
    for (int k = 0; k < n; ++k) {
      s[k] = build_local_state(rec, now, k, 1.0, 1.0);
      aux[k] = build_aux_info(p, now, k);
    }
    const GainMatrix back = reconstruct_gain_matrix(s, aux, p, floor);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(back(k, j) - now(k, j)) / now(k, j));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Reconstruction, WorkedInstanceAndZeros) {
  GainMatrix now;
  now.g.resize(2, 2);
  now.g << 1.5, 0.2, 0.25, 5.0;
  const std::vector<double> p{2.0, 4.0}, floor{1e-6, 1e-6};
  std::vector<LocalState> s(2);
  s[0].g_own_now = 1.5;
  s[1].g_own_now = 5.0;
  std::vector<AuxiliaryInfo> aux{build_aux_info(p, now, 0), build_aux_info(p, now, 1)};
  EXPECT_DOUBLE_EQ(aux[0].from(1), 4.0 * 0.25);
  const GainMatrix g = reconstruct_gain_matrix(s, aux, p, floor);
  EXPECT_DOUBLE_EQ(g(1, 0), 0.25);
  aux[0].values[0] = 0.0;
  EXPECT_EQ(reconstruct_gain_matrix(s, aux, p, floor)(1, 0), 0.0);
}

TEST(Reconstruction, PowerBelowFloor) {
  std::vector<LocalState> s(2);
  std::vector<AuxiliaryInfo> aux{{0, {1.0}}, {1, {1.0}}};
  const std::vector<double> p{1e-9, 1.0}, floor{1e-6, 1e-6};
  try {
    reconstruct_gain_matrix(s, aux, p, floor);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Reconstruction);
  }
}

TEST(Assemble, SingleApAndMismatch) {
  LocalExperience e;
  e.s.g_own_now = 4.0;
  e.s.p_prev = 0.5;
  e.s_next.g_own_now = 6.0;
  e.s_next.p_prev = 0.7;
  e.a = 0.7;
  e.r = 1.5;
  e.slot = 3;
  const std::vector<LocalExperience> one{e};
  const std::vector<AuxiliaryInfo> aux{{0, {}}};
  const std::vector<double> floor{1e-6};
  const GlobalExperience g = assemble_global(one, aux, aux, floor);
  EXPECT_EQ(g.s_o(0, 0), 4.0);
  EXPECT_EQ(g.s_o_next(0, 0), 6.0);
  EXPECT_EQ(g.reward_sum, 1.5);
  EXPECT_EQ(g.slot, 3);

  LocalExperience other = e;
  other.slot = 4;
  const std::vector<LocalExperience> two{e, other};
  const std::vector<AuxiliaryInfo> aux2{{0, {0.1}}, {1, {0.1}}};
  const std::vector<double> floor2{1e-6, 1e-6};
  try {
    assemble_global(two, aux2, aux2, floor2);
    FAIL();
  } catch (const Error& e2) {
    EXPECT_EQ(e2.kind(), ErrorKind::Contract);
  }
}

TEST(Assemble, AgainstEnvironmentLog) {
  const ScenarioConfig c = two_layer_preset();
  ChannelProcess proc(c, 21);
  ProcessSource src(proc, c.channel.noise_power_w);
  Environment env({c.p_max(), c.power_floor(), c.channel.bandwidth_hz, 1.0}, src);
  Rng rng(2);
  env.reset(c.p_max());
  ExperienceAssembler asmb(5, c.power_floor());
  std::optional<Observation> prev;
  std::vector<double> prev_a;
  std::vector<SlotRecord> records;
  std::vector<GainMatrix> gains_at;  // G(t) for slot t
  for (int t = 0; t < 40; ++t) {
    const Observation obs = env.observation();
    gains_at.push_back(env.current_gains());
    std::vector<UplinkPayload> up(5);
    for (int k = 0; k < 5; ++k) {
      up[k] = {t, k, std::nullopt, obs.aux[k]};
      if (prev) up[k].experience = LocalExperience{prev->states[k], prev_a[k], obs.states[k].rate_prev,
                                                   obs.states[k], t};
    }
    const auto g = asmb.receive(up);
    EXPECT_EQ(g.has_value(), t > 0);
    if (g) {
      const SlotRecord& r = records[t - 1];
      EXPECT_NEAR(g->reward_sum, r.sum_rate / c.channel.bandwidth_hz, 1e-12 * g->reward_sum);
      EXPECT_TRUE(g->s_o.g.isApprox(gains_at[t - 1].g, 1e-12));
      EXPECT_TRUE(g->s_o_next.g.isApprox(gains_at[t].g, 1e-12));
      EXPECT_EQ(g->actions, prev_a);
    }
    std::vector<double> a(5);
    for (int k = 0; k < 5; ++k)
      a[k] = std::uniform_real_distribution<double>(c.power_floor()[k], c.p_max()[k])(rng);
    records.push_back(env.advance(a));
    prev = obs;
    prev_a = a;
  }
}

TEST(Assembler, IncompleteSlot) {
  ExperienceAssembler asmb(2, {1e-6, 1e-6});
  std::vector<UplinkPayload> only_one(1);
  only_one[0].aux = {0, {0.0}};
  try {
    asmb.receive(only_one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Incomplete);
  }
}

TEST(Buffer, FifoLaw) {
  ReplayBuffer b(1000);
  for (long i = 1; i <= 1001; ++i) b.push(tagged(i));
  ASSERT_EQ(b.size(), 1000u);
  EXPECT_EQ(b[0].slot, 2);
  EXPECT_EQ(b[999].slot, 1001);

  Rng rng(3);
  std::uniform_int_distribution<int> cap(1, 50), pushes(0, 200);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = cap(rng), k = pushes(rng);
    ReplayBuffer r(m);
    for (int i = 0; i < k; ++i) r.push(tagged(i));
    const int expect = std::min(m, k);
    ASSERT_EQ(static_cast<int>(r.size()), expect);
    for (int i = 0; i < expect; ++i) EXPECT_EQ(r[i].slot, k - expect + i);
  }
}

TEST(Buffer, SampleAllWhenExact) {
  ReplayBuffer b(10);
  for (long i = 0; i < 4; ++i) b.push(tagged(i));
  Rng rng(4);
  auto s = b.sample(4, rng);
  std::vector<long> got;
  for (auto* e : s) got.push_back(e->slot);
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, (std::vector<long>{0, 1, 2, 3}));
  try {
    b.sample(5, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(Buffer, SamplingUniformity) {
  const int m = 100, d = 10, draws = 100000;
  ReplayBuffer b(m);
  for (long i = 0; i < m; ++i) b.push(tagged(i));
  Rng rng(5);
  std::vector<int> hits(m, 0);
  for (int i = 0; i < draws; ++i) {
    const auto s = b.sample(d, rng);
    std::vector<bool> seen(m, false);
    for (auto* e : s) {
      EXPECT_FALSE(seen[e->slot]);
      seen[e->slot] = true;
      ++hits[e->slot];
    }
  }
  const double expect = static_cast<double>(draws) * d / m;
  for (int h : hits) EXPECT_NEAR(h / expect, 1.0, 0.05);
}

TEST(Buffer, ExperienceLogRow) {
  GlobalExperience e;
  e.slot = 7;
  e.states.resize(2);
  e.actions = {0.1, 0.2};
  e.reward_sum = 3.5;
  std::stringstream ss;
  write_experience_log(ss, std::vector<GlobalExperience>{e});
  const std::string text = ss.str();
  EXPECT_NE(text.find("slot"), std::string::npos);
  EXPECT_NE(text.find("3.5"), std::string::npos);
}
