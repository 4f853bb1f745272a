#include <vector>

#include <benchmark/benchmark.h>

#include "hetnet/baselines.hpp"
#include "hetnet/channel.hpp"
#include "hetnet/masc.hpp"

using namespace hetnet;

namespace {

nn::Matrix uniform(int rows, int cols, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  nn::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

std::vector<GlobalExperience> experiences(const ScenarioConfig& c, int count, Rng& rng) {
  const int n = c.num_aps();
  std::uniform_real_distribution<double> u(0.01, 5.0);
  auto state = [&] { return LocalState{u(rng), u(rng) / 5, u(rng), u(rng), u(rng), u(rng), u(rng)}; };
  std::vector<GlobalExperience> out(count);
  for (auto& e : out) {
    for (int k = 0; k < n; ++k) {
      e.states.push_back(state());
      e.next_states.push_back(state());
      e.actions.push_back(u(rng) / 5 * c.p_max()[k]);
    }
    e.s_o.g = uniform(n, n, 0.1, 100, rng);
    e.s_o_next.g = uniform(n, n, 0.1, 100, rng);
    e.reward_sum = u(rng);
  }
  return out;
}

ScenarioConfig scenario(int which) { return which == 2 ? two_layer_preset() : three_layer_preset(); }

}  // namespace

static void BM_LocalForward(benchmark::State& st) {
  const ScenarioConfig c = two_layer_preset();
  Rng rng(1);
  const nn::Mlp net = make_actor_network(c.masc, 0.2, rng);
  const nn::Vector x = uniform(7, 1, -2, 2, rng);
  for (auto _ : st) benchmark::DoNotOptimize(net.predict(x));
}
BENCHMARK(BM_LocalForward);

static void BM_TrainingSlot(benchmark::State& st) {
  const ScenarioConfig c = scenario(static_cast<int>(st.range(0)));
  Rng rng(2);
  ActorSet actors = ActorSet::create(c, rng);
  CriticPair critic = CriticPair::create(c, rng);
  const FeatureEncoder enc(c.p_max(), c.masc.feature_scale);
  const auto pool = experiences(c, c.timeline.D, rng);
  std::vector<const GlobalExperience*> ptr;
  for (const auto& e : pool) ptr.push_back(&e);
  for (auto _ : st) {
    const Batch b = make_batch(ptr, enc);
    const nn::Vector y = compute_critic_targets(b, actors, critic.target, c.masc.eta, enc);
    update_critic(critic, b, y);
    update_actors(actors, critic.online, b, enc, c.masc.other_actions);
    sync_targets(actors, critic, c.masc.tau_actor, c.masc.tau_critic);
  }
}
BENCHMARK(BM_TrainingSlot)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_Solver(benchmark::State& st, bool fp) {
  const ScenarioConfig c = scenario(static_cast<int>(st.range(0)));
  const auto trace = generate_trace(c, 3, 64);
  const auto p_max = c.p_max();
  std::size_t i = 0;
  for (auto _ : st) {
    const GainMatrix& g = trace.gains[i++ % trace.gains.size()];
    benchmark::DoNotOptimize(fp ? fp_solve(g, 1.0, p_max) : wmmse_solve(g, 1.0, p_max));
  }
}
BENCHMARK_CAPTURE(BM_Solver, wmmse, false)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Solver, fp, true)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

static void BM_GridOracle(benchmark::State& st) {
  ScenarioConfig c = two_layer_preset();
  c.aps.resize(3);
  const GainMatrix g = generate_trace(c, 4, 1).gains[0];
  const auto p_max = c.p_max();
  for (auto _ : st) benchmark::DoNotOptimize(grid_oracle(g, 1.0, p_max, 101));
}
BENCHMARK(BM_GridOracle)->Unit(benchmark::kMillisecond);

static void BM_ChannelStep(benchmark::State& st) {
  const ScenarioConfig c = scenario(static_cast<int>(st.range(0)));
  ChannelProcess proc(c, 5);
  for (auto _ : st) benchmark::DoNotOptimize(proc.next());
}
BENCHMARK(BM_ChannelStep)->Arg(2)->Arg(3);
BENCHMARK_MAIN();
