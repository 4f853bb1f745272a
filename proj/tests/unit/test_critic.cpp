#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hetnet/critic.hpp"
#include "hetnet/error.hpp"
#include "hetnet/scenario.hpp"

using namespace hetnet;

namespace {

MascParams small_params() {
  MascParams p;
  p.critic_state_hidden = {6, 5};
  p.critic_action_hidden = 4;
  p.critic_mixed_hidden = 5;
  return p;
}

nn::Matrix uniform(int rows, int cols, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  nn::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

}  // namespace

TEST(Critic, InputWidthsFollowApCount) {
  Rng rng(3);
  for (int n : {1, 2, 3, 5}) {
    const Critic c = Critic::create(n, MascParams{}, rng);
    EXPECT_EQ(c.state_width(), 7 * n + n * n);
    EXPECT_EQ(c.action_width(), n);
    EXPECT_EQ(c.mixed_module().output_size(), 1);
  }
}

TEST(Critic, OutputIsOneRowPerBatch) {
  Rng rng(4);
  const Critic c = Critic::create(2, small_params(), rng);
  const nn::Matrix q = c.predict(uniform(18, 7, -1, 1, rng), uniform(2, 7, 0, 1, rng));
  EXPECT_EQ(q.rows(), 1);
  EXPECT_EQ(q.cols(), 7);
}

TEST(Critic, BatchColumnsAreIndependent) {
  Rng rng(5);
  const Critic c = Critic::create(3, small_params(), rng);
  const nn::Matrix s = uniform(30, 4, -1, 1, rng), a = uniform(3, 4, 0, 1, rng);
  const nn::Matrix all = c.predict(s, a);
  for (int j = 0; j < 4; ++j)
    EXPECT_NEAR(c.predict(s.col(j), a.col(j))(0, 0), all(0, j), 1e-12);
}

TEST(Critic, GradientCheckSmallTopologies) {
  Rng rng(6);
  for (int n : {1, 2, 3}) {
    const Critic c = Critic::create(n, small_params(), rng);
    const nn::Matrix s = uniform(7 * n + n * n, 3, -2, 2, rng), a = uniform(n, 3, 0, 1, rng);
    EXPECT_LT(gradient_check(c, s, a, 1e-5), 1e-4) << "n=" << n;
  }
}

TEST(Critic, ActionInputGradientWithoutParams) {
  Rng rng(7);
  const Critic c = Critic::create(2, small_params(), rng);
  const nn::Matrix s = uniform(18, 5, -1, 1, rng), a = uniform(2, 5, 0, 1, rng);
  Critic::Cache cache;
  const nn::Matrix q = c.forward(s, a, cache);
  const nn::Matrix dq = nn::Matrix::Ones(1, q.cols());
  const auto full = c.backward(cache, dq);
  const auto lean = c.backward(cache, dq, false);
  EXPECT_TRUE(full.action_input.isApprox(lean.action_input, 1e-14));
}

TEST(Critic, ShapeMismatchRaises) {
  Rng rng(8);
  const Critic c = Critic::create(2, small_params(), rng);
  try {
    c.predict(uniform(18, 3, 0, 1, rng), uniform(2, 4, 0, 1, rng));
    FAIL() << "expected Shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Critic, SoftUpdateInterpolates) {
  Rng rng(9);
  const Critic online = Critic::create(2, small_params(), rng);
  Critic target = Critic::create(2, small_params(), rng);
  const Critic before = target;
  soft_update(target, online, 0.25);
  const auto& w0 = before.mixed_module().layers()[0].weight;
  const auto& w1 = online.mixed_module().layers()[0].weight;
  EXPECT_TRUE(target.mixed_module().layers()[0].weight.isApprox(0.75 * w0 + 0.25 * w1, 1e-14));
  soft_update(target, online, 1.0);
  EXPECT_EQ(target, online);
}

TEST(Critic, OptimizerReducesFixedRegression) {
  Rng rng(10);
  Critic c = Critic::create(2, small_params(), rng);
  auto opt = CriticOptimizer::for_critic(c, 1e-2);
  const nn::Matrix s = uniform(18, 16, -1, 1, rng), a = uniform(2, 16, 0, 1, rng);
  const nn::Matrix y = a.colwise().sum();
  auto loss = [&] { return (c.predict(s, a) - y).squaredNorm() / 16.0; };
  const double start = loss();
  for (int i = 0; i < 300; ++i) {
    Critic::Cache cache;
    const nn::Matrix q = c.forward(s, a, cache);
    opt.step(c, c.backward(cache, (q - y) * (2.0 / 16.0)));
  }
  EXPECT_LT(loss(), 0.1 * start);
}

TEST(Critic, NonFiniteGradientLeavesWeights) {
  Rng rng(11);
  Critic c = Critic::create(2, small_params(), rng);
  auto opt = CriticOptimizer::for_critic(c, 1e-3);
  const Critic before = c;
  Critic::Cache cache;
  const nn::Matrix q = c.forward(uniform(18, 2, 0, 1, rng), uniform(2, 2, 0, 1, rng), cache);
  auto g = c.backward(cache, nn::Matrix::Ones(1, q.cols()));
  g.mixed.weight[0](0, 0) = std::nan("");
  EXPECT_THROW(opt.step(c, g), Error);
  EXPECT_EQ(c, before);
}
