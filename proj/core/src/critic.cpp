#include "hetnet/critic.hpp"

#include <algorithm>
#include <cmath>

#include <vector>

#include "hetnet/error.hpp"

namespace hetnet {

Critic::Critic(nn::Mlp state_module, nn::Mlp action_module, nn::Mlp mixed_module)
    : state_(std::move(state_module)),
      action_(std::move(action_module)),
      mixed_(std::move(mixed_module)) {
  require(mixed_.input_size() == state_.output_size() + action_.output_size(), ErrorKind::Shape,
          "Critic: mixed module width must equal concatenated module outputs");
  require(mixed_.output_size() == 1, ErrorKind::Shape, "Critic: output must be scalar");
}

Critic Critic::create(int aps, const MascParams& params, Rng& rng) {
  using nn::Activation;
  std::vector<int> s_sizes{7 * aps + aps * aps};
  std::vector<Activation> s_acts;
  for (std::size_t i = 0; i < params.critic_state_hidden.size(); ++i) {
    s_sizes.push_back(params.critic_state_hidden[i]);
    const bool last = i + 1 == params.critic_state_hidden.size();
    s_acts.push_back(last ? Activation::linear() : Activation::relu());
  }
  const std::vector<int> a_sizes{aps, params.critic_action_hidden};
  const std::vector<Activation> a_acts{Activation::linear()};
  const std::vector<int> m_sizes{s_sizes.back() + params.critic_action_hidden,
                                 params.critic_mixed_hidden, 1};
  const std::vector<Activation> m_acts{Activation::relu(), Activation::linear()};

  nn::Mlp s = nn::mlp_init(s_sizes, s_acts, rng);
  nn::Mlp a = nn::mlp_init(a_sizes, a_acts, rng);
  nn::Mlp m = nn::mlp_init(m_sizes, m_acts, rng);
  return Critic(std::move(s), std::move(a), std::move(m));
}

nn::Matrix Critic::forward(const nn::Matrix& states, const nn::Matrix& actions, Cache& cache) const {
  require(states.cols() == actions.cols(), ErrorKind::Shape, "Critic: batch size mismatch");
  const nn::Matrix hs = state_.forward(states, cache.state);
  const nn::Matrix ha = action_.forward(actions, cache.action);
  nn::Matrix joined(hs.rows() + ha.rows(), hs.cols());
  joined.topRows(hs.rows()) = hs;
  joined.bottomRows(ha.rows()) = ha;
  return mixed_.forward(joined, cache.mixed);
}

nn::Matrix Critic::predict(const nn::Matrix& states, const nn::Matrix& actions) const {
  require(states.cols() == actions.cols(), ErrorKind::Shape, "Critic: batch size mismatch");
  const nn::Matrix hs = state_.predict(states);
  const nn::Matrix ha = action_.predict(actions);
  nn::Matrix joined(hs.rows() + ha.rows(), hs.cols());
  joined.topRows(hs.rows()) = hs;
  joined.bottomRows(ha.rows()) = ha;
  return mixed_.predict(joined);
}

Critic::Gradients Critic::backward(const Cache& cache, const nn::Matrix& dq, bool want_params) const {
  Gradients g;
  nn::BackwardResult m = nn::mlp_backward(mixed_, cache.mixed, dq, want_params);
  const int hs = state_.output_size();
  const int ha = action_.output_size();
  nn::BackwardResult a = nn::mlp_backward(action_, cache.action, m.input_gradient.bottomRows(ha),
                                          want_params);
  if (want_params) {
    nn::BackwardResult s = nn::mlp_backward(state_, cache.state, m.input_gradient.topRows(hs), true);
    g.state = std::move(s.params);
    g.action = std::move(a.params);
    g.mixed = std::move(m.params);
  }
  g.action_input = std::move(a.input_gradient);
  return g;
}

bool Critic::same_topology(const Critic& other) const {
  return state_.same_topology(other.state_) && action_.same_topology(other.action_) &&
         mixed_.same_topology(other.mixed_);
}

CriticOptimizer CriticOptimizer::for_critic(const Critic& critic, double learning_rate) {
  return {nn::AdamState::for_net(critic.state_module(), learning_rate),
          nn::AdamState::for_net(critic.action_module(), learning_rate),
          nn::AdamState::for_net(critic.mixed_module(), learning_rate)};
}

void CriticOptimizer::step(Critic& critic, const Critic::Gradients& grads) {
  require(grads.all_finite(), ErrorKind::Numeric, "critic step: non-finite gradient");
  nn::adam_step(critic.state_module(), grads.state, state);
  nn::adam_step(critic.action_module(), grads.action, action);
  nn::adam_step(critic.mixed_module(), grads.mixed, mixed);
}

void soft_update(Critic& target, const Critic& online, double tau) {
  require(target.same_topology(online), ErrorKind::Shape, "soft_update: critic topology mismatch");
  nn::soft_update(target.state_module(), online.state_module(), tau);
  nn::soft_update(target.action_module(), online.action_module(), tau);
  nn::soft_update(target.mixed_module(), online.mixed_module(), tau);
}

namespace {

double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
}

// Perturbs every parameter of `net` in place, comparing with `analytic`.
template <typename Objective>
double check_module(nn::Mlp& net, const nn::Gradients& analytic, double eps, Objective objective) {
  double worst = 0.0;
  auto probe = [&](double& x, double expect) {
    const double saved = x;
    x = saved + eps;
    const double up = objective();
    x = saved - eps;
    const double down = objective();
    x = saved;
    worst = std::max(worst, rel_error(expect, (up - down) / (2 * eps)));
  };
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].trainable()) continue;
    for (int r = 0; r < layers[i].weight.rows(); ++r) {
      for (int c = 0; c < layers[i].weight.cols(); ++c)
        probe(layers[i].weight(r, c), analytic.weight[i](r, c));
      probe(layers[i].bias(r), analytic.bias[i](r));
    }
  }
  return worst;
}

}  // namespace

double gradient_check(const Critic& critic, const nn::Matrix& states, const nn::Matrix& actions,
                      double epsilon) {
  require(epsilon >= 1e-8 && epsilon <= 1e-3, ErrorKind::Domain,
          "gradient_check: epsilon outside [1e-8, 1e-3]");
  Critic::Cache cache;
  const nn::Matrix q = critic.forward(states, actions, cache);
  const Critic::Gradients g = critic.backward(cache, nn::Matrix::Ones(1, q.cols()));

  Critic probe = critic;
  nn::Matrix a = actions;
  auto objective = [&] { return probe.predict(states, a).sum(); };
  double worst = check_module(probe.state_module(), g.state, epsilon, objective);
  worst = std::max(worst, check_module(probe.action_module(), g.action, epsilon, objective));
  worst = std::max(worst, check_module(probe.mixed_module(), g.mixed, epsilon, objective));
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) {
      const double saved = a(r, c);
      a(r, c) = saved + epsilon;
      const double up = objective();
      a(r, c) = saved - epsilon;
      const double down = objective();
      a(r, c) = saved;
      worst = std::max(worst, rel_error(g.action_input(r, c), (up - down) / (2 * epsilon)));
    }
  }
  return worst;
}

}  // namespace hetnet
