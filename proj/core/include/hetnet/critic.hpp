#pragma once

#include "hetnet/nn.hpp"
#include "hetnet/scenario.hpp"

namespace hetnet {

// Shared critic Q(global state, global action). A state module and an action
// module feed a mixed module through concatenation of their last layers.
class Critic {
 public:
  struct Cache {
    nn::ForwardCache state;
    nn::ForwardCache action;
    nn::ForwardCache mixed;
  };

  struct Gradients {
    nn::Gradients state;
    nn::Gradients action;
    nn::Gradients mixed;
    nn::Matrix action_input;  // dQ/d(action input), N x batch

    bool all_finite() const {
      return state.all_finite() && action.all_finite() && mixed.all_finite();
    }
  };

  Critic() = default;
  Critic(nn::Mlp state_module, nn::Mlp action_module, nn::Mlp mixed_module);

  // State module: (7N + N^2) -> hidden... (relu, last linear); action module:
  // N -> action_hidden (linear); mixed: concat -> mixed_hidden (relu) -> 1.
  static Critic create(int aps, const MascParams& params, Rng& rng);

  int state_width() const { return state_.input_size(); }
  int action_width() const { return action_.input_size(); }

  // Returns Q as a 1 x batch row.
  nn::Matrix forward(const nn::Matrix& states, const nn::Matrix& actions, Cache& cache) const;
  nn::Matrix predict(const nn::Matrix& states, const nn::Matrix& actions) const;

  // Gradients of sum(Q .* dq). Parameter gradients are skipped when
  // `want_params` is false; the action-input gradient is always produced.
  Gradients backward(const Cache& cache, const nn::Matrix& dq, bool want_params = true) const;

  const nn::Mlp& state_module() const { return state_; }
  const nn::Mlp& action_module() const { return action_; }
  const nn::Mlp& mixed_module() const { return mixed_; }
  nn::Mlp& state_module() { return state_; }
  nn::Mlp& action_module() { return action_; }
  nn::Mlp& mixed_module() { return mixed_; }

  bool same_topology(const Critic& other) const;
  bool operator==(const Critic& other) const = default;

 private:
  nn::Mlp state_;
  nn::Mlp action_;
  nn::Mlp mixed_;
};

struct CriticOptimizer {
  nn::AdamState state;
  nn::AdamState action;
  nn::AdamState mixed;

  static CriticOptimizer for_critic(const Critic& critic, double learning_rate);
  // Numeric error (no parameter touched) on any non-finite gradient.
  void step(Critic& critic, const Critic::Gradients& grads);
};

void soft_update(Critic& target, const Critic& online, double tau);

// Central-difference check of sum(Q) over every parameter of all three modules
// and every action input; same error measure as nn::gradient_check.
double gradient_check(const Critic& critic, const nn::Matrix& states, const nn::Matrix& actions,
                      double epsilon);

}  // namespace hetnet
