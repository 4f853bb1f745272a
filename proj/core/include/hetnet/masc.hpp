#pragma once

// Multiple-actor-shared-critic power control.
//
// Each AP runs a local policy network on its own observation. In the core
// network every AP has an actor (same topology as its local net) and a target
// actor; one critic and its target score global state-action pairs. Local
// experiences reach the core after T_d slots, actor weights travel back every
// T_u slots with the same delay.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hetnet/critic.hpp"
#include "hetnet/environment.hpp"
#include "hetnet/nn.hpp"
#include "hetnet/replay.hpp"
#include "hetnet/scenario.hpp"

namespace hetnet {

struct Agent {
  nn::Mlp local;
  nn::Mlp actor;
  nn::Mlp target;
  nn::AdamState adam;
  double p_max = 1.0;
  double p_floor = 1e-6;
};

// 7 -> hidden... (relu) -> 1 (sigmoid) -> 1 (scale by p_max).
nn::Mlp make_actor_network(const MascParams& params, double p_max, Rng& rng);

struct ActorSet {
  std::vector<Agent> agents;

  static ActorSet create(const ScenarioConfig& config, Rng& rng);
  int size() const { return static_cast<int>(agents.size()); }
};

struct CriticPair {
  Critic online;
  Critic target;
  CriticOptimizer optimizer;

  static CriticPair create(const ScenarioConfig& config, Rng& rng);
};

struct NoiseSchedule {
  double initial_variance = 2.0;
  double decay = 0.9995;
  double floor_std = 0.01;

  // max(floor, sqrt(initial_variance) * decay^slot), in units of p_max.
  double stddev(long slot) const;
};

struct TrainerClock {
  int T_d = 50;
  int D = 128;
  int T_u = 100;

  long first_update_slot() const { return T_d + D; }
  long first_replacement_slot() const { return 2L * T_d + D + T_u; }
  bool random_phase(long slot) const { return slot <= first_update_slot(); }
};

// Maps raw observations to network inputs: dB-mapped local states (scaled by
// feature_scale), the global state vector [s_1..s_N, f(G)] and actions as
// fractions of p_max.
class FeatureEncoder {
 public:
  FeatureEncoder(std::vector<double> p_max, double feature_scale);

  int aps() const { return static_cast<int>(p_max_.size()); }
  int state_width() const { return 7 * aps() + aps() * aps(); }

  nn::Vector local(const LocalState& s) const;
  void local_into(const LocalState& s, nn::Matrix& out, int col) const;
  void global_into(std::span<const LocalState> states, const GainMatrix& gains, nn::Matrix& out,
                   int col) const;
  double action(int n, double watts) const { return watts / p_max_[n]; }

 private:
  std::vector<double> p_max_;
  double scale_;
};

// Exploring: clip(mu(s) + zeta * p_max, floor, p_max), zeta ~ N(0, std(slot)^2).
// Not exploring: clip(mu(s), floor, p_max) with no randomness.
double select_action(const nn::Mlp& local_net, const nn::Vector& features,
                     const NoiseSchedule& noise, long slot, Rng& rng, bool explore, double p_max,
                     double p_floor);

// One minibatch laid out as network inputs.
struct Batch {
  nn::Matrix states;        // state_width x D
  nn::Matrix actions;       // N x D (fractions of p_max)
  nn::Vector rewards;       // D, bps/Hz
  nn::Matrix next_states;   // state_width x D
  std::vector<nn::Matrix> local;       // per AP: 7 x D
  std::vector<nn::Matrix> local_next;  // per AP: 7 x D

  int size() const { return static_cast<int>(rewards.size()); }
};

Batch make_batch(std::span<const GlobalExperience* const> experiences, const FeatureEncoder& enc);

// y = R + eta * Q^-(s', mu^-(s')) for every experience; the task is continuing
// so every target bootstraps.
nn::Vector compute_critic_targets(const Batch& batch, const ActorSet& actors, const Critic& target,
                                  double eta, const FeatureEncoder& enc);

struct CriticUpdate {
  double loss = 0.0;  // mean squared residual before the step
  bool applied = false;
};

// One Adam step on mean((y - Q)^2). Skips the step when loss or gradients are
// not finite.
CriticUpdate update_critic(CriticPair& critic, const Batch& batch, const nn::Vector& targets);

struct ActorUpdate {
  double mean_q = 0.0;                // batch-mean Q at the pre-step actions
  std::vector<double> mean_action;    // batch-mean actor output per AP, watts
  int skipped = 0;                    // actors whose step was skipped
};

// Deterministic policy gradient step for every actor, ascending batch-mean Q.
ActorUpdate update_actors(ActorSet& actors, const Critic& critic, const Batch& batch,
                          const FeatureEncoder& enc, OtherActions mode);

void sync_targets(ActorSet& actors, CriticPair& critic, double tau_actor, double tau_critic);

struct TrainingLogRow {
  long slot = 0;
  double critic_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> mean_action;  // batch-mean actor output per AP; NaN before training
  double sum_rate = 0.0;            // bps
};

struct TrainerEvents {
  std::optional<long> first_update;
  std::vector<long> update_slots;
  std::vector<long> push_slots;
  std::vector<long> replacement_slots;
};

struct Diagnostics {
  long critic_skips = 0;
  long actor_skips = 0;
  long updates = 0;
};

struct CheckpointOptions {
  std::filesystem::path directory;
  long interval = 0;  // slots between checkpoints; 0 disables
};

// Slot-by-slot training against an environment it owns.
class Trainer {
 public:
  Trainer(const ScenarioConfig& config, std::uint64_t trial_seed, GainSource& source);

  // Advances `slots` training slots, appending to records() and log().
  void train(int slots);
  // Noise-free execution with the local networks; no uploads, no learning.
  std::vector<SlotRecord> test(int slots);

  void set_checkpoints(CheckpointOptions options) { checkpoints_ = std::move(options); }

  const ActorSet& actors() const { return actors_; }
  ActorSet& actors() { return actors_; }
  const CriticPair& critic() const { return critic_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const TrainerEvents& events() const { return events_; }
  const Diagnostics& diagnostics() const { return diag_; }
  const std::vector<SlotRecord>& records() const { return records_; }
  const std::vector<TrainingLogRow>& log() const { return log_; }
  const Environment& environment() const { return env_; }
  const TrainerClock& clock() const { return clock_; }

 private:
  struct WeightSnapshot {
    std::vector<nn::Mlp> actors;
  };

  void train_step(TrainingLogRow& row);

  ScenarioConfig config_;
  FeatureEncoder encoder_;
  TrainerClock clock_;
  NoiseSchedule noise_;
  Rng init_rng_;
  Rng explore_rng_;
  Rng sample_rng_;
  Rng random_rng_;
  ActorSet actors_;
  CriticPair critic_;
  Environment env_;
  ReplayBuffer buffer_;
  ExperienceAssembler assembler_;
  DelayLine<std::vector<UplinkPayload>> uplink_;
  DelayLine<WeightSnapshot> downlink_;
  std::optional<Observation> prev_obs_;
  std::vector<double> prev_actions_;
  std::vector<double> prev_rewards_;
  TrainerEvents events_;
  Diagnostics diag_;
  CheckpointOptions checkpoints_;
  std::vector<SlotRecord> records_;
  std::vector<TrainingLogRow> log_;
};

struct TrainingResult {
  ActorSet actors;
  std::vector<SlotRecord> records;
  std::vector<TrainingLogRow> log;
  TrainerEvents events;
  Diagnostics diagnostics;
};

TrainingResult run_training(const ScenarioConfig& config, std::uint64_t trial_seed,
                            GainSource& source);

// Noise-free execution of trained local networks on an environment whose
// observation is current.
std::vector<SlotRecord> run_testing(const ActorSet& actors, const FeatureEncoder& enc,
                                    Environment& env, int slots);

void write_training_log_csv(std::ostream& out, std::span<const TrainingLogRow> rows);

// One text file per network: local_n, actor_n, target_actor_n, critic_*.
void save_checkpoint(const std::filesystem::path& directory, const ActorSet& actors,
                     const CriticPair& critic);

}  // namespace hetnet
