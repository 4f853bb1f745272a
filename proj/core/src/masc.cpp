#include "hetnet/masc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include "hetnet/csv.hpp"
#include "hetnet/error.hpp"

namespace hetnet {

nn::Mlp make_actor_network(const MascParams& params, double p_max, Rng& rng) {
  std::vector<int> sizes{LocalState::kSize};
  std::vector<nn::Activation> acts;
  for (int h : params.actor_hidden) {
    sizes.push_back(h);
    acts.push_back(nn::Activation::relu());
  }
  sizes.push_back(1);
  acts.push_back(nn::Activation::sigmoid());
  sizes.push_back(1);
  acts.push_back(nn::Activation::scale(p_max));
  return nn::mlp_init(sizes, acts, rng);
}

ActorSet ActorSet::create(const ScenarioConfig& config, Rng& rng) {
  const auto p_max = config.p_max();
  const auto floor = config.power_floor();
  ActorSet set;
  set.agents.reserve(p_max.size());
  for (std::size_t n = 0; n < p_max.size(); ++n) {
    Agent a;
    a.local = make_actor_network(config.masc, p_max[n], rng);
    a.actor = make_actor_network(config.masc, p_max[n], rng);
    a.target = a.actor;
    a.adam = nn::AdamState::for_net(a.actor, config.masc.actor_lr);
    a.p_max = p_max[n];
    a.p_floor = floor[n];
    set.agents.push_back(std::move(a));
  }
  return set;
}

CriticPair CriticPair::create(const ScenarioConfig& config, Rng& rng) {
  CriticPair pair;
  pair.online = Critic::create(config.num_aps(), config.masc, rng);
  pair.target = pair.online;
  pair.optimizer = CriticOptimizer::for_critic(pair.online, config.masc.critic_lr);
  return pair;
}

double NoiseSchedule::stddev(long slot) const {
  const double t = static_cast<double>(std::max(0L, slot));
  return std::max(floor_std, std::sqrt(initial_variance) * std::pow(decay, t));
}

FeatureEncoder::FeatureEncoder(std::vector<double> p_max, double feature_scale)
    : p_max_(std::move(p_max)), scale_(feature_scale) {
  require(!p_max_.empty(), ErrorKind::Config, "FeatureEncoder: no APs");
  require(feature_scale > 0.0 && std::isfinite(feature_scale), ErrorKind::Config,
          "FeatureEncoder: feature_scale must be positive");
}

nn::Vector FeatureEncoder::local(const LocalState& s) const {
  nn::Matrix m(LocalState::kSize, 1);
  local_into(s, m, 0);
  return m.col(0);
}

void FeatureEncoder::local_into(const LocalState& s, nn::Matrix& out, int col) const {
  const auto f = preprocess_local_state(s);
  for (int i = 0; i < LocalState::kSize; ++i) out(i, col) = scale_ * f[i];
}

void FeatureEncoder::global_into(std::span<const LocalState> states, const GainMatrix& gains,
                                 nn::Matrix& out, int col) const {
  const int n = aps();
  require(static_cast<int>(states.size()) == n && gains.size() == n, ErrorKind::Shape,
          "FeatureEncoder: global state size mismatch");
  for (int k = 0; k < n; ++k) {
    const auto f = preprocess_local_state(states[k]);
    for (int i = 0; i < LocalState::kSize; ++i) out(k * LocalState::kSize + i, col) = scale_ * f[i];
  }
  const int base = LocalState::kSize * n;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) out(base + k * n + j, col) = scale_ * feature_map(gains(k, j));
}

double select_action(const nn::Mlp& local_net, const nn::Vector& features,
                     const NoiseSchedule& noise, long slot, Rng& rng, bool explore, double p_max,
                     double p_floor) {
  double a = local_net.predict(features)(0);
  if (explore) {
    std::normal_distribution<double> zeta(0.0, noise.stddev(slot));
    a += zeta(rng) * p_max;
  }
  if (!std::isfinite(a)) a = p_floor;
  return std::clamp(a, p_floor, p_max);
}

Batch make_batch(std::span<const GlobalExperience* const> experiences, const FeatureEncoder& enc) {
  require(!experiences.empty(), ErrorKind::Contract, "make_batch: empty batch");
  const int d = static_cast<int>(experiences.size());
  const int n = enc.aps();
  Batch b;
  b.states.resize(enc.state_width(), d);
  b.next_states.resize(enc.state_width(), d);
  b.actions.resize(n, d);
  b.rewards.resize(d);
  b.local.assign(n, nn::Matrix(LocalState::kSize, d));
  b.local_next.assign(n, nn::Matrix(LocalState::kSize, d));
  for (int j = 0; j < d; ++j) {
    const GlobalExperience& e = *experiences[j];
    require(static_cast<int>(e.states.size()) == n && static_cast<int>(e.actions.size()) == n,
            ErrorKind::Shape, "make_batch: experience size mismatch");
    enc.global_into(e.states, e.s_o, b.states, j);
    enc.global_into(e.next_states, e.s_o_next, b.next_states, j);
    for (int k = 0; k < n; ++k) {
      b.actions(k, j) = enc.action(k, e.actions[k]);
      enc.local_into(e.states[k], b.local[k], j);
      enc.local_into(e.next_states[k], b.local_next[k], j);
    }
    b.rewards(j) = e.reward_sum;
  }
  return b;
}

namespace {

nn::Matrix actor_actions(const ActorSet& actors, const std::vector<nn::Matrix>& local, bool target,
                         const FeatureEncoder& enc) {
  const int n = actors.size();
  nn::Matrix out(n, local.front().cols());
  for (int k = 0; k < n; ++k) {
    const Agent& a = actors.agents[k];
    const nn::Matrix y = (target ? a.target : a.actor).predict(local[k]);
    for (int j = 0; j < y.cols(); ++j) out(k, j) = enc.action(k, y(0, j));
  }
  return out;
}

}  // namespace

nn::Vector compute_critic_targets(const Batch& batch, const ActorSet& actors, const Critic& target,
                                  double eta, const FeatureEncoder& enc) {
  require(batch.size() > 0, ErrorKind::Contract, "compute_critic_targets: empty batch");
  const nn::Matrix next_actions = actor_actions(actors, batch.local_next, true, enc);
  const nn::Matrix q = target.predict(batch.next_states, next_actions);
  return batch.rewards + eta * q.row(0).transpose();
}

CriticUpdate update_critic(CriticPair& critic, const Batch& batch, const nn::Vector& targets) {
  require(targets.size() == batch.size(), ErrorKind::Shape, "update_critic: target size mismatch");
  Critic::Cache cache;
  const nn::Matrix q = critic.online.forward(batch.states, batch.actions, cache);
  const nn::Matrix residual = q - targets.transpose();
  CriticUpdate out;
  out.loss = residual.squaredNorm() / static_cast<double>(batch.size());
  if (!std::isfinite(out.loss)) return out;
  const nn::Matrix dq = residual * (2.0 / static_cast<double>(batch.size()));
  const Critic::Gradients grads = critic.online.backward(cache, dq);
  if (!grads.all_finite()) return out;
  critic.optimizer.step(critic.online, grads);
  out.applied = true;
  return out;
}

ActorUpdate update_actors(ActorSet& actors, const Critic& critic, const Batch& batch,
                          const FeatureEncoder& enc, OtherActions mode) {
  const int n = actors.size();
  const int d = batch.size();
  require(n == enc.aps(), ErrorKind::Shape, "update_actors: AP count mismatch");

  std::vector<nn::ForwardCache> caches(n);
  nn::Matrix actions(n, d);
  for (int k = 0; k < n; ++k) {
    const Agent& a = actors.agents[k];
    actions.row(k) = a.actor.forward(batch.local[k], caches[k]).row(0) / a.p_max;
  }

  ActorUpdate out;
  out.mean_action.resize(n);
  for (int k = 0; k < n; ++k) out.mean_action[k] = actions.row(k).mean() * actors.agents[k].p_max;

  const nn::Matrix dq = nn::Matrix::Constant(1, d, -1.0 / static_cast<double>(d));
  std::vector<nn::Matrix> action_grad(n);
  if (mode == OtherActions::Online) {
    Critic::Cache cache;
    const nn::Matrix q = critic.forward(batch.states, actions, cache);
    out.mean_q = q.mean();
    const Critic::Gradients g = critic.backward(cache, dq, false);
    for (int k = 0; k < n; ++k) action_grad[k] = g.action_input.row(k);
  } else {
    {
      const nn::Matrix q = critic.predict(batch.states, actions);
      out.mean_q = q.mean();
    }
    for (int k = 0; k < n; ++k) {
      nn::Matrix mixed = batch.actions;
      mixed.row(k) = actions.row(k);
      Critic::Cache cache;
      critic.forward(batch.states, mixed, cache);
      const Critic::Gradients g = critic.backward(cache, dq, false);
      action_grad[k] = g.action_input.row(k);
    }
  }

  for (int k = 0; k < n; ++k) {
    Agent& a = actors.agents[k];
    // Critic sees a / p_max.
    const nn::Matrix upstream = action_grad[k] / a.p_max;
    const nn::BackwardResult br = nn::mlp_backward(a.actor, caches[k], upstream);
    if (!br.params.all_finite()) {
      ++out.skipped;
      continue;
    }
    nn::adam_step(a.actor, br.params, a.adam);
  }
  return out;
}

void sync_targets(ActorSet& actors, CriticPair& critic, double tau_actor, double tau_critic) {
  for (Agent& a : actors.agents) nn::soft_update(a.target, a.actor, tau_actor);
  soft_update(critic.target, critic.online, tau_critic);
}

namespace {

EnvParams env_params(const ScenarioConfig& config) {
  EnvParams p;
  p.p_max = config.p_max();
  p.p_floor = config.power_floor();
  p.bandwidth_hz = config.channel.bandwidth_hz;
  p.noise = 1.0;
  return p;
}

std::vector<double> random_powers(const std::vector<double>& p_max, const std::vector<double>& floor,
                                  Rng& rng) {
  std::vector<double> out(p_max.size());
  for (std::size_t n = 0; n < p_max.size(); ++n) {
    std::uniform_real_distribution<double> u(floor[n], p_max[n]);
    out[n] = u(rng);
  }
  return out;
}

}  // namespace

Trainer::Trainer(const ScenarioConfig& config, std::uint64_t trial_seed, GainSource& source)
    : config_(config),
      encoder_(config.p_max(), config.masc.feature_scale),
      clock_{config.timeline.T_d, config.timeline.D, config.timeline.T_u},
      noise_{config.masc.noise_initial_variance, config.masc.noise_decay,
             config.masc.noise_floor_std},
      init_rng_(make_stream(trial_seed, Stream::NetworkInit)),
      explore_rng_(make_stream(trial_seed, Stream::Exploration)),
      sample_rng_(make_stream(trial_seed, Stream::Sampling)),
      random_rng_(make_stream(trial_seed, Stream::RandomPolicy)),
      actors_(ActorSet::create(config, init_rng_)),
      critic_(CriticPair::create(config, init_rng_)),
      env_(env_params(config), source),
      buffer_(static_cast<std::size_t>(config.timeline.M)),
      assembler_(config.num_aps(), config.power_floor()),
      uplink_(config.timeline.T_d),
      downlink_(config.timeline.T_d) {
  config_.validate();
  Rng boot = make_stream(trial_seed, Stream::Bootstrap);
  env_.reset(random_powers(config_.p_max(), config_.power_floor(), boot));
}

void Trainer::train_step(TrainingLogRow& row) {
  const auto picked = buffer_.sample(static_cast<std::size_t>(clock_.D), sample_rng_);
  const Batch batch = make_batch(picked, encoder_);
  const nn::Vector y =
      compute_critic_targets(batch, actors_, critic_.target, config_.masc.eta, encoder_);
  const CriticUpdate cu = update_critic(critic_, batch, y);
  if (!cu.applied) ++diag_.critic_skips;
  row.critic_loss = cu.loss;
  const ActorUpdate au =
      update_actors(actors_, critic_.online, batch, encoder_, config_.masc.other_actions);
  diag_.actor_skips += au.skipped;
  row.mean_action = au.mean_action;
  sync_targets(actors_, critic_, config_.masc.tau_actor, config_.masc.tau_critic);
  ++diag_.updates;
}

void Trainer::train(int slots) {
  require(slots >= 0, ErrorKind::Config, "Trainer::train: slots must be >= 0");
  const int n = config_.num_aps();
  const auto p_max = config_.p_max();
  const auto floor = config_.power_floor();
  for (int i = 0; i < slots; ++i) {
    const long t = env_.slot();
    const Observation obs = env_.observation();
    TrainingLogRow row;
    row.slot = t;
    row.mean_action.assign(n, std::numeric_limits<double>::quiet_NaN());

    // Uplink: e_n(t) and o_n(t) leave the APs now and arrive T_d slots later.
    std::vector<UplinkPayload> up(n);
    for (int k = 0; k < n; ++k) {
      up[k].slot = t;
      up[k].ap = k;
      up[k].aux = obs.aux[k];
      if (prev_obs_) {
        LocalExperience e;
        e.s = prev_obs_->states[k];
        e.a = prev_actions_[k];
        e.r = obs.states[k].rate_prev;
        e.s_next = obs.states[k];
        e.slot = t;
        up[k].experience = e;
      }
    }
    uplink_.push(t, std::move(up));
    for (auto& delivered : uplink_.collect(t))
      if (auto g = assembler_.receive(delivered)) buffer_.push(std::move(*g));

    if (t >= clock_.first_update_slot() && buffer_.size() >= static_cast<std::size_t>(clock_.D)) {
      train_step(row);
      if (!events_.first_update) events_.first_update = t;
      events_.update_slots.push_back(t);
      const long since = t - *events_.first_update;
      if (since > 0 && since % clock_.T_u == 0) {
        WeightSnapshot snap;
        for (const Agent& a : actors_.agents) snap.actors.push_back(a.actor);
        downlink_.push(t, std::move(snap));
        events_.push_slots.push_back(t);
      }
    }
    for (auto& snap : downlink_.collect(t)) {
      for (int k = 0; k < n; ++k) actors_.agents[k].local = std::move(snap.actors[k]);
      events_.replacement_slots.push_back(t);
    }

    std::vector<double> actions(n);
    if (clock_.random_phase(t) || !events_.first_update) {
      actions = random_powers(p_max, floor, random_rng_);
    } else {
      for (int k = 0; k < n; ++k)
        actions[k] = select_action(actors_.agents[k].local, encoder_.local(obs.states[k]), noise_, t,
                                   explore_rng_, true, p_max[k], floor[k]);
    }

    const SlotRecord& rec = env_.advance(actions);
    row.sum_rate = rec.sum_rate;
    records_.push_back(rec);
    log_.push_back(std::move(row));
    prev_obs_ = obs;
    prev_actions_ = std::move(actions);

    if (checkpoints_.interval > 0 && (t + 1) % checkpoints_.interval == 0)
      save_checkpoint(checkpoints_.directory / ("slot_" + std::to_string(t + 1)), actors_, critic_);
  }
}

std::vector<SlotRecord> Trainer::test(int slots) {
  return run_testing(actors_, encoder_, env_, slots);
}

TrainingResult run_training(const ScenarioConfig& config, std::uint64_t trial_seed,
                            GainSource& source) {
  Trainer trainer(config, trial_seed, source);
  trainer.train(config.timeline.train_slots);
  TrainingResult out;
  out.actors = trainer.actors();
  out.records = trainer.records();
  out.log = trainer.log();
  out.events = trainer.events();
  out.diagnostics = trainer.diagnostics();
  return out;
}

std::vector<SlotRecord> run_testing(const ActorSet& actors, const FeatureEncoder& enc,
                                    Environment& env, int slots) {
  require(slots >= 0, ErrorKind::Config, "run_testing: slots must be >= 0");
  require(actors.size() == env.size(), ErrorKind::Shape, "run_testing: AP count mismatch");
  const NoiseSchedule unused;
  Rng no_rng;
  std::vector<SlotRecord> out;
  out.reserve(static_cast<std::size_t>(slots));
  std::vector<double> actions(actors.size());
  for (int i = 0; i < slots; ++i) {
    const Observation& obs = env.observation();
    for (int k = 0; k < actors.size(); ++k) {
      const Agent& a = actors.agents[k];
      actions[k] = select_action(a.local, enc.local(obs.states[k]), unused, env.slot(), no_rng,
                                 false, a.p_max, a.p_floor);
    }
    out.push_back(env.advance(actions));
  }
  return out;
}

void write_training_log_csv(std::ostream& out, std::span<const TrainingLogRow> rows) {
  const std::size_t n = rows.empty() ? 0 : rows.front().mean_action.size();
  CsvWriter csv(out);
  std::vector<std::string> header{"slot", "critic_loss"};
  for (std::size_t i = 1; i <= n; ++i) header.push_back("mean_action_" + std::to_string(i));
  header.push_back("sum_rate");
  csv.header(header);
  for (const auto& r : rows) {
    csv.field(r.slot);
    csv.field(r.critic_loss);
    for (double a : r.mean_action) csv.field(a);
    csv.field(r.sum_rate);
    csv.end_row();
  }
}

namespace {

void save_net(const std::filesystem::path& path, const nn::Mlp& net) {
  std::ofstream f(path);
  if (!f) raise(ErrorKind::Io, "cannot write " + path.string());
  nn::save_mlp(f, net);
  if (!f) raise(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& directory, const ActorSet& actors,
                     const CriticPair& critic) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + directory.string() + ": " + ec.message());
  for (int k = 0; k < actors.size(); ++k) {
    const auto id = std::to_string(k + 1);
    save_net(directory / ("local_" + id + ".txt"), actors.agents[k].local);
    save_net(directory / ("actor_" + id + ".txt"), actors.agents[k].actor);
    save_net(directory / ("target_actor_" + id + ".txt"), actors.agents[k].target);
  }
  save_net(directory / "critic_state.txt", critic.online.state_module());
  save_net(directory / "critic_action.txt", critic.online.action_module());
  save_net(directory / "critic_mixed.txt", critic.online.mixed_module());
  save_net(directory / "target_critic_state.txt", critic.target.state_module());
  save_net(directory / "target_critic_action.txt", critic.target.action_module());
  save_net(directory / "target_critic_mixed.txt", critic.target.mixed_module());
}

}  // namespace hetnet
