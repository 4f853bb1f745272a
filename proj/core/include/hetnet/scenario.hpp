#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hetnet {

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

struct ApSpec {
  double x = 0.0;  // meters
  double y = 0.0;
  int layer = 1;
  double p_max_w = 1.0;
  double nu_min_m = 10.0;
  double nu_max_m = 1000.0;
};

enum class RhoMode {
  Fixed,
  RandomPerTrial,  // rho ~ U[0,1] drawn once per trial
  RandomPerSlot,   // rho ~ U[0,1] redrawn every slot
};

struct ChannelParams {
  double bandwidth_hz = 10e6;
  double noise_power_w = 3.981071705534973e-15;  // -114 dBm
  RhoMode rho_mode = RhoMode::Fixed;
  double rho = 0.0;
  double shadowing_std_db = 8.0;
};

struct Timeline {
  int T_d = 50;   // backhaul delay, slots
  int T_u = 100;  // local weight push period, slots
  int M = 1000;   // replay capacity
  int D = 128;    // minibatch size
  int train_slots = 5000;
  int test_slots = 2000;
  int trials = 10;
};

enum class OtherActions {
  Online,  // other agents' actions from current online actors
  Logged,  // other agents' actions taken from the stored experience
};

struct MascParams {
  std::vector<int> actor_hidden{100, 100};
  std::vector<int> critic_state_hidden{200, 200};
  int critic_action_hidden = 200;
  int critic_mixed_hidden = 200;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double tau_actor = 1e-3;
  double tau_critic = 1e-3;
  double eta = 0.5;
  double noise_initial_variance = 2.0;
  double noise_decay = 0.9995;
  double noise_floor_std = 0.01;
  double power_floor_fraction = 1e-6;
  // Multiplier applied to dB-mapped features before they enter any network.
  double feature_scale = 1.0;
  OtherActions other_actions = OtherActions::Online;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::vector<ApSpec> aps;
  ChannelParams channel;
  Timeline timeline;
  MascParams masc;

  int num_aps() const { return static_cast<int>(aps.size()); }
  std::vector<double> p_max() const;
  std::vector<double> power_floor() const;

  // Throws Config with a dotted key path on the first violated constraint.
  void validate() const;
};

ScenarioConfig two_layer_preset();
ScenarioConfig three_layer_preset();
// "two-layer" or "three-layer"; anything else is a Config error.
ScenarioConfig preset(std::string_view name);

// Parses a JSON scenario document. An optional top-level "preset" key seeds
// defaults that the remaining sections override. Unknown keys are errors.
ScenarioConfig scenario_from_json(std::string_view text);
std::string scenario_to_json(const ScenarioConfig& config);

}  // namespace hetnet
