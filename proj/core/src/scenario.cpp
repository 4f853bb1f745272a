#include "hetnet/scenario.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "hetnet/error.hpp"

namespace hetnet {
namespace {

using nlohmann::json;

ApSpec ap(double x, double y, int layer, double p_dbm, double nu_max) {
  return ApSpec{x, y, layer, dbm_to_watts(p_dbm), 10.0, nu_max};
}

void check_keys(const json& node, const std::string& path, const std::set<std::string>& allowed) {
  require(node.is_object(), ErrorKind::Config, path + ": expected an object");
  for (const auto& [key, _] : node.items()) {
    if (!allowed.contains(key))
      raise(ErrorKind::Config, (path.empty() ? key : path + "." + key) + ": unknown key");
  }
}

template <typename T>
void read(const json& node, const std::string& path, const char* key, T& out) {
  if (!node.contains(key)) return;
  const std::string full = path.empty() ? std::string(key) : path + "." + key;
  try {
    out = node.at(key).get<T>();
  } catch (const json::exception& e) {
    raise(ErrorKind::Config, full + ": " + e.what());
  }
}

std::string rho_mode_name(RhoMode m) {
  switch (m) {
    case RhoMode::Fixed: return "fixed";
    case RhoMode::RandomPerTrial: return "per-trial";
    case RhoMode::RandomPerSlot: return "per-slot";
  }
  return "fixed";
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

std::vector<double> ScenarioConfig::p_max() const {
  std::vector<double> out;
  out.reserve(aps.size());
  for (const auto& a : aps) out.push_back(a.p_max_w);
  return out;
}

std::vector<double> ScenarioConfig::power_floor() const {
  std::vector<double> out;
  out.reserve(aps.size());
  for (const auto& a : aps) out.push_back(masc.power_floor_fraction * a.p_max_w);
  return out;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) {
    raise(ErrorKind::Config, key + ": " + what);
  };
  if (aps.empty()) fail("network.aps", "at least one AP required");
  for (std::size_t i = 0; i < aps.size(); ++i) {
    const std::string p = "network.aps[" + std::to_string(i) + "]";
    const ApSpec& a = aps[i];
    if (!(a.p_max_w > 0.0) || !std::isfinite(a.p_max_w)) fail(p + ".p_max", "must be > 0");
    if (!(a.nu_min_m > 0.0)) fail(p + ".nu_min_m", "must be > 0");
    if (!(a.nu_max_m >= a.nu_min_m)) fail(p + ".nu_max_m", "must be >= nu_min_m");
    if (!std::isfinite(a.x) || !std::isfinite(a.y)) fail(p, "position must be finite");
  }
  if (!(channel.bandwidth_hz > 0.0)) fail("channel.bandwidth_hz", "must be > 0");
  if (!(channel.noise_power_w > 0.0)) fail("channel.noise_dbm", "noise power must be > 0");
  if (!(channel.rho >= 0.0 && channel.rho <= 1.0)) fail("channel.rho", "must lie in [0,1]");
  if (!(channel.shadowing_std_db >= 0.0)) fail("channel.shadowing_std_db", "must be >= 0");
  if (timeline.T_d < 0) fail("timeline.T_d", "must be >= 0");
  if (timeline.T_u < 1) fail("timeline.T_u", "must be >= 1");
  if (timeline.M < 1) fail("timeline.M", "must be >= 1");
  if (timeline.D < 1) fail("timeline.D", "must be >= 1");
  if (timeline.train_slots < 0) fail("timeline.train_slots", "must be >= 0");
  if (timeline.test_slots < 0) fail("timeline.test_slots", "must be >= 0");
  if (timeline.trials < 1) fail("timeline.trials", "must be >= 1");
  for (int h : masc.actor_hidden)
    if (h < 1) fail("training.actor_hidden", "sizes must be >= 1");
  for (int h : masc.critic_state_hidden)
    if (h < 1) fail("training.critic_state_hidden", "sizes must be >= 1");
  if (masc.critic_state_hidden.empty()) fail("training.critic_state_hidden", "need >= 1 layer");
  if (masc.critic_action_hidden < 1) fail("training.critic_action_hidden", "must be >= 1");
  if (masc.critic_mixed_hidden < 1) fail("training.critic_mixed_hidden", "must be >= 1");
  if (!(masc.actor_lr > 0.0)) fail("training.actor_lr", "must be > 0");
  if (!(masc.critic_lr > 0.0)) fail("training.critic_lr", "must be > 0");
  if (!(masc.tau_actor >= 0.0 && masc.tau_actor <= 1.0)) fail("training.tau_actor", "must lie in [0,1]");
  if (!(masc.tau_critic >= 0.0 && masc.tau_critic <= 1.0)) fail("training.tau_critic", "must lie in [0,1]");
  if (!(masc.eta >= 0.0 && masc.eta <= 1.0)) fail("training.eta", "must lie in [0,1]");
  if (!(masc.noise_initial_variance >= 0.0)) fail("training.noise_initial_variance", "must be >= 0");
  if (!(masc.noise_decay > 0.0 && masc.noise_decay <= 1.0)) fail("training.noise_decay", "must lie in (0,1]");
  if (!(masc.noise_floor_std >= 0.0)) fail("training.noise_floor_std", "must be >= 0");
  if (!(masc.power_floor_fraction > 0.0 && masc.power_floor_fraction < 1.0))
    fail("training.power_floor_fraction", "must lie in (0,1)");
  if (!(masc.feature_scale > 0.0)) fail("training.feature_scale", "must be > 0");
}

ScenarioConfig two_layer_preset() {
  ScenarioConfig c;
  c.name = "two-layer";
  c.aps = {ap(0, 0, 1, 30, 1000), ap(500, 0, 2, 23, 200), ap(0, 500, 2, 23, 200),
           ap(-500, 0, 2, 23, 200), ap(0, -500, 2, 23, 200)};
  c.channel.noise_power_w = dbm_to_watts(-114.0);
  return c;
}

ScenarioConfig three_layer_preset() {
  ScenarioConfig c = two_layer_preset();
  c.name = "three-layer";
  c.aps.push_back(ap(700, 0, 3, 20, 100));
  c.aps.push_back(ap(0, 700, 3, 20, 100));
  c.aps.push_back(ap(-700, 0, 3, 20, 100));
  c.aps.push_back(ap(0, -700, 3, 20, 100));
  return c;
}

ScenarioConfig preset(std::string_view name) {
  if (name == "two-layer") return two_layer_preset();
  if (name == "three-layer") return three_layer_preset();
  raise(ErrorKind::Config, "preset: unknown preset '" + std::string(name) + "'");
}

ScenarioConfig scenario_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    raise(ErrorKind::Config, std::string("config: parse error: ") + e.what());
  }
  check_keys(doc, "", {"preset", "name", "network", "channel", "timeline", "training", "experiment"});

  ScenarioConfig c;
  if (doc.contains("preset")) {
    std::string name;
    read(doc, "", "preset", name);
    c = preset(name);
  }
  read(doc, "", "name", c.name);

  if (doc.contains("network")) {
    const json& net = doc["network"];
    check_keys(net, "network", {"aps"});
    if (net.contains("aps")) {
      require(net["aps"].is_array(), ErrorKind::Config, "network.aps: expected an array");
      c.aps.clear();
      for (std::size_t i = 0; i < net["aps"].size(); ++i) {
        const std::string p = "network.aps[" + std::to_string(i) + "]";
        const json& a = net["aps"][i];
        check_keys(a, p, {"x", "y", "layer", "p_max_dbm", "p_max_w", "nu_min_m", "nu_max_m"});
        ApSpec s;
        read(a, p, "x", s.x);
        read(a, p, "y", s.y);
        read(a, p, "layer", s.layer);
        if (a.contains("p_max_dbm")) {
          double dbm = 0;
          read(a, p, "p_max_dbm", dbm);
          s.p_max_w = dbm_to_watts(dbm);
        }
        read(a, p, "p_max_w", s.p_max_w);
        read(a, p, "nu_min_m", s.nu_min_m);
        read(a, p, "nu_max_m", s.nu_max_m);
        c.aps.push_back(s);
      }
    }
  }

  if (doc.contains("channel")) {
    const json& ch = doc["channel"];
    check_keys(ch, "channel",
               {"bandwidth_hz", "noise_dbm", "noise_w", "rho", "rho_redraw", "shadowing_std_db"});
    read(ch, "channel", "bandwidth_hz", c.channel.bandwidth_hz);
    if (ch.contains("noise_dbm")) {
      double dbm = 0;
      read(ch, "channel", "noise_dbm", dbm);
      c.channel.noise_power_w = dbm_to_watts(dbm);
    }
    read(ch, "channel", "noise_w", c.channel.noise_power_w);
    if (ch.contains("rho")) {
      if (ch["rho"].is_string()) {
        require(ch["rho"].get<std::string>() == "random", ErrorKind::Config,
                "channel.rho: expected a number or \"random\"");
        c.channel.rho_mode = RhoMode::RandomPerTrial;
      } else {
        read(ch, "channel", "rho", c.channel.rho);
        c.channel.rho_mode = RhoMode::Fixed;
      }
    }
    if (ch.contains("rho_redraw")) {
      std::string mode;
      read(ch, "channel", "rho_redraw", mode);
      require(c.channel.rho_mode != RhoMode::Fixed, ErrorKind::Config,
              "channel.rho_redraw: only valid with rho = \"random\"");
      if (mode == "per-trial")
        c.channel.rho_mode = RhoMode::RandomPerTrial;
      else if (mode == "per-slot")
        c.channel.rho_mode = RhoMode::RandomPerSlot;
      else
        raise(ErrorKind::Config, "channel.rho_redraw: expected per-trial or per-slot");
    }
    read(ch, "channel", "shadowing_std_db", c.channel.shadowing_std_db);
  }

  if (doc.contains("timeline")) {
    const json& tl = doc["timeline"];
    check_keys(tl, "timeline", {"T_d", "T_u", "M", "D", "train_slots", "test_slots", "trials"});
    read(tl, "timeline", "T_d", c.timeline.T_d);
    read(tl, "timeline", "T_u", c.timeline.T_u);
    read(tl, "timeline", "M", c.timeline.M);
    read(tl, "timeline", "D", c.timeline.D);
    read(tl, "timeline", "train_slots", c.timeline.train_slots);
    read(tl, "timeline", "test_slots", c.timeline.test_slots);
    read(tl, "timeline", "trials", c.timeline.trials);
  }

  if (doc.contains("training")) {
    const json& tr = doc["training"];
    check_keys(tr, "training",
               {"actor_hidden", "critic_state_hidden", "critic_action_hidden", "critic_mixed_hidden",
                "actor_lr", "critic_lr", "tau_actor", "tau_critic", "eta", "noise_initial_variance",
                "noise_decay", "noise_floor_std", "power_floor_fraction", "feature_scale",
                "other_actions"});
    MascParams& m = c.masc;
    read(tr, "training", "actor_hidden", m.actor_hidden);
    read(tr, "training", "critic_state_hidden", m.critic_state_hidden);
    read(tr, "training", "critic_action_hidden", m.critic_action_hidden);
    read(tr, "training", "critic_mixed_hidden", m.critic_mixed_hidden);
    read(tr, "training", "actor_lr", m.actor_lr);
    read(tr, "training", "critic_lr", m.critic_lr);
    read(tr, "training", "tau_actor", m.tau_actor);
    read(tr, "training", "tau_critic", m.tau_critic);
    read(tr, "training", "eta", m.eta);
    read(tr, "training", "noise_initial_variance", m.noise_initial_variance);
    read(tr, "training", "noise_decay", m.noise_decay);
    read(tr, "training", "noise_floor_std", m.noise_floor_std);
    read(tr, "training", "power_floor_fraction", m.power_floor_fraction);
    read(tr, "training", "feature_scale", m.feature_scale);
    if (tr.contains("other_actions")) {
      std::string mode;
      read(tr, "training", "other_actions", mode);
      if (mode == "online")
        m.other_actions = OtherActions::Online;
      else if (mode == "logged")
        m.other_actions = OtherActions::Logged;
      else
        raise(ErrorKind::Config, "training.other_actions: expected online or logged");
    }
  }

  c.validate();
  return c;
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json doc;
  doc["name"] = c.name;
  json aps = json::array();
  for (const auto& a : c.aps) {
    aps.push_back({{"x", a.x}, {"y", a.y}, {"layer", a.layer}, {"p_max_w", a.p_max_w},
                   {"nu_min_m", a.nu_min_m}, {"nu_max_m", a.nu_max_m}});
  }
  doc["network"]["aps"] = aps;
  doc["channel"] = {{"bandwidth_hz", c.channel.bandwidth_hz},
                    {"noise_w", c.channel.noise_power_w},
                    {"shadowing_std_db", c.channel.shadowing_std_db}};
  if (c.channel.rho_mode == RhoMode::Fixed) {
    doc["channel"]["rho"] = c.channel.rho;
  } else {
    doc["channel"]["rho"] = "random";
    doc["channel"]["rho_redraw"] = rho_mode_name(c.channel.rho_mode);
  }
  doc["timeline"] = {{"T_d", c.timeline.T_d},
                     {"T_u", c.timeline.T_u},
                     {"M", c.timeline.M},
                     {"D", c.timeline.D},
                     {"train_slots", c.timeline.train_slots},
                     {"test_slots", c.timeline.test_slots},
                     {"trials", c.timeline.trials}};
  const MascParams& m = c.masc;
  doc["training"] = {{"actor_hidden", m.actor_hidden},
                     {"critic_state_hidden", m.critic_state_hidden},
                     {"critic_action_hidden", m.critic_action_hidden},
                     {"critic_mixed_hidden", m.critic_mixed_hidden},
                     {"actor_lr", m.actor_lr},
                     {"critic_lr", m.critic_lr},
                     {"tau_actor", m.tau_actor},
                     {"tau_critic", m.tau_critic},
                     {"eta", m.eta},
                     {"noise_initial_variance", m.noise_initial_variance},
                     {"noise_decay", m.noise_decay},
                     {"noise_floor_std", m.noise_floor_std},
                     {"power_floor_fraction", m.power_floor_fraction},
                     {"feature_scale", m.feature_scale},
                     {"other_actions", m.other_actions == OtherActions::Online ? "online" : "logged"}};
  return doc.dump(2);
}

}  // namespace hetnet
