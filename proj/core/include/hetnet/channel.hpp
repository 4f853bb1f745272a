#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hetnet/rng.hpp"
#include "hetnet/scenario.hpp"

namespace hetnet {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct Topology {
  std::vector<Position> ap_positions;
  std::vector<Position> ue_positions;
  Eigen::MatrixXd distances;  // (k, n): AP k -> UE n, meters

  int size() const { return static_cast<int>(ap_positions.size()); }
};

// Linear-scale path loss plus shadowing; fixed for a trial.
struct LargeScale {
  Eigen::MatrixXd phi;
};

struct FadingState {
  Eigen::MatrixXcd h;  // (k, n): small-scale coefficient AP k -> UE n
};

// g(k, n) is the gain from transmitter k to receiver n.
struct GainMatrix {
  Eigen::MatrixXd g;

  int size() const { return static_cast<int>(g.rows()); }
  double operator()(int k, int n) const { return g(k, n); }
  double& operator()(int k, int n) { return g(k, n); }
};

Topology sample_topology(const ScenarioConfig& config, Rng& rng);

// 120.9 + 37.6 log10(d) with d in kilometers. Domain error for d <= 0.
double path_loss_db(double distance_km);

LargeScale draw_large_scale(const Topology& topology, const ScenarioConfig& config, Rng& rng);

// First call (no prior state): h ~ CN(0,1) per link. Otherwise
// h(t) = rho h(t-1) + w, w ~ CN(0, 1 - rho^2). Domain error for rho outside [0,1].
FadingState fading_step(const std::optional<FadingState>& state, int links, double rho, Rng& rng);

GainMatrix gain_matrix(const LargeScale& large, const FadingState& fading);

// Divides every gain by the noise power so that noise becomes unity.
GainMatrix normalize_gains(const GainMatrix& gains, double noise_power);

// One trial's channel: topology and large-scale fixed at construction, fading
// evolving on each next(). Every random draw comes from the trial's channel
// streams, never from a consumer's, so any number of algorithms can replay the
// identical gain sequence.
class ChannelProcess {
 public:
  ChannelProcess(const ScenarioConfig& config, std::uint64_t trial_seed);

  const Topology& topology() const { return topology_; }
  const LargeScale& large_scale() const { return large_; }
  double rho() const { return rho_; }
  int size() const { return topology_.size(); }

  // Raw (un-normalized) gains of the next slot.
  GainMatrix next();

 private:
  RhoMode rho_mode_;
  double rho_ = 0.0;
  Topology topology_;
  LargeScale large_;
  std::optional<FadingState> fading_;
  Rng fading_rng_;
  Rng rho_rng_;
};

// Noise-normalized gains for `slots` consecutive slots of one trial.
struct ChannelTrace {
  Topology topology;
  double rho = 0.0;
  std::vector<GainMatrix> gains;
};

ChannelTrace generate_trace(const ScenarioConfig& config, std::uint64_t trial_seed, int slots);

}  // namespace hetnet
