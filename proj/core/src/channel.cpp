#include "hetnet/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hetnet/error.hpp"

namespace hetnet {

Topology sample_topology(const ScenarioConfig& config, Rng& rng) {
  const int n = config.num_aps();
  Topology topo;
  topo.ap_positions.reserve(n);
  topo.ue_positions.reserve(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const ApSpec& ap : config.aps) {
    topo.ap_positions.push_back({ap.x, ap.y});
    // Area-uniform over the annulus [nu_min, nu_max].
    const double lo2 = ap.nu_min_m * ap.nu_min_m;
    const double hi2 = ap.nu_max_m * ap.nu_max_m;
    const double r = std::sqrt(unit(rng) * (hi2 - lo2) + lo2);
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    topo.ue_positions.push_back({ap.x + r * std::cos(theta), ap.y + r * std::sin(theta)});
  }
  topo.distances.resize(n, n);
  for (int k = 0; k < n; ++k) {
    for (int u = 0; u < n; ++u) {
      const double dx = topo.ap_positions[k].x - topo.ue_positions[u].x;
      const double dy = topo.ap_positions[k].y - topo.ue_positions[u].y;
      topo.distances(k, u) = std::hypot(dx, dy);
    }
  }
  return topo;
}

double path_loss_db(double distance_km) {
  require(distance_km > 0.0, ErrorKind::Domain,
          "path_loss_db: distance must be > 0, got " + std::to_string(distance_km));
  return 120.9 + 37.6 * std::log10(distance_km);
}

LargeScale draw_large_scale(const Topology& topology, const ScenarioConfig& config, Rng& rng) {
  const int n = topology.size();
  std::normal_distribution<double> shadow(0.0, 1.0);
  LargeScale ls;
  ls.phi.resize(n, n);
  for (int k = 0; k < n; ++k) {
    for (int u = 0; u < n; ++u) {
      const double x_db = config.channel.shadowing_std_db * shadow(rng);
      const double pl = path_loss_db(topology.distances(k, u) / 1000.0);
      ls.phi(k, u) = std::pow(10.0, -(pl + x_db) / 10.0);
    }
  }
  return ls;
}

FadingState fading_step(const std::optional<FadingState>& state, int links, double rho, Rng& rng) {
  require(rho >= 0.0 && rho <= 1.0, ErrorKind::Domain,
          "fading_step: rho must lie in [0,1], got " + std::to_string(rho));
  std::normal_distribution<double> normal(0.0, 1.0);
  FadingState next;
  if (!state) {
    const double s = std::sqrt(0.5);
    next.h.resize(links, links);
    for (int k = 0; k < links; ++k)
      for (int u = 0; u < links; ++u) {
        const double re = s * normal(rng);
        const double im = s * normal(rng);
        next.h(k, u) = {re, im};
      }
    return next;
  }
  require(state->h.rows() == links && state->h.cols() == links, ErrorKind::Shape,
          "fading_step: state dimension mismatch");
  const double s = std::sqrt(0.5 * (1.0 - rho * rho));
  next.h.resize(links, links);
  for (int k = 0; k < links; ++k)
    for (int u = 0; u < links; ++u) {
      const double re = s * normal(rng);
      const double im = s * normal(rng);
      next.h(k, u) = rho * state->h(k, u) + std::complex<double>(re, im);
    }
  return next;
}

GainMatrix gain_matrix(const LargeScale& large, const FadingState& fading) {
  require(large.phi.rows() == fading.h.rows() && large.phi.cols() == fading.h.cols(),
          ErrorKind::Shape, "gain_matrix: dimension mismatch");
  GainMatrix g;
  g.g = large.phi.cwiseProduct(fading.h.cwiseAbs2());
  return g;
}

GainMatrix normalize_gains(const GainMatrix& gains, double noise_power) {
  require(noise_power > 0.0, ErrorKind::Domain, "normalize_gains: noise power must be > 0");
  return GainMatrix{gains.g / noise_power};
}

ChannelProcess::ChannelProcess(const ScenarioConfig& config, std::uint64_t seed)
    : rho_mode_(config.channel.rho_mode),
      rho_(config.channel.rho),
      fading_rng_(make_stream(seed, Stream::Fading)),
      rho_rng_(make_stream(seed, Stream::Rho)) {
  Rng topo_rng = make_stream(seed, Stream::Topology);
  Rng shadow_rng = make_stream(seed, Stream::Shadowing);
  topology_ = sample_topology(config, topo_rng);
  large_ = draw_large_scale(topology_, config, shadow_rng);
  if (rho_mode_ == RhoMode::RandomPerTrial) {
    rho_ = std::uniform_real_distribution<double>(0.0, 1.0)(rho_rng_);
  }
}

GainMatrix ChannelProcess::next() {
  if (rho_mode_ == RhoMode::RandomPerSlot) {
    rho_ = std::uniform_real_distribution<double>(0.0, 1.0)(rho_rng_);
  }
  fading_ = fading_step(fading_, size(), rho_, fading_rng_);
  return gain_matrix(large_, *fading_);
}

ChannelTrace generate_trace(const ScenarioConfig& config, std::uint64_t seed, int slots) {
  ChannelProcess process(config, seed);
  ChannelTrace trace;
  trace.topology = process.topology();
  trace.rho = process.rho();
  trace.gains.reserve(static_cast<std::size_t>(slots));
  for (int t = 0; t < slots; ++t)
    trace.gains.push_back(normalize_gains(process.next(), config.channel.noise_power_w));
  return trace;
}

}  // namespace hetnet
