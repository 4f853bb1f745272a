#include "hetnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hetnet/environment.hpp"
#include "hetnet/error.hpp"

namespace hetnet {

namespace {

void check_instance(const GainMatrix& gains, double noise, std::span<const double> p_max,
                    const char* who) {
  const int n = gains.size();
  require(n >= 1, ErrorKind::Domain, std::string(who) + ": empty instance");
  require(static_cast<int>(p_max.size()) == n, ErrorKind::Shape,
          std::string(who) + ": p_max size mismatch");
  require(noise >= 0.0 && std::isfinite(noise), ErrorKind::Domain,
          std::string(who) + ": noise must be finite and >= 0");
  for (int k = 0; k < n; ++k) {
    require(gains(k, k) > 0.0, ErrorKind::Domain,
            std::string(who) + ": non-positive direct gain at link " + std::to_string(k));
    require(p_max[k] > 0.0, ErrorKind::Domain, std::string(who) + ": p_max must be > 0");
    for (int j = 0; j < n; ++j)
      require(gains(k, j) >= 0.0 && std::isfinite(gains(k, j)), ErrorKind::Domain,
              std::string(who) + ": gains must be finite and >= 0");
  }
}

bool converged(double prev, double now, int n, double bandwidth, double tol) {
  return std::abs(now - prev) / (static_cast<double>(n) * bandwidth) < tol;
}

}  // namespace

SolverReport wmmse_solve(const GainMatrix& gains, double noise, std::span<const double> p_max,
                         const SolverOptions& options) {
  check_instance(gains, noise, p_max, "wmmse_solve");
  const int n = gains.size();
  const Eigen::MatrixXd a = gains.g.cwiseSqrt();
  std::vector<double> v(n), u(n), w(n), p(n);
  for (int k = 0; k < n; ++k) v[k] = std::sqrt(p_max[k]);

  auto powers = [&] {
    for (int k = 0; k < n; ++k) p[k] = v[k] * v[k];
    return sum_rate(p, gains, noise, options.bandwidth_hz);
  };

  SolverReport rep;
  double rate = powers();
  rep.objective_trace.push_back(rate);
  for (int it = 1; it <= options.max_iter; ++it) {
    for (int m = 0; m < n; ++m) {
      double denom = noise;
      for (int k = 0; k < n; ++k) denom += a(k, m) * a(k, m) * v[k] * v[k];
      u[m] = a(m, m) * v[m] / denom;
      w[m] = 1.0 / std::max(1.0 - u[m] * a(m, m) * v[m], 1e-12);
    }
    for (int m = 0; m < n; ++m) {
      double denom = 0.0;
      for (int k = 0; k < n; ++k) denom += w[k] * u[k] * u[k] * a(m, k) * a(m, k);
      const double vm = denom > 0.0 ? w[m] * u[m] * a(m, m) / denom : std::sqrt(p_max[m]);
      v[m] = std::clamp(vm, 0.0, std::sqrt(p_max[m]));
    }
    const double next = powers();
    rep.objective_trace.push_back(next);
    rep.iterations = it;
    const bool done = converged(rate, next, n, options.bandwidth_hz, options.tol);
    rate = next;
    if (done) {
      rep.converged = true;
      break;
    }
  }
  for (int k = 0; k < n; ++k) p[k] = std::min(v[k] * v[k], p_max[k]);
  rep.powers = p;
  rep.sum_rate = sum_rate(rep.powers, gains, noise, options.bandwidth_hz);
  return rep;
}

SolverReport fp_solve(const GainMatrix& gains, double noise, std::span<const double> p_max,
                      const SolverOptions& options) {
  check_instance(gains, noise, p_max, "fp_solve");
  const int n = gains.size();
  std::vector<double> p(p_max.begin(), p_max.end()), y(n), gamma(n);

  SolverReport rep;
  double rate = sum_rate(p, gains, noise, options.bandwidth_hz);
  rep.objective_trace.push_back(rate);
  for (int it = 1; it <= options.max_iter; ++it) {
    for (int m = 0; m < n; ++m) {
      double total = noise;
      for (int k = 0; k < n; ++k) total += p[k] * gains(k, m);
      gamma[m] = compute_sinr(p, gains, noise, m);
      y[m] = std::sqrt((1.0 + gamma[m]) * p[m] * gains(m, m)) / total;
    }
    for (int m = 0; m < n; ++m) {
      double denom = 0.0;
      for (int k = 0; k < n; ++k) denom += y[k] * y[k] * gains(m, k);
      const double num = y[m] * y[m] * (1.0 + gamma[m]) * gains(m, m);
      p[m] = denom > 0.0 ? std::min(p_max[m], num / (denom * denom)) : p_max[m];
    }
    const double next = sum_rate(p, gains, noise, options.bandwidth_hz);
    rep.objective_trace.push_back(next);
    rep.iterations = it;
    const bool done = converged(rate, next, n, options.bandwidth_hz, options.tol);
    rate = next;
    if (done) {
      rep.converged = true;
      break;
    }
  }
  rep.powers = p;
  rep.sum_rate = rate;
  return rep;
}

std::vector<double> fixed_policy(FixedKind kind, std::span<const double> p_max, Rng& rng) {
  std::vector<double> out(p_max.begin(), p_max.end());
  if (kind == FixedKind::Random) {
    for (double& p : out) {
      std::uniform_real_distribution<double> u(0.0, p);
      p = u(rng);
    }
  }
  return out;
}

SolverReport grid_oracle(const GainMatrix& gains, double noise, std::span<const double> p_max,
                         int levels, double bandwidth_hz) {
  check_instance(gains, noise, p_max, "grid_oracle");
  const int n = gains.size();
  require(n <= 4, ErrorKind::CostGuard,
          "grid_oracle: " + std::to_string(n) + " APs exceeds the limit of 4");
  require(levels >= 2, ErrorKind::Config, "grid_oracle: levels must be >= 2");

  std::vector<int> idx(n, 0);
  std::vector<double> p(n), best;
  double best_rate = -1.0;
  double best_total = 0.0;
  for (;;) {
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      p[k] = idx[k] == levels - 1 ? p_max[k] : p_max[k] * idx[k] / (levels - 1);
      total += p[k];
    }
    const double r = sum_rate(p, gains, noise, bandwidth_hz);
    // Enumeration is lexicographic, so only strict improvements replace.
    if (r > best_rate || (r == best_rate && total < best_total)) {
      best_rate = r;
      best_total = total;
      best = p;
    }
    int k = n - 1;
    while (k >= 0 && ++idx[k] == levels) idx[k--] = 0;
    if (k < 0) break;
  }
  SolverReport rep;
  rep.powers = best;
  rep.sum_rate = best_rate;
  rep.iterations = 1;
  rep.converged = true;
  rep.objective_trace = {best_rate};
  return rep;
}

}  // namespace hetnet
