#pragma once

// Classical per-slot power control with perfect instantaneous CSI.

#include <span>
#include <vector>

#include "hetnet/channel.hpp"
#include "hetnet/rng.hpp"

namespace hetnet {

struct SolverReport {
  std::vector<double> powers;  // watts, within [0, p_max]
  double sum_rate = 0.0;       // bps
  int iterations = 0;
  bool converged = false;
  // Sum-rate after initialization (entry 0) and after every iteration, bps.
  std::vector<double> objective_trace;
};

struct SolverOptions {
  double bandwidth_hz = 10e6;
  double tol = 1e-3;  // bps/Hz per link
  int max_iter = 500;
};

// Scalar WMMSE from full power.
SolverReport wmmse_solve(const GainMatrix& gains, double noise, std::span<const double> p_max,
                         const SolverOptions& options = {});

// Fractional programming (quadratic transform) from full power.
SolverReport fp_solve(const GainMatrix& gains, double noise, std::span<const double> p_max,
                      const SolverOptions& options = {});

enum class FixedKind { Full, Random };

// Full: p = p_max. Random: p_n ~ U[0, p_max(n)].
std::vector<double> fixed_policy(FixedKind kind, std::span<const double> p_max, Rng& rng);

// Exhaustive search over `levels` evenly spaced powers per AP (0 and p_max
// included). Ties go to the lowest total power, then the lexicographically
// smallest vector. CostGuard error for N > 4.
SolverReport grid_oracle(const GainMatrix& gains, double noise, std::span<const double> p_max,
                         int levels, double bandwidth_hz = 10e6);

}  // namespace hetnet
