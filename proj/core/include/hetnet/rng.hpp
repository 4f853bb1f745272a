#pragma once

#include <cstdint>
#include <random>

namespace hetnet {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

// Named random streams within one trial. Each stream is seeded from
// (trial seed, stream id) so consumers never perturb one another.
enum class Stream : std::uint64_t {
  Topology = 1,
  Shadowing = 2,
  Fading = 3,
  Rho = 4,
  NetworkInit = 5,
  Exploration = 6,
  Sampling = 7,
  RandomPolicy = 8,
  Bootstrap = 9,
  RandomBaseline = 10,
};

// Trial seed = master seed advanced by the trial index through a counter
// scheme, so appending trials leaves earlier trials untouched.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index);

Rng make_stream(std::uint64_t trial_seed, Stream stream);

}  // namespace hetnet
