#include "hetnet/rng.hpp"

namespace hetnet {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  return mix64(master_seed + 0x9e3779b97f4a7c15ULL * (trial_index + 1));
}

Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(mix64(seed ^ static_cast<std::uint64_t>(stream)))};
  return Rng(seq);
}

}  // namespace hetnet
