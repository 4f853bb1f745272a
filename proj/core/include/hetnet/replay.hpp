#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hetnet/environment.hpp"
#include "hetnet/rng.hpp"

namespace hetnet {

// e_n(t) = {s_n(t-1), a_n(t-1), r_n(t-1), s_n(t)}; `slot` is t.
struct LocalExperience {
  LocalState s;
  double a = 0.0;  // watts
  double r = 0.0;  // bps/Hz
  LocalState s_next;
  long slot = 0;
};

struct GlobalExperience {
  std::vector<LocalState> states;
  GainMatrix s_o;
  std::vector<double> actions;
  double reward_sum = 0.0;  // bps/Hz
  std::vector<LocalState> next_states;
  GainMatrix s_o_next;
  long slot = 0;  // slot of next_states
};

// Rebuilds G from the local states (diagonal) and the auxiliary measurements
// (off-diagonal, g_{k,n} = aux_n[k] / p_k(prev)). Reconstruction error when a
// previous-slot power is below its floor.
GainMatrix reconstruct_gain_matrix(std::span<const LocalState> states,
                                   std::span<const AuxiliaryInfo> aux,
                                   std::span<const double> powers_prev,
                                   std::span<const double> power_floor);

// Global experience from N local experiences sharing one slot stamp. `aux_prev`
// are the measurements taken with s_n(t-1), `aux_now` those with s_n(t). The
// powers needed for reconstruction are read from the states' p_prev fields.
GlobalExperience assemble_global(std::span<const LocalExperience> experiences,
                                 std::span<const AuxiliaryInfo> aux_prev,
                                 std::span<const AuxiliaryInfo> aux_now,
                                 std::span<const double> power_floor);

// What AP n sends over the backhaul at slot t: its local experience (absent at
// the very first slot) and the slot's auxiliary measurements.
struct UplinkPayload {
  long slot = 0;
  int ap = 0;
  std::optional<LocalExperience> experience;
  AuxiliaryInfo aux;
};

// Core-network side of the uplink. Holds the previous slot's auxiliary
// measurements so every delivered slot yields one global experience.
class ExperienceAssembler {
 public:
  ExperienceAssembler(int aps, std::vector<double> power_floor);

  // All payloads of one origin slot. Incomplete error unless exactly one
  // payload per AP is present. Returns nothing for the first slot, which
  // carries measurements only.
  std::optional<GlobalExperience> receive(std::span<const UplinkPayload> payloads);

 private:
  int aps_;
  std::vector<double> floor_;
  std::optional<long> prev_slot_;
  std::vector<AuxiliaryInfo> prev_aux_;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const GlobalExperience& operator[](std::size_t i) const { return items_[i]; }

  // Appends; evicts the oldest item once size exceeds capacity.
  void push(GlobalExperience exp);

  // `batch` distinct items, uniformly without replacement, in random order.
  // InsufficientData error when size() < batch. Pointers stay valid until the
  // next push().
  std::vector<const GlobalExperience*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<GlobalExperience> items_;
};

// Line-per-experience CSV: slot, raw states (7N), actions (N), reward.
void write_experience_log(std::ostream& out, std::span<const GlobalExperience> experiences);

}  // namespace hetnet
