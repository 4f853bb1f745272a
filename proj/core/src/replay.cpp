#include "hetnet/replay.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>

#include "hetnet/csv.hpp"
#include "hetnet/error.hpp"

namespace hetnet {

GainMatrix reconstruct_gain_matrix(std::span<const LocalState> states,
                                   std::span<const AuxiliaryInfo> aux,
                                   std::span<const double> powers_prev,
                                   std::span<const double> power_floor) {
  const int n = static_cast<int>(states.size());
  require(static_cast<int>(aux.size()) == n && static_cast<int>(powers_prev.size()) == n &&
              static_cast<int>(power_floor.size()) == n,
          ErrorKind::Shape, "reconstruct_gain_matrix: size mismatch");
  for (int k = 0; k < n; ++k) {
    if (!(powers_prev[k] >= power_floor[k]) || !(powers_prev[k] > 0.0))
      raise(ErrorKind::Reconstruction, "reconstruct_gain_matrix: power of AP " + std::to_string(k) +
                                           " below floor (" + std::to_string(powers_prev[k]) + ")");
  }
  GainMatrix g;
  g.g.resize(n, n);
  for (int u = 0; u < n; ++u) {
    require(aux[u].receiver == u && aux[u].links() == n, ErrorKind::Shape,
            "reconstruct_gain_matrix: auxiliary info out of order");
    g(u, u) = states[u].g_own_now;
    for (int k = 0; k < n; ++k)
      if (k != u) g(k, u) = aux[u].from(k) / powers_prev[k];
  }
  return g;
}

GlobalExperience assemble_global(std::span<const LocalExperience> experiences,
                                 std::span<const AuxiliaryInfo> aux_prev,
                                 std::span<const AuxiliaryInfo> aux_now,
                                 std::span<const double> power_floor) {
  const int n = static_cast<int>(experiences.size());
  require(n >= 1, ErrorKind::Incomplete, "assemble_global: no experiences");
  require(static_cast<int>(aux_prev.size()) == n && static_cast<int>(aux_now.size()) == n,
          ErrorKind::Incomplete, "assemble_global: auxiliary information missing");
  const long slot = experiences[0].slot;
  GlobalExperience g;
  g.slot = slot;
  g.states.reserve(n);
  g.next_states.reserve(n);
  g.actions.reserve(n);
  std::vector<double> p_before(n), p_at(n);
  for (int i = 0; i < n; ++i) {
    const LocalExperience& e = experiences[i];
    require(e.slot == slot, ErrorKind::Contract, "assemble_global: mismatched slot stamps");
    g.states.push_back(e.s);
    g.next_states.push_back(e.s_next);
    g.actions.push_back(e.a);
    g.reward_sum += e.r;
    p_before[i] = e.s.p_prev;
    p_at[i] = e.s_next.p_prev;
  }
  g.s_o = reconstruct_gain_matrix(g.states, aux_prev, p_before, power_floor);
  g.s_o_next = reconstruct_gain_matrix(g.next_states, aux_now, p_at, power_floor);
  return g;
}

ExperienceAssembler::ExperienceAssembler(int aps, std::vector<double> power_floor)
    : aps_(aps), floor_(std::move(power_floor)) {
  require(aps >= 1 && static_cast<int>(floor_.size()) == aps, ErrorKind::Config,
          "ExperienceAssembler: floor size must equal AP count");
}

std::optional<GlobalExperience> ExperienceAssembler::receive(std::span<const UplinkPayload> payloads) {
  require(static_cast<int>(payloads.size()) == aps_, ErrorKind::Incomplete,
          "ExperienceAssembler: expected " + std::to_string(aps_) + " uploads, got " +
              std::to_string(payloads.size()));
  const long slot = payloads[0].slot;
  std::vector<const UplinkPayload*> by_ap(aps_, nullptr);
  for (const auto& p : payloads) {
    require(p.slot == slot, ErrorKind::Contract, "ExperienceAssembler: mixed slot stamps");
    require(p.ap >= 0 && p.ap < aps_ && by_ap[p.ap] == nullptr, ErrorKind::Incomplete,
            "ExperienceAssembler: duplicate or invalid AP index");
    by_ap[p.ap] = &p;
  }

  std::vector<AuxiliaryInfo> aux_now;
  aux_now.reserve(aps_);
  for (const auto* p : by_ap) aux_now.push_back(p->aux);

  std::optional<GlobalExperience> out;
  if (by_ap[0]->experience) {
    require(prev_slot_ && *prev_slot_ == slot - 1, ErrorKind::Incomplete,
            "ExperienceAssembler: previous slot measurements unavailable");
    std::vector<LocalExperience> exps;
    exps.reserve(aps_);
    for (const auto* p : by_ap) {
      require(p->experience.has_value(), ErrorKind::Incomplete,
              "ExperienceAssembler: local experience missing");
      exps.push_back(*p->experience);
    }
    out = assemble_global(exps, prev_aux_, aux_now, floor_);
  }
  prev_slot_ = slot;
  prev_aux_ = std::move(aux_now);
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity >= 1, ErrorKind::Config, "ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(GlobalExperience exp) {
  items_.push_back(std::move(exp));
  while (items_.size() > capacity_) items_.pop_front();
}

std::vector<const GlobalExperience*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  require(items_.size() >= batch, ErrorKind::InsufficientData,
          "ReplayBuffer::sample: " + std::to_string(items_.size()) + " items < batch " +
              std::to_string(batch));
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<const GlobalExperience*> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(&items_[idx[i]]);
  return out;
}

void write_experience_log(std::ostream& out, std::span<const GlobalExperience> experiences) {
  CsvWriter csv(out);
  const int n = experiences.empty() ? 0 : static_cast<int>(experiences.front().states.size());
  static constexpr const char* kFields[] = {"g_own_prev", "p_prev",     "interf_prev", "sinr_prev",
                                            "rate_prev",  "g_own_now", "interf_now"};
  std::vector<std::string> header{"slot"};
  for (int i = 1; i <= n; ++i)
    for (const char* f : kFields) header.push_back("s" + std::to_string(i) + "_" + f);
  for (int i = 1; i <= n; ++i) header.push_back("a_" + std::to_string(i));
  header.push_back("R");
  csv.header(header);
  for (const auto& e : experiences) {
    csv.field(e.slot);
    for (const auto& s : e.states)
      for (double v : s.to_array()) csv.field(v);
    for (double a : e.actions) csv.field(a);
    csv.field(e.reward_sum);
    csv.end_row();
  }
}

}  // namespace hetnet
