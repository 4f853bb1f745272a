#pragma once

#include <array>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetnet/channel.hpp"
#include "hetnet/error.hpp"

namespace hetnet {

// Per-AP observation at the start of slot t. Gains are noise-normalized, so
// interference entries are in units of the noise power.
struct LocalState {
  static constexpr int kSize = 7;

  double g_own_prev = 0.0;   // g_{n,n}(t-1)
  double p_prev = 0.0;       // p_n(t-1), watts
  double interf_prev = 0.0;  // sum_{k!=n} p_k(t-1) g_{k,n}(t-1)
  double sinr_prev = 0.0;    // gamma_n(t-1)
  double rate_prev = 0.0;    // r_n(t-1) / B, bps/Hz
  double g_own_now = 0.0;    // g_{n,n}(t)
  double interf_now = 0.0;   // sum_{k!=n} p_k(t-1) g_{k,n}(t)

  std::array<double, kSize> to_array() const {
    return {g_own_prev, p_prev, interf_prev, sinr_prev, rate_prev, g_own_now, interf_now};
  }
  bool operator==(const LocalState&) const = default;
};

// Received powers p_k(t-1) g_{k,n}(t) that UE n measures from every other AP.
struct AuxiliaryInfo {
  int receiver = 0;
  std::vector<double> values;  // N-1 entries, interferers in ascending k, skipping `receiver`

  int links() const { return static_cast<int>(values.size()) + 1; }
  double from(int k) const;
  double total() const;
};

struct SlotRecord {
  long slot = 0;
  GainMatrix gains;
  std::vector<double> powers;  // watts
  std::vector<double> sinr;
  std::vector<double> rates;   // bps
  double sum_rate = 0.0;       // bps, always the plain sum of `rates`
};

double compute_sinr(std::span<const double> powers, const GainMatrix& gains, double noise, int n);
// Shannon rate B log2(1 + sinr) in bps.
double compute_rate(double sinr, double bandwidth_hz);
double sum_rate(std::span<const double> powers, const GainMatrix& gains, double noise,
                double bandwidth_hz);

SlotRecord make_slot_record(long slot, const GainMatrix& gains, std::span<const double> powers,
                            double noise, double bandwidth_hz);

LocalState build_local_state(const SlotRecord& prev, const GainMatrix& gains_now, int n,
                             double noise, double bandwidth_hz);
AuxiliaryInfo build_aux_info(std::span<const double> powers_prev, const GainMatrix& gains_now, int n);

// f(x) = 10 log10(1 + x); Domain error for x < 0.
double feature_map(double x);
// Applies f to every entry except rate_prev, which passes through in bps/Hz.
std::array<double, LocalState::kSize> preprocess_local_state(const LocalState& s);
// f applied to each gain, flattened row by row (transmitter-major).
Eigen::VectorXd preprocess_gains(const GainMatrix& gains);

// Fixed-latency FIFO: a payload pushed at slot t becomes due exactly at t + delay.
template <typename T>
class DelayLine {
 public:
  explicit DelayLine(int delay) : delay_(delay) {
    require(delay >= 0, ErrorKind::Config, "DelayLine: delay must be >= 0");
  }

  int delay() const { return delay_; }
  std::size_t in_flight() const { return queue_.size(); }

  void push(long slot, T payload) {
    require(queue_.empty() || queue_.back().first <= slot + delay_, ErrorKind::Contract,
            "DelayLine: pushes must be in nondecreasing slot order");
    queue_.emplace_back(slot + delay_, std::move(payload));
  }

  // Everything due at `slot`. Contract error if a payload came due earlier and
  // was never collected.
  std::vector<T> collect(long slot) {
    std::vector<T> due;
    while (!queue_.empty() && queue_.front().first <= slot) {
      require(queue_.front().first == slot, ErrorKind::Contract,
              "DelayLine: payload due at an earlier slot was skipped");
      due.push_back(std::move(queue_.front().second));
      queue_.pop_front();
    }
    return due;
  }

 private:
  int delay_;
  std::deque<std::pair<long, T>> queue_;
};

class GainSource {
 public:
  virtual ~GainSource() = default;
  virtual GainMatrix next() = 0;
};

// Replays a recorded, already-normalized gain sequence.
class TraceSource final : public GainSource {
 public:
  explicit TraceSource(std::span<const GainMatrix> gains) : gains_(gains) {}
  GainMatrix next() override;
  std::size_t consumed() const { return cursor_; }

 private:
  std::span<const GainMatrix> gains_;
  std::size_t cursor_ = 0;
};

// Draws gains live from a channel process and normalizes them by the noise.
class ProcessSource final : public GainSource {
 public:
  ProcessSource(ChannelProcess& process, double noise_power)
      : process_(process), noise_(noise_power) {}
  GainMatrix next() override { return normalize_gains(process_.next(), noise_); }

 private:
  ChannelProcess& process_;
  double noise_;
};

struct EnvParams {
  std::vector<double> p_max;
  std::vector<double> p_floor;  // lowest admissible action per AP
  double bandwidth_hz = 10e6;
  double noise = 1.0;           // 1 once gains are noise-normalized
};

struct Observation {
  std::vector<LocalState> states;
  std::vector<AuxiliaryInfo> aux;
};

// Slot-by-slot interference channel. Slot -1 is a bootstrap slot whose record
// seeds the first observation; slot 0 is the first slot that takes actions.
class Environment {
 public:
  Environment(EnvParams params, GainSource& source);

  // Runs bootstrap slot -1 with `initial_powers`, then fetches G(0) and
  // returns the slot-0 observation.
  const Observation& reset(std::span<const double> initial_powers);

  // Applies `actions` as p(t) under G(t), emits the slot-t record, advances
  // the channel to t+1 and measures the next observation with p(t).
  const SlotRecord& advance(std::span<const double> actions);

  long slot() const { return slot_; }
  int size() const { return static_cast<int>(params_.p_max.size()); }
  const EnvParams& params() const { return params_; }
  const GainMatrix& current_gains() const { return gains_now_; }
  const Observation& observation() const { return observation_; }
  const SlotRecord& last_record() const { return last_; }

 private:
  void observe();

  EnvParams params_;
  GainSource& source_;
  long slot_ = -1;
  GainMatrix gains_now_;
  SlotRecord last_;
  Observation observation_;
};

// CSV with columns slot, p_1..p_N, r_1..r_N, R (rates in bps), 17 significant digits.
void write_slot_records_csv(std::ostream& out, std::span<const SlotRecord> records);

}  // namespace hetnet
