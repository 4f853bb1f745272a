#include "hetnet/environment.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "hetnet/csv.hpp"

namespace hetnet {

double AuxiliaryInfo::from(int k) const {
  require(k != receiver && k >= 0 && k < links(), ErrorKind::Contract,
          "AuxiliaryInfo: no entry for transmitter " + std::to_string(k));
  return values[static_cast<std::size_t>(k < receiver ? k : k - 1)];
}

double AuxiliaryInfo::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double compute_sinr(std::span<const double> powers, const GainMatrix& gains, double noise, int n) {
  const int size = gains.size();
  require(static_cast<int>(powers.size()) == size, ErrorKind::Shape, "compute_sinr: size mismatch");
  double interference = 0.0;
  for (int k = 0; k < size; ++k)
    if (k != n) interference += powers[k] * gains(k, n);
  return powers[n] * gains(n, n) / (interference + noise);
}

double compute_rate(double sinr, double bandwidth_hz) {
  require(sinr >= 0.0, ErrorKind::Domain, "compute_rate: sinr must be >= 0");
  return bandwidth_hz * std::log2(1.0 + sinr);
}

double sum_rate(std::span<const double> powers, const GainMatrix& gains, double noise,
                double bandwidth_hz) {
  double total = 0.0;
  for (int n = 0; n < gains.size(); ++n)
    total += compute_rate(compute_sinr(powers, gains, noise, n), bandwidth_hz);
  return total;
}

SlotRecord make_slot_record(long slot, const GainMatrix& gains, std::span<const double> powers,
                            double noise, double bandwidth_hz) {
  const int size = gains.size();
  require(static_cast<int>(powers.size()) == size, ErrorKind::Shape, "make_slot_record: size mismatch");
  SlotRecord rec;
  rec.slot = slot;
  rec.gains = gains;
  rec.powers.assign(powers.begin(), powers.end());
  rec.sinr.resize(size);
  rec.rates.resize(size);
  for (int n = 0; n < size; ++n) {
    rec.sinr[n] = compute_sinr(powers, gains, noise, n);
    rec.rates[n] = compute_rate(rec.sinr[n], bandwidth_hz);
    rec.sum_rate += rec.rates[n];
  }
  return rec;
}

LocalState build_local_state(const SlotRecord& prev, const GainMatrix& gains_now, int n,
                             double noise, double bandwidth_hz) {
  const int size = gains_now.size();
  require(prev.gains.size() == size, ErrorKind::Shape, "build_local_state: size mismatch");
  LocalState s;
  s.g_own_prev = prev.gains(n, n);
  s.p_prev = prev.powers[n];
  for (int k = 0; k < size; ++k) {
    if (k == n) continue;
    s.interf_prev += prev.powers[k] * prev.gains(k, n);
    s.interf_now += prev.powers[k] * gains_now(k, n);
  }
  s.sinr_prev = s.p_prev * s.g_own_prev / (s.interf_prev + noise);
  s.rate_prev = compute_rate(s.sinr_prev, bandwidth_hz) / bandwidth_hz;
  s.g_own_now = gains_now(n, n);
  return s;
}

AuxiliaryInfo build_aux_info(std::span<const double> powers_prev, const GainMatrix& gains_now, int n) {
  const int size = gains_now.size();
  require(static_cast<int>(powers_prev.size()) == size, ErrorKind::Shape,
          "build_aux_info: size mismatch");
  AuxiliaryInfo o;
  o.receiver = n;
  o.values.reserve(size > 0 ? size - 1 : 0);
  for (int k = 0; k < size; ++k)
    if (k != n) o.values.push_back(powers_prev[k] * gains_now(k, n));
  return o;
}

double feature_map(double x) {
  require(x >= 0.0, ErrorKind::Domain, "feature_map: input must be >= 0");
  return 10.0 * std::log10(1.0 + x);
}

std::array<double, LocalState::kSize> preprocess_local_state(const LocalState& s) {
  return {feature_map(s.g_own_prev), feature_map(s.p_prev),    feature_map(s.interf_prev),
          feature_map(s.sinr_prev),  s.rate_prev,              feature_map(s.g_own_now),
          feature_map(s.interf_now)};
}

Eigen::VectorXd preprocess_gains(const GainMatrix& gains) {
  const int size = gains.size();
  Eigen::VectorXd out(size * size);
  for (int k = 0; k < size; ++k)
    for (int n = 0; n < size; ++n) out(k * size + n) = feature_map(gains(k, n));
  return out;
}

GainMatrix TraceSource::next() {
  require(cursor_ < gains_.size(), ErrorKind::Contract, "TraceSource: trace exhausted");
  return gains_[cursor_++];
}

Environment::Environment(EnvParams params, GainSource& source)
    : params_(std::move(params)), source_(source) {
  require(params_.p_max.size() == params_.p_floor.size(), ErrorKind::Config,
          "Environment: p_max and p_floor sizes differ");
  require(!params_.p_max.empty(), ErrorKind::Config, "Environment: no APs");
}

const Observation& Environment::reset(std::span<const double> initial_powers) {
  require(static_cast<int>(initial_powers.size()) == size(), ErrorKind::Shape,
          "Environment::reset: power vector size mismatch");
  slot_ = -1;
  GainMatrix g = source_.next();
  require(g.size() == size(), ErrorKind::Shape, "Environment: gain source size mismatch");
  last_ = make_slot_record(-1, g, initial_powers, params_.noise, params_.bandwidth_hz);
  slot_ = 0;
  gains_now_ = source_.next();
  observe();
  return observation_;
}

const SlotRecord& Environment::advance(std::span<const double> actions) {
  require(slot_ >= 0, ErrorKind::Contract, "Environment::advance: call reset() first");
  require(static_cast<int>(actions.size()) == size(), ErrorKind::Shape,
          "Environment::advance: action vector size mismatch");
  for (int n = 0; n < size(); ++n) {
    if (!(actions[n] >= params_.p_floor[n] && actions[n] <= params_.p_max[n]))
      raise(ErrorKind::Contract, "Environment::advance: action " + std::to_string(n) +
                                     " outside [floor, p_max]: " + std::to_string(actions[n]));
  }
  last_ = make_slot_record(slot_, gains_now_, actions, params_.noise, params_.bandwidth_hz);
  ++slot_;
  gains_now_ = source_.next();
  observe();
  return last_;
}

void Environment::observe() {
  const int n = size();
  observation_.states.resize(n);
  observation_.aux.resize(n);
  for (int i = 0; i < n; ++i) {
    observation_.states[i] =
        build_local_state(last_, gains_now_, i, params_.noise, params_.bandwidth_hz);
    observation_.aux[i] = build_aux_info(last_.powers, gains_now_, i);
  }
}

void write_slot_records_csv(std::ostream& out, std::span<const SlotRecord> records) {
  const int n = records.empty() ? 0 : static_cast<int>(records.front().powers.size());
  CsvWriter csv(out);
  std::vector<std::string> header{"slot"};
  for (int i = 1; i <= n; ++i) header.push_back("p_" + std::to_string(i));
  for (int i = 1; i <= n; ++i) header.push_back("r_" + std::to_string(i));
  header.push_back("R");
  csv.header(header);
  for (const SlotRecord& r : records) {
    csv.field(r.slot);
    for (double p : r.powers) csv.field(p);
    for (double x : r.rates) csv.field(x);
    csv.field(r.sum_rate);
    csv.end_row();
  }
}

}  // namespace hetnet
