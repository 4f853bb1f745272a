#include "hetnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hetnet/baselines.hpp"
#include "hetnet/channel.hpp"
#include "hetnet/csv.hpp"
#include "hetnet/error.hpp"

namespace hetnet {

namespace {

using nlohmann::json;

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names{"masc", "wmmse", "fp", "full", "random", "oracle"};
  return names;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) raise(ErrorKind::Io, "cannot write " + path.string());
  f.exceptions(std::ios::badbit);
  return f;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

double mean_of(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

bool known_algorithm(std::string_view name) {
  const auto& n = algorithm_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::vector<std::uint64_t> ExperimentSpec::seeds() const {
  std::vector<std::uint64_t> out;
  for (int k = 0; k < trials(); ++k) out.push_back(trial_seed(master_seed, k));
  return out;
}

void ExperimentSpec::validate() const {
  scenario.validate();
  require(!algorithms.empty(), ErrorKind::Config, "experiment.algorithms: must be nonempty");
  std::set<std::string> seen;
  for (const auto& a : algorithms) {
    require(known_algorithm(a), ErrorKind::Config, "experiment.algorithms: unknown algorithm '" + a + "'");
    require(seen.insert(a).second, ErrorKind::Config, "experiment.algorithms: duplicate '" + a + "'");
  }
  require(window >= 1, ErrorKind::Config, "experiment.window: must be >= 1");
  require(oracle_levels >= 2, ErrorKind::Config, "experiment.oracle_levels: must be >= 2");
}

ExperimentSpec experiment_from_json(std::string_view text) {
  ExperimentSpec spec;
  spec.scenario = scenario_from_json(text);
  const json doc = json::parse(text.begin(), text.end());
  if (doc.contains("experiment")) {
    const json& e = doc["experiment"];
    require(e.is_object(), ErrorKind::Config, "experiment: expected an object");
    static const std::set<std::string> allowed{"algorithms", "seed", "window", "oracle_levels", "out"};
    for (const auto& [key, _] : e.items())
      require(allowed.contains(key), ErrorKind::Config, "experiment." + key + ": unknown key");
    try {
      if (e.contains("algorithms")) spec.algorithms = e["algorithms"].get<std::vector<std::string>>();
      if (e.contains("seed")) spec.master_seed = e["seed"].get<std::uint64_t>();
      if (e.contains("window")) spec.window = e["window"].get<int>();
      if (e.contains("oracle_levels")) spec.oracle_levels = e["oracle_levels"].get<int>();
      if (e.contains("out")) spec.out_dir = e["out"].get<std::string>();
    } catch (const json::exception& ex) {
      raise(ErrorKind::Config, std::string("experiment: ") + ex.what());
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_config(std::string_view path_or_preset) {
  if (path_or_preset == "two-layer" || path_or_preset == "three-layer") {
    ExperimentSpec spec;
    spec.scenario = preset(path_or_preset);
    spec.validate();
    return spec;
  }
  const std::filesystem::path path{std::string(path_or_preset)};
  require(std::filesystem::exists(path), ErrorKind::Config,
          "config: no preset or file named '" + path.string() + "'");
  return experiment_from_json(read_file(path));
}

std::string_view to_string(Stage s) { return s == Stage::Train ? "train" : "test"; }

int MetricsFrame::algorithm_index(std::string_view name) const {
  for (std::size_t i = 0; i < algorithms.size(); ++i)
    if (algorithms[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> MetricsFrame::stage_series(int trial, int algo, Stage stage) const {
  const auto& s = series.at(trial).at(algo);
  const auto first = s.begin() + (stage == Stage::Train ? 0 : train_slots);
  const auto last = stage == Stage::Train ? s.begin() + train_slots : s.end();
  return {first, last};
}

std::vector<double> MetricsFrame::cross_trial_mean(int algo, Stage stage) const {
  const int len = stage == Stage::Train ? train_slots : test_slots;
  std::vector<double> out(len, 0.0);
  for (int k = 0; k < trials(); ++k) {
    const auto s = stage_series(k, algo, stage);
    for (int t = 0; t < len; ++t) out[t] += s[t];
  }
  for (double& v : out) v /= static_cast<double>(trials());
  return out;
}

std::vector<double> MetricsFrame::cross_trial_std(int algo, Stage stage) const {
  const auto mean = cross_trial_mean(algo, stage);
  std::vector<double> out(mean.size(), 0.0);
  for (int k = 0; k < trials(); ++k) {
    const auto s = stage_series(k, algo, stage);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += (s[t] - mean[t]) * (s[t] - mean[t]);
  }
  for (double& v : out) v = std::sqrt(v / static_cast<double>(trials()));
  return out;
}

std::vector<double> moving_average(std::span<const double> series, int window) {
  require(window >= 1, ErrorKind::Config, "moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  const std::size_t w = static_cast<std::size_t>(window);
  for (std::size_t t = 0; t < series.size(); ++t) {
    const std::size_t lo = t + 1 >= w ? t + 1 - w : 0;
    double s = 0.0;
    for (std::size_t i = lo; i <= t; ++i) s += series[i];
    out[t] = s / static_cast<double>(t + 1 - lo);
  }
  return out;
}

std::vector<SlotRecord> run_baseline(std::string_view algorithm, const ScenarioConfig& config,
                                     std::span<const GainMatrix> trace, int slots,
                                     std::uint64_t trial_seed, int oracle_levels) {
  require(static_cast<int>(trace.size()) >= slots + 1, ErrorKind::Contract,
          "run_baseline: trace shorter than the run");
  const auto p_max = config.p_max();
  const double bw = config.channel.bandwidth_hz;
  const SolverOptions opts{bw, 1e-3, 500};
  Rng rng = make_stream(trial_seed, Stream::RandomBaseline);
  std::vector<SlotRecord> out;
  out.reserve(slots);
  for (int t = 0; t < slots; ++t) {
    const GainMatrix& g = trace[t + 1];
    std::vector<double> p;
    if (algorithm == "wmmse") p = wmmse_solve(g, 1.0, p_max, opts).powers;
    else if (algorithm == "fp") p = fp_solve(g, 1.0, p_max, opts).powers;
    else if (algorithm == "full") p = fixed_policy(FixedKind::Full, p_max, rng);
    else if (algorithm == "random") p = fixed_policy(FixedKind::Random, p_max, rng);
    else if (algorithm == "oracle") p = grid_oracle(g, 1.0, p_max, oracle_levels, bw).powers;
    else raise(ErrorKind::Config, "run_baseline: unknown algorithm '" + std::string(algorithm) + "'");
    out.push_back(make_slot_record(t, g, p, 1.0, bw));
  }
  return out;
}

void write_trial_csv(const std::filesystem::path& path, const MetricsFrame& frame, int trial) {
  auto f = open_out(path);
  CsvWriter csv(f);
  std::vector<std::string> header{"stage", "slot"};
  for (const auto& a : frame.algorithms) header.push_back(a);
  csv.header(header);
  const int total = frame.train_slots + frame.test_slots;
  for (int t = 0; t < total; ++t) {
    csv.field(t < frame.train_slots ? "train" : "test");
    csv.field(t);
    for (std::size_t a = 0; a < frame.algorithms.size(); ++a) csv.field(frame.series[trial][a][t]);
    csv.end_row();
  }
}

void write_aggregate_csv(const std::filesystem::path& path, const MetricsFrame& frame) {
  auto f = open_out(path);
  CsvWriter csv(f);
  std::vector<std::string> header{"stage", "slot"};
  for (const auto& a : frame.algorithms) {
    header.push_back(a + "_mean");
    header.push_back(a + "_std");
  }
  csv.header(header);
  const int algos = static_cast<int>(frame.algorithms.size());
  for (Stage stage : {Stage::Train, Stage::Test}) {
    std::vector<std::vector<double>> mean(algos), sd(algos);
    for (int a = 0; a < algos; ++a) {
      mean[a] = frame.cross_trial_mean(a, stage);
      sd[a] = frame.cross_trial_std(a, stage);
    }
    const int len = stage == Stage::Train ? frame.train_slots : frame.test_slots;
    const int offset = stage == Stage::Train ? 0 : frame.train_slots;
    for (int t = 0; t < len; ++t) {
      csv.field(to_string(stage));
      csv.field(t + offset);
      for (int a = 0; a < algos; ++a) {
        csv.field(mean[a][t]);
        csv.field(sd[a][t]);
      }
      csv.end_row();
    }
  }
}

std::vector<StageSummary> summarize(const MetricsFrame& frame, int window) {
  std::vector<StageSummary> out;
  for (std::size_t a = 0; a < frame.algorithms.size(); ++a) {
    for (Stage stage : {Stage::Train, Stage::Test}) {
      StageSummary s;
      s.algorithm = frame.algorithms[a];
      s.stage = stage;
      std::vector<double> trial_means;
      double tail = 0.0;
      for (int k = 0; k < frame.trials(); ++k) {
        const auto x = frame.stage_series(k, static_cast<int>(a), stage);
        trial_means.push_back(mean_of(x));
        const std::size_t w = std::min<std::size_t>(x.size(), window);
        tail += mean_of(std::span<const double>(x).last(w));
      }
      s.mean = mean_of(trial_means);
      s.tail_mean = tail / static_cast<double>(frame.trials());
      double var = 0.0;
      for (double m : trial_means) var += (m - s.mean) * (m - s.mean);
      s.trial_std = std::sqrt(var / static_cast<double>(trial_means.size()));
      out.push_back(s);
    }
  }
  return out;
}

void emit_plot_data(const MetricsFrame& frame, const std::filesystem::path& out_dir, int window) {
  ensure_dir(out_dir);
  for (Stage stage : {Stage::Train, Stage::Test}) {
    auto f = open_out(out_dir / ("figure_" + std::string(to_string(stage)) + ".csv"));
    CsvWriter csv(f);
    std::vector<std::string> header{"slot"};
    for (const auto& a : frame.algorithms) header.push_back(a);
    csv.header(header);
    std::vector<std::vector<double>> ma;
    for (std::size_t a = 0; a < frame.algorithms.size(); ++a)
      ma.push_back(moving_average(frame.cross_trial_mean(static_cast<int>(a), stage), window));
    const int len = stage == Stage::Train ? frame.train_slots : frame.test_slots;
    const int offset = stage == Stage::Train ? 0 : frame.train_slots;
    for (int t = 0; t < len; ++t) {
      csv.field(t + offset);
      for (const auto& s : ma) csv.field(s[t]);
      csv.end_row();
    }
  }
  auto f = open_out(out_dir / "summary.csv");
  CsvWriter csv(f);
  const std::vector<std::string> header{"algorithm", "stage", "mean", "tail_mean", "trial_std"};
  csv.header(header);
  for (const auto& s : summarize(frame, window)) {
    csv.field(s.algorithm);
    csv.field(to_string(s.stage));
    csv.field(s.mean);
    csv.field(s.tail_mean);
    csv.field(s.trial_std);
    csv.end_row();
  }
}

MetricsFrame load_frame(const std::filesystem::path& out_dir) {
  MetricsFrame frame;
  for (int k = 0;; ++k) {
    const auto path = out_dir / ("trial_" + std::to_string(k) + ".csv");
    if (!std::filesystem::exists(path)) break;
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot read " + path.string());
    const CsvTable table = read_csv(in);
    require(table.header.size() >= 3 && table.header[0] == "stage" && table.header[1] == "slot",
            ErrorKind::Io, path.string() + ": unexpected header");
    const std::vector<std::string> algos(table.header.begin() + 2, table.header.end());
    if (k == 0) frame.algorithms = algos;
    require(algos == frame.algorithms, ErrorKind::Io, path.string() + ": algorithm columns differ");
    std::vector<std::vector<double>> s(algos.size());
    int train = 0;
    for (const auto& row : table.rows) {
      require(row.size() == table.header.size(), ErrorKind::Io, path.string() + ": ragged row");
      if (row[0] == "train") ++train;
      for (std::size_t a = 0; a < algos.size(); ++a) s[a].push_back(std::stod(row[a + 2]));
    }
    const int test = static_cast<int>(table.rows.size()) - train;
    if (k == 0) {
      frame.train_slots = train;
      frame.test_slots = test;
    }
    require(train == frame.train_slots && test == frame.test_slots, ErrorKind::Io,
            path.string() + ": stage lengths differ between trials");
    frame.series.push_back(std::move(s));
  }
  require(frame.trials() > 0, ErrorKind::Io, "no trial_<k>.csv files in " + out_dir.string());
  return frame;
}

namespace {

void write_manifest(const ExperimentSpec& spec, const ExperimentResult& result) {
  json m;
  m["version"] = std::string(kVersion);
  m["scenario"] = json::parse(scenario_to_json(spec.scenario));
  m["algorithms"] = spec.algorithms;
  m["master_seed"] = spec.master_seed;
  m["window"] = spec.window;
  m["oracle_levels"] = spec.oracle_levels;
  m["compiler"] = std::string(__VERSION__);
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
  json trials = json::array();
  for (std::size_t k = 0; k < result.trials.size(); ++k) {
    const TrialOutcome& t = result.trials[k];
    json j{{"index", k}, {"seed", t.seed}, {"rho", t.rho}};
    if (t.masc_events) {
      j["first_update"] = t.masc_events->first_update ? json(*t.masc_events->first_update) : json();
      j["first_replacement"] = t.masc_events->replacement_slots.empty()
                                   ? json()
                                   : json(t.masc_events->replacement_slots.front());
      j["replacements"] = t.masc_events->replacement_slots.size();
    }
    if (t.masc_diagnostics) {
      j["updates"] = t.masc_diagnostics->updates;
      j["critic_skips"] = t.masc_diagnostics->critic_skips;
      j["actor_skips"] = t.masc_diagnostics->actor_skips;
    }
    trials.push_back(j);
  }
  m["trials"] = trials;
  auto f = open_out(spec.out_dir / "manifest.json");
  f << m.dump(2) << '\n';
}

void write_records(const std::filesystem::path& path, std::span<const SlotRecord> records) {
  auto f = open_out(path);
  write_slot_records_csv(f, records);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  const ScenarioConfig& cfg = spec.scenario;
  const int train = cfg.timeline.train_slots;
  const int test = cfg.timeline.test_slots;
  const int total = train + test;

  if (options.write_files) {
    ensure_dir(spec.out_dir);
    ensure_dir(spec.out_dir / "records");
  }

  ExperimentResult result;
  result.frame.algorithms = spec.algorithms;
  result.frame.train_slots = train;
  result.frame.test_slots = test;

  const auto seeds = spec.seeds();
  for (int k = 0; k < static_cast<int>(seeds.size()); ++k) {
    const std::uint64_t seed = seeds[k];
    const std::string ctx = "trial " + std::to_string(k) + " (seed " + std::to_string(seed) + "): ";
    if (options.progress) options.progress(ctx + "generating channel");
    try {
      const ChannelTrace trace = generate_trace(cfg, seed, total + 2);
      TrialOutcome outcome;
      outcome.seed = seed;
      outcome.rho = trace.rho;
      std::vector<std::vector<double>> per_algo;
      for (const auto& algo : spec.algorithms) {
        if (options.progress) options.progress(ctx + algo);
        std::vector<SlotRecord> records;
        if (algo == "masc") {
          TraceSource source(trace.gains);
          Trainer trainer(cfg, seed, source);
          trainer.train(train);
          records = trainer.records();
          const auto tested = trainer.test(test);
          records.insert(records.end(), tested.begin(), tested.end());
          outcome.masc_events = trainer.events();
          outcome.masc_diagnostics = trainer.diagnostics();
          if (options.write_files) {
            auto f = open_out(spec.out_dir / ("train_log_" + std::to_string(k) + ".csv"));
            write_training_log_csv(f, trainer.log());
          }
        } else {
          records = run_baseline(algo, cfg, trace.gains, total, seed, spec.oracle_levels);
        }
        std::vector<double> s;
        s.reserve(records.size());
        for (const auto& r : records) s.push_back(r.sum_rate);
        per_algo.push_back(std::move(s));
        if (options.write_files)
          write_records(spec.out_dir / "records" /
                            ("trial_" + std::to_string(k) + "_" + algo + ".csv"),
                        records);
      }
      result.frame.series.push_back(std::move(per_algo));
      result.trials.push_back(outcome);
      if (options.write_files)
        write_trial_csv(spec.out_dir / ("trial_" + std::to_string(k) + ".csv"), result.frame, k);
    } catch (const Error& e) {
      raise(e.kind(), ctx + e.what());
    }
  }

  if (options.write_files) {
    write_aggregate_csv(spec.out_dir / "aggregate.csv", result.frame);
    emit_plot_data(result.frame, spec.out_dir, spec.window);
    write_manifest(spec, result);
  }
  return result;
}

}  // namespace hetnet
