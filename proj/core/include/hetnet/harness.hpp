#pragma once

// Multi-trial experiments: every algorithm in a trial sees the same channel
// realization, results land in CSV files under one output directory.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetnet/masc.hpp"
#include "hetnet/scenario.hpp"

namespace hetnet {

inline constexpr std::string_view kVersion = "0.1.0";

// Known algorithm names: masc, wmmse, fp, full, random, oracle.
bool known_algorithm(std::string_view name);

struct ExperimentSpec {
  ScenarioConfig scenario;
  std::vector<std::string> algorithms{"masc", "wmmse", "fp", "full", "random"};
  std::uint64_t master_seed = 1;
  int window = 200;
  int oracle_levels = 101;
  std::filesystem::path out_dir = "out";

  int trials() const { return scenario.timeline.trials; }
  std::vector<std::uint64_t> seeds() const;
  void validate() const;
};

// Preset name ("two-layer", "three-layer") or a JSON file path. The file's
// optional "experiment" section sets algorithms, seed, window, oracle_levels
// and out.
ExperimentSpec load_config(std::string_view path_or_preset);
ExperimentSpec experiment_from_json(std::string_view text);

enum class Stage { Train, Test };
std::string_view to_string(Stage s);

struct MetricsFrame {
  std::vector<std::string> algorithms;
  int train_slots = 0;
  int test_slots = 0;
  // series[trial][algorithm]: sum-rate (bps) per slot, training slots first.
  std::vector<std::vector<std::vector<double>>> series;

  int trials() const { return static_cast<int>(series.size()); }
  int algorithm_index(std::string_view name) const;  // -1 when absent
  // One trial's sum-rates for one stage.
  std::vector<double> stage_series(int trial, int algo, Stage stage) const;
  // Per-slot mean and (population) std across trials.
  std::vector<double> cross_trial_mean(int algo, Stage stage) const;
  std::vector<double> cross_trial_std(int algo, Stage stage) const;
};

// out[t] = mean(series[max(0, t-window+1) .. t]).
std::vector<double> moving_average(std::span<const double> series, int window);

struct TrialOutcome {
  std::uint64_t seed = 0;
  double rho = 0.0;
  std::optional<TrainerEvents> masc_events;
  std::optional<Diagnostics> masc_diagnostics;
};

struct ExperimentResult {
  MetricsFrame frame;
  std::vector<TrialOutcome> trials;
};

struct RunOptions {
  bool write_files = true;
  std::function<void(const std::string&)> progress;
};

// Runs every trial and algorithm, writes trial_<k>.csv, records/, train logs,
// aggregate and plot data and manifest.json.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

// One algorithm's per-slot sum-rates on one trial's gain trace. Trace entry 0
// is the bootstrap slot, entry t+1 is slot t.
std::vector<SlotRecord> run_baseline(std::string_view algorithm, const ScenarioConfig& config,
                                     std::span<const GainMatrix> trace, int slots,
                                     std::uint64_t trial_seed, int oracle_levels);

void write_trial_csv(const std::filesystem::path& path, const MetricsFrame& frame, int trial);
void write_aggregate_csv(const std::filesystem::path& path, const MetricsFrame& frame);
// figure_train.csv, figure_test.csv (moving averages of the cross-trial mean)
// and summary.csv (one row per algorithm and stage).
void emit_plot_data(const MetricsFrame& frame, const std::filesystem::path& out_dir, int window);

// Rebuilds the frame from the trial_<k>.csv files in `out_dir`.
MetricsFrame load_frame(const std::filesystem::path& out_dir);

struct StageSummary {
  std::string algorithm;
  Stage stage = Stage::Train;
  double mean = 0.0;       // over all slots and trials
  double tail_mean = 0.0;  // last `window` slots of the stage, over trials
  double trial_std = 0.0;  // population std of per-trial stage means
};
std::vector<StageSummary> summarize(const MetricsFrame& frame, int window);

}  // namespace hetnet
