// hetnet: run power-control experiments and summarize their output.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetnet/error.hpp"
#include "hetnet/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> train_slots;
  std::optional<int> test_slots;
  std::optional<int> window;
  std::optional<std::string> out;
  std::vector<std::string> algos;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* cfg = cmd->add_option("--config", c.config, "JSON experiment file");
  auto* pre = cmd->add_option("--preset", c.preset, "two-layer or three-layer");
  cfg->excludes(pre);
  pre->excludes(cfg);
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--trials", c.trials, "number of trials")->check(CLI::PositiveNumber);
  cmd->add_option("--train-slots", c.train_slots, "training-stage length");
  cmd->add_option("--test-slots", c.test_slots, "testing-stage length");
  cmd->add_option("--window", c.window, "moving-average window")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--algos", c.algos, "comma-separated algorithms")->delimiter(',');
  cmd->add_flag("--quiet", c.quiet, "no progress output");
}

hetnet::ExperimentSpec build_spec(const Common& c, const std::vector<std::string>& default_algos) {
  using hetnet::ErrorKind;
  hetnet::require(!c.config.empty() || !c.preset.empty(), ErrorKind::Config,
                  "one of --config or --preset is required");
  hetnet::ExperimentSpec spec = hetnet::load_config(c.config.empty() ? c.preset : c.config);
  if (!default_algos.empty()) spec.algorithms = default_algos;
  if (!c.algos.empty()) spec.algorithms = c.algos;
  if (c.seed) spec.master_seed = *c.seed;
  if (c.trials) spec.scenario.timeline.trials = *c.trials;
  if (c.train_slots) spec.scenario.timeline.train_slots = *c.train_slots;
  if (c.test_slots) spec.scenario.timeline.test_slots = *c.test_slots;
  if (c.window) spec.window = *c.window;
  if (c.out) spec.out_dir = *c.out;
  spec.validate();
  return spec;
}

int run(const Common& c, const std::vector<std::string>& default_algos) {
  const hetnet::ExperimentSpec spec = build_spec(c, default_algos);
  hetnet::RunOptions opts;
  if (!c.quiet) opts.progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
  const auto result = hetnet::run_experiment(spec, opts);
  for (const auto& s : hetnet::summarize(result.frame, spec.window))
    std::cout << s.algorithm << ' ' << hetnet::to_string(s.stage) << " mean=" << s.mean
              << " tail=" << s.tail_mean << '\n';
  std::cout << "wrote " << spec.out_dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous-network power control experiments"};
  app.require_subcommand(1);

  Common train, baseline, oracle;
  add_common(app.add_subcommand("train", "train and test MASC alongside chosen baselines"), train);
  add_common(app.add_subcommand("baseline", "classical solvers only"), baseline);
  add_common(app.add_subcommand("oracle", "grid-search oracle (at most 4 APs)"), oracle);

  std::string report_dir;
  int report_window = 200;
  auto* report = app.add_subcommand("report", "rebuild aggregate and plot data from trial CSVs");
  report->add_option("--out", report_dir, "experiment output directory")->required();
  report->add_option("--window", report_window, "moving-average window")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hetnet::exit_code(hetnet::ErrorKind::Config);
  }

  try {
    if (app.got_subcommand("train")) return run(train, {});
    if (app.got_subcommand("baseline")) {
      for (const auto& a : baseline.algos)
        hetnet::require(a != "masc", hetnet::ErrorKind::Config, "baseline: use `train` for masc");
      return run(baseline, {"wmmse", "fp", "full", "random"});
    }
    if (app.got_subcommand("oracle")) return run(oracle, {"oracle"});
    const auto frame = hetnet::load_frame(report_dir);
    hetnet::write_aggregate_csv(std::filesystem::path(report_dir) / "aggregate.csv", frame);
    hetnet::emit_plot_data(frame, report_dir, report_window);
    for (const auto& s : hetnet::summarize(frame, report_window))
      std::cout << s.algorithm << ' ' << hetnet::to_string(s.stage) << " mean=" << s.mean
                << " tail=" << s.tail_mean << " trial_std=" << s.trial_std << '\n';
    return 0;
  } catch (const hetnet::Error& e) {
    std::cerr << "error (" << hetnet::to_string(e.kind()) << "): " << e.what() << '\n';
    return hetnet::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
