// dppfit: simulate, fit, replicate and compare stationary DPP models.
//
// Exit codes: 0 ok, 1 estimation failure, 2 input error.

#include "dppfit/error.hpp"
#include "dppfit/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> pattern;
  std::optional<std::string> window;
  bool se = false;
  bool ic = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--config", a.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "override the config seed");
  cmd->add_option("--out", a.out, "output directory (overrides output_dir)");
  cmd->add_option("--threads", a.threads, "worker threads (default: DPPFIT_THREADS, then all cores)")
      ->check(CLI::NonNegativeNumber);
}

dppfit::ExperimentConfig load(const Args& a) {
  auto config = dppfit::ExperimentConfig::from_file(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.out) config.output_dir = *a.out;
  return config;
}

int run(const std::string& command, const Args& a) {
  using namespace dppfit;
  const ExperimentConfig config = load(a);
  const RunOptions options{a.threads, a.se, a.ic};

  if (command == "simulate") {
    const auto paths = run_simulate(config, options);
    fmt::print("wrote {} files to {}\n", paths.size(), config.output_dir.string());
  } else if (command == "fit") {
    if (!a.pattern) throw ValidationError("fit needs --pattern");
    const RectWindow window = a.window ? read_window_json(*a.window) : config.window();
    const PointPattern pattern = read_csv(*a.pattern, window);
    const FitOutput fit = run_fit(config, pattern, options);
    const std::string text = to_json(fit, config).dump(2);
    if (a.out) {
      std::filesystem::create_directories(*a.out);
      const auto path = std::filesystem::path(*a.out) / (config.name + "_fit.json");
      std::ofstream(path, std::ios::binary) << text << '\n';
    }
    std::cout << text << '\n';
  } else if (command == "replicate") {
    const ReplicationSummary summary = run_replications(config, options);
    write_replication(summary, config.output_dir);
    fmt::print("{}: {} of {} replicates ok\n", config.name, summary.successes, summary.records.size());
    fmt::print("  lambda mean {:.6g} sd {}\n", summary.lambda.mean,
               summary.lambda.sd ? fmt::format("{:.4g}", *summary.lambda.sd) : "NA");
    fmt::print("  alpha  mean {:.6g} sd {}\n", summary.alpha.mean,
               summary.alpha.sd ? fmt::format("{:.4g}", *summary.alpha.sd) : "NA");
    if (summary.alpha_coverage) fmt::print("  alpha 95% coverage {:.3f}\n", *summary.alpha_coverage);
  } else if (command == "compare") {
    const ComparisonSummary summary = run_comparison(config, options);
    write_comparison(summary, config.output_dir);
    fmt::print("{}: truth {}, {} replicates ok\n", config.name, config.model().name(), summary.successes);
    for (std::size_t k = 0; k < summary.models.size(); ++k)
      fmt::print("  {:<16} selected {}\n", summary.models[k], summary.selections[k]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and composite likelihood fitting of stationary determinantal point processes"};
  app.require_subcommand(1);
  Args args;
  auto* simulate = app.add_subcommand("simulate", "write simulated patterns");
  auto* fit = app.add_subcommand("fit", "fit a pattern");
  auto* replicate = app.add_subcommand("replicate", "simulate and fit R replicates");
  auto* compare = app.add_subcommand("compare", "model selection by IC over R replicates");
  for (auto* cmd : {simulate, fit, replicate, compare}) add_common(cmd, args);
  fit->add_option("--pattern", args.pattern, "point CSV")->check(CLI::ExistingFile);
  fit->add_option("--window", args.window, "window sidecar JSON (default: [0, n]^d from the config)")
      ->check(CLI::ExistingFile);
  for (auto* cmd : {fit, replicate}) {
    cmd->add_flag("--se", args.se, "sandwich standard errors and Wald intervals");
    cmd->add_flag("--ic", args.ic, "information criterion (fit: every candidate)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), args);
  } catch (const dppfit::InputError& e) {
    fmt::print(stderr, "dppfit: input error: {}\n", e.what());
    return 2;
  } catch (const dppfit::EstimationError& e) {
    fmt::print(stderr, "dppfit: estimation failed: {}\n", e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(stderr, "dppfit: input error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "dppfit: error: {}\n", e.what());
    return 1;
  }
}
