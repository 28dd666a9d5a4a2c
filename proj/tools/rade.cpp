// Command-line front end: run single episodes, sweep the experiment grids,
// materialize Static model parameter files, and gradient-check the risk-model
// backward pass. The seed used for a command resolves in this order:
// --seed flag, RADE_SEED environment variable, `seed` key in the config.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rade/harness.hpp"

namespace {

std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag.has_value()) return flag;
  const char* env = std::getenv("RADE_SEED");
  if (env == nullptr) return std::nullopt;
  const std::string text(env);
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw rade::ConfigError("RADE_SEED: expected unsigned integer, got '" + text + "'");
  }
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RADE: online learning of SLA decomposition across network domains"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string feedback_log;
  std::optional<std::uint64_t> seed_flag;
  bool verbose = false;

  CLI::App* run = app.add_subcommand("run", "Run one episode and write its trace CSV");
  run->add_option("--config", config_path, "Episode config file")->required();
  run->add_option("--out", out_path, "Output CSV path")->required();
  run->add_option("--seed", seed_flag, "Seed override");
  run->add_option("--feedback-log", feedback_log, "Also write the feedback log CSV here");
  run->add_flag("--verbose", verbose, "Print a run summary");

  CLI::App* sweep = app.add_subcommand("sweep", "Run the experiment grids and write figure CSVs");
  sweep->add_option("--config", config_path, "Sweep config file")->required();
  sweep->add_option("--out", out_path, "Output directory")->required();
  sweep->add_option("--seed", seed_flag, "Replace the seed list with this single seed");
  sweep->add_flag("--verbose", verbose, "Print one line per episode");

  CLI::App* train =
      app.add_subcommand("train-static", "Train Static models and write parameter files");
  train->add_option("--config", config_path, "Episode config file")->required();
  train->add_option("--out", out_path, "Output directory for domain_<d>.json files")->required();
  train->add_option("--seed", seed_flag, "Seed override");
  train->add_flag("--verbose", verbose, "Print one line per written file");

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  gradcheck->add_option("--seed", seed_flag, "Seed for the randomized trials");
  gradcheck->add_flag("--verbose", verbose, "No extra output; accepted for symmetry");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::optional<std::uint64_t> seed = resolve_seed(seed_flag);
    if (run->parsed()) {
      const std::optional<std::string> fb =
          feedback_log.empty() ? std::nullopt : std::optional<std::string>(feedback_log);
      rade::cmd_run(config_path, out_path, seed, fb, verbose, std::cout);
    } else if (sweep->parsed()) {
      rade::cmd_sweep(config_path, out_path, seed, verbose, std::cout);
    } else if (train->parsed()) {
      rade::cmd_train_static(config_path, out_path, seed, verbose, std::cout);
    } else if (gradcheck->parsed()) {
      const rade::GradCheckReport report = rade::run_gradcheck(seed.value_or(1));
      std::cout << "gradcheck: max relative error " << rade::format_g6(report.max_rel_err)
                << " over " << report.trials << " trials: " << (report.pass() ? "PASS" : "FAIL")
                << '\n';
      return report.pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
