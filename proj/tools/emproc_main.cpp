#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "emproc/errors.hpp"
#include "emproc/runner.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

struct CommonArgs {
  std::string config_path;
  int workers = 0;  // 0: unset, falls back to env then 1
  std::string out_dir;
  std::string format;
};

int resolve_workers(int cli_value) {
  if (cli_value > 0) return cli_value;
  if (const char* env = std::getenv("EMPROC_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return 1;
}

void apply_output_overrides(emproc::ExperimentConfig& config,
                            const CommonArgs& args) {
  if (!args.out_dir.empty()) config.output.directory = args.out_dir;
  if (args.format == "csv") {
    config.output.csv = true;
    config.output.json = false;
  } else if (args.format == "json") {
    config.output.csv = false;
    config.output.json = true;
  } else if (args.format == "both") {
    config.output.csv = true;
    config.output.json = true;
  } else if (!args.format.empty()) {
    throw emproc::ConfigError("unknown --format value '" + args.format + "'");
  }
}

int report_and_exit_code(const emproc::ExperimentConfig& config,
                         const emproc::RunResult& result,
                         const std::string& subcommand) {
  emproc::write_reports(config, result, config.output.directory, subcommand);
  for (const auto& check : result.checks) {
    std::cout << (check.pass ? "PASS" : "FAIL") << ' ' << check.name;
    if (check.degenerate) std::cout << " (degenerate: skipped)";
    std::cout << '\n';
    for (const auto& note : check.notes) std::cout << "  - " << note << '\n';
  }
  std::cout << (result.pass ? "all checks passed" : "CHECKS FAILED")
            << " (digest " << result.digest << ", rng draws "
            << result.rng_draws << ")\n";
  return result.pass ? kExitPass : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emproc: empirical-process and L-statistic verification lab"};
  app.require_subcommand(1);

  CommonArgs args;
  bool verify_all = false;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    if (config_required) {
      sub->add_option("--config", args.config_path, "experiment config (JSON)")
          ->required();
    } else {
      sub->add_option("--config", args.config_path, "experiment config (JSON)");
    }
    sub->add_option("--workers", args.workers,
                    "worker threads (or EMPROC_WORKERS)");
    sub->add_option("--out", args.out_dir, "output directory override");
    sub->add_option("--format", args.format, "csv|json|both");
  };

  CLI::App* cmd_oracle = app.add_subcommand("oracle", "limit surfaces only, no simulation");
  add_common(cmd_oracle, true);
  CLI::App* cmd_simulate = app.add_subcommand("simulate", "Monte Carlo moments without oracle pairing");
  add_common(cmd_simulate, true);
  CLI::App* cmd_verify = app.add_subcommand("verify", "run configured checks against oracles");
  add_common(cmd_verify, false);
  cmd_verify->add_flag("--all", verify_all, "run the bundled acceptance criteria");
  CLI::App* cmd_bridge = app.add_subcommand("bridge", "bivariate quantile-process checks only");
  add_common(cmd_bridge, true);
  CLI::App* cmd_lstat = app.add_subcommand("lstat", "L-statistic checks only");
  add_common(cmd_lstat, true);
  CLI::App* cmd_tightness = app.add_subcommand("tightness", "increment-variance scan only");
  add_common(cmd_tightness, true);
  CLI::App* cmd_describe = app.add_subcommand("describe", "print the resolved plan without executing");
  add_common(cmd_describe, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  const int workers = resolve_workers(args.workers);

  try {
    if (cmd_verify->parsed() && verify_all) {
      const std::string out = args.out_dir.empty() ? "acceptance_out" : args.out_dir;
      const auto outcomes = emproc::run_acceptance(workers, out);
      bool pass = true;
      for (const auto& o : outcomes) {
        std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << o.criterion << " - "
                  << o.description << '\n';
        for (const auto& note : o.notes) std::cout << "  - " << note << '\n';
        pass = pass && o.pass;
      }
      std::cout << (pass ? "acceptance criteria passed" : "ACCEPTANCE FAILED")
                << '\n';
      return pass ? kExitPass : kExitCheckFailure;
    }

    if (args.config_path.empty()) {
      throw emproc::ConfigError("missing --config (or use verify --all)");
    }
    emproc::ExperimentConfig config = emproc::load_config(args.config_path);

    if (cmd_describe->parsed()) {
      std::cout << emproc::describe(config);
      return kExitPass;
    }

    apply_output_overrides(config, args);

    if (cmd_oracle->parsed()) {
      const auto result = emproc::run_oracle(config, workers);
      return report_and_exit_code(config, result, "oracle");
    }
    if (cmd_simulate->parsed()) {
      const auto result = emproc::run_simulate(config, workers);
      return report_and_exit_code(config, result, "simulate");
    }
    if (cmd_verify->parsed()) {
      const auto result = emproc::run_checks(config, workers);
      return report_and_exit_code(config, result, "verify");
    }
    if (cmd_bridge->parsed()) {
      const auto result = emproc::run_checks(config, workers, std::string("bridge"));
      return report_and_exit_code(config, result, "bridge");
    }
    if (cmd_lstat->parsed()) {
      const auto result = emproc::run_checks(config, workers, std::string("lstat"));
      return report_and_exit_code(config, result, "lstat");
    }
    if (cmd_tightness->parsed()) {
      const auto result = emproc::run_checks(config, workers, std::string("tightness"));
      return report_and_exit_code(config, result, "tightness");
    }
    throw emproc::ConfigError("unknown subcommand");
  } catch (const emproc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const emproc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const emproc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what()
              << " (achieved tolerance " << e.achieved_tolerance << ")\n";
    return kExitNumericalError;
  } catch (const emproc::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumericalError;
  }
}
