#include "sgcp/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App *cmd, CommonFlags &flags) {
  cmd->add_option("--config", flags.config, "Flat key = value configuration file");
  cmd->add_option("--seed", flags.seed, "Seed for all randomness (default 0)");
  cmd->add_option("--method", flags.method, "Inference method: vb or laplace");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--set", flags.overrides, "Override a config key (key=value); repeatable");
}

sgcp::RunConfig resolve(const CommonFlags &flags) {
  sgcp::RunConfig config;
  if (!flags.config.empty()) {
    sgcp::load_config_file(config, flags.config);
  }
  for (const auto &o : flags.overrides) {
    sgcp::apply_override(config, o);
  }
  if (flags.seed) {
    config.seed = *flags.seed;
  }
  if (flags.method) {
    config.method = sgcp::parse_method(*flags.method);
  }
  if (flags.out) {
    config.out = *flags.out;
  }
  return config;
}

std::string one_line(std::string message) {
  for (char &c : message) {
    if (c == '\n' || c == '\r') {
      c = ' ';
    }
  }
  return message;
}

} // namespace

int main(int argc, char **argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("sgcp"));
  spdlog::set_pattern("warning: %v");
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Sigmoidal Gaussian Cox process inference"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string preset;
  std::optional<double> scale;
  std::string events;
  std::string posterior;
  std::string test;
  std::optional<std::string> truth;

  auto *simulate = app.add_subcommand("simulate", "Simulate events and the true intensity");
  add_common(simulate, flags);
  simulate->add_option("--preset", preset, "adams1d or sgcp");
  simulate->add_option("--scale", scale, "Rate multiplier for adams1d");

  auto *fit = app.add_subcommand("fit", "Fit a posterior to events");
  add_common(fit, flags);
  fit->add_option("--events", events, "Events CSV")->required();

  auto *evaluate = app.add_subcommand("evaluate", "Test-set metrics as JSON");
  add_common(evaluate, flags);
  evaluate->add_option("--posterior", posterior, "posterior.json")->required();
  evaluate->add_option("--test", test, "Test events CSV")->required();
  evaluate->add_option("--truth", truth, "truth_grid.csv for the RMSE");

  auto *predict = app.add_subcommand("predict", "Posterior intensity on the evaluation grid");
  add_common(predict, flags);
  predict->add_option("--posterior", posterior, "posterior.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    sgcp::RunConfig config = resolve(flags);
    if (simulate->parsed()) {
      if (!preset.empty()) {
        config.simulate_preset = preset;
      }
      if (scale) {
        config.simulate_scale = *scale;
      }
      std::cout << sgcp::cmd_simulate(config).dump() << '\n';
    } else if (fit->parsed()) {
      std::cout << sgcp::cmd_fit(config, events).dump() << '\n';
    } else if (evaluate->parsed()) {
      std::optional<sgcp::Method> expected;
      if (flags.method) {
        expected = config.method;
      }
      std::optional<std::filesystem::path> truth_path;
      if (truth) {
        truth_path = *truth;
      }
      std::cout << sgcp::cmd_evaluate(config, posterior, test, truth_path, expected).dump() << '\n';
    } else if (predict->parsed()) {
      sgcp::cmd_predict(config, posterior);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
