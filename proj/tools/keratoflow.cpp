// keratoflow command-line front end.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "keratoflow/error.hpp"
#include "keratoflow/pipeline/commands.hpp"

namespace {

using keratoflow::pipeline::CommandResult;
using keratoflow::pipeline::ExperimentConfig;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> preset;
  std::optional<std::size_t> repetitions;
  std::optional<std::size_t> epochs;
  std::optional<int> jobs;
  std::optional<std::string> input;
};

void add_common(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "Experiment config JSON");
  cmd.add_option("--seed", f.seed, "Base seed (repetition r uses seed + r)");
  cmd.add_option("--out", f.out, "Output directory");
  cmd.add_option("--preset", f.preset, "Synthetic cohort preset")
      ->check(CLI::IsMember({"separable", "realistic"}));
  cmd.add_option("--repetitions", f.repetitions, "Number of repetitions");
  cmd.add_option("--epochs", f.epochs, "Training epochs");
  cmd.add_option("--jobs", f.jobs, "Worker threads for repetitions");
  cmd.add_option("--input", f.input, "Input CSV");
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.preset) c.preset = *f.preset;
  if (f.repetitions) c.repetitions = *f.repetitions;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.input) c.input = *f.input;
  return c;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("keratoflow");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("KERATOFLOW_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept it when asked for.
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("KERATOFLOW_LOG='{}' is not a log level; using info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Keratoconus severity grading, clustering and classification"};
  app.require_subcommand(1);
  Flags flags;
  using Command = CommandResult (*)(const ExperimentConfig&);
  const std::pair<const char*, std::pair<const char*, Command>> commands[] = {
      {"generate", {"Write a synthetic cohort CSV", keratoflow::pipeline::cmd_generate}},
      {"grade", {"Apply the grading rules to a cohort CSV", keratoflow::pipeline::cmd_grade}},
      {"run-vae", {"VAE embedding + GMM clustering repetitions", keratoflow::pipeline::cmd_run_vae}},
      {"run-mlp", {"MLP classification repetitions", keratoflow::pipeline::cmd_run_mlp}},
      {"evaluate", {"Recompute metrics from a predictions CSV", keratoflow::pipeline::cmd_evaluate}},
      {"plot", {"Re-render SVG plots from a saved CSV", keratoflow::pipeline::cmd_plot}},
  };
  for (const auto& [name, entry] : commands) add_common(*app.add_subcommand(name, entry.first), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const ExperimentConfig config = resolve(flags);
    for (const auto& [name, entry] : commands) {
      if (app.got_subcommand(name)) {
        const auto result = entry.second(config);
        std::cout << result.summary;
        return 0;
      }
    }
  } catch (const keratoflow::ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  } catch (const keratoflow::RuntimeFailure& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitValidation;
}
