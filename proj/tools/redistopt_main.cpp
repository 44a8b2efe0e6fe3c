// Command-line driver: `redistopt run` executes one experiment described by
// a JSON config and/or --key=value flags; `redistopt compare` runs several
// configs sharing a task and seed and tabulates their metrics.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "redistopt/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct FlagOverride {
  std::string key;
  std::string value;
};

// Accepts raw "--key=value" tokens that CLI11 did not claim.
std::vector<FlagOverride> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<FlagOverride> out;
  for (const auto& token : extras) {
    std::string body = token;
    if (body.rfind("--", 0) == 0) body = body.substr(2);
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw redistopt::ConfigError("expected --key=value, got '" + token + "'");
    }
    out.push_back({body.substr(0, eq), body.substr(eq + 1)});
  }
  return out;
}

redistopt::ExperimentConfig load_config(const std::string& config_path,
                                        const std::vector<std::string>& extras) {
  redistopt::ExperimentConfig config;
  if (!config_path.empty()) {
    config = redistopt::ExperimentConfig::from_json_file(config_path);
  }
  for (const auto& [key, value] : parse_overrides(extras)) {
    config.apply_flag(key, value);
  }
  return config;
}

int classify(const std::exception& e) {
  if (dynamic_cast<const redistopt::ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const redistopt::DataError*>(&e)) return kExitData;
  if (dynamic_cast<const redistopt::SolverAbort*>(&e)) return kExitSolver;
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonconvex-regularizer redistribution solvers"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  run_cmd->add_option("--config", run_config, "JSON config file");
  run_cmd->allow_extras();

  std::vector<std::string> compare_configs;
  std::string compare_table = "compare.csv";
  auto* compare_cmd =
      app.add_subcommand("compare", "run several configs and tabulate");
  compare_cmd->add_option("configs", compare_configs, "JSON config files");
  compare_cmd->add_option("--table", compare_table, "output CSV table path");
  compare_cmd->allow_extras();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto config = load_config(run_config, run_cmd->remaining());
      const auto result = redistopt::run_experiment(config);
      std::printf("%s\n", result.metrics.dump(2).c_str());
      std::printf("artifacts: %s\n", result.dir.string().c_str());
      return kExitOk;
    }
    std::vector<redistopt::ExperimentConfig> configs;
    const auto overrides = parse_overrides(compare_cmd->remaining());
    for (const auto& path : compare_configs) {
      auto config = redistopt::ExperimentConfig::from_json_file(path);
      for (const auto& [key, value] : overrides) config.apply_flag(key, value);
      configs.push_back(std::move(config));
    }
    const auto rows = redistopt::compare_experiments(configs, compare_table);
    for (const auto& row : rows) {
      std::printf("%-16s %-8s %s\n", row.solver.c_str(), row.status.c_str(),
                  row.metrics.dump().c_str());
    }
    std::printf("table: %s\n", compare_table.c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify(e);
  }
}
