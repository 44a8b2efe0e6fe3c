#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace redistopt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SolverAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat experiment description; JSON config file keys and --key=value flags
/// map one-to-one onto these fields, flags winning.
struct ExperimentConfig {
  std::string task;                 ///< sparse_group|tree|matcomp|tv_denoise|rsc
  std::string solver;
  std::string regularizer = "lsp:beta=0.5,theta=0.5";
  double lambda = 0.1;
  double mu = 0.1;
  double tau = 0.0;                 ///< 0 = automatic stepsize
  double tolerance = 1e-10;
  double eps_base = 0.95;
  double smoothing_grad_tol = 1e-6;
  int max_iterations = 500;
  int shards = 4;                   ///< consensus split count for admm
  int n_groups = 10;                ///< group count when data comes from a file
  std::uint64_t seed = 0;
  std::string data;                 ///< path or "synthetic:k=v,..." recipe
  std::string format;               ///< libsvm|triples|pgm|csv_matrix ("" = infer)
  std::string out = "results";

  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  static ExperimentConfig from_json(const nlohmann::json& j);
  void apply_flag(const std::string& key, const std::string& value);
  void validate() const;  ///< throws ConfigError on bad combinations
  std::filesystem::path run_dir() const;
};

struct RunOutput {
  nlohmann::json metrics;
  std::filesystem::path dir;
};

/// Builds the problem, runs the solver, persists trace.csv / metrics.json /
/// the solution artifact under run_dir(). Throws ConfigError, DataError or
/// SolverAbort (partial trace is still written on abort).
RunOutput run_experiment(const ExperimentConfig& config);

struct CompareRow {
  std::string solver;
  std::string status;  ///< "ok" or the error text
  nlohmann::json metrics;
};

/// Runs each member config (same task and seed required), recording
/// failures without stopping the rest, and writes a solver-by-metric CSV
/// table. Member runs may execute in parallel, capped by the
/// REDIST_OPT_THREADS environment variable (0 or unset = hardware).
std::vector<CompareRow> compare_experiments(
    const std::vector<ExperimentConfig>& configs,
    const std::filesystem::path& table_path);

int max_threads_from_env();

}  // namespace redistopt
