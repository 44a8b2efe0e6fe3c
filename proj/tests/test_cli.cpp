#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "redistopt/experiment.hpp"
#include "redistopt/io.hpp"

using namespace redistopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "redistopt_cli_test";
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Trace rows without the wall-clock column.
std::vector<std::string> deterministic_trace_rows(const fs::path& trace) {
  std::ifstream in(trace);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto last_comma = line.rfind(',');
    rows.push_back(line.substr(0, last_comma));
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(REDISTOPT_CLI_PATH) + " " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config parsing and flag precedence") {
  const auto path = scratch_dir() / "config.json";
  write_text(path, R"({"task": "sparse_group", "solver": "nmapg",
                       "lambda": 0.25, "seed": 3,
                       "data": "synthetic:d=20,groups=4,n=30"})");
  ExperimentConfig config = ExperimentConfig::from_json_file(path);
  CHECK(config.task == "sparse_group");
  CHECK(config.lambda == 0.25);
  CHECK(config.seed == 3);
  config.apply_flag("lambda", "0.5");  // flag overrides the file value
  CHECK(config.lambda == 0.5);
  CHECK_THROWS_AS(config.apply_flag("bogus", "1"), ConfigError);
  CHECK_THROWS_AS(config.apply_flag("lambda", "abc"), ConfigError);

  ExperimentConfig bad = config;
  bad.solver = "fw";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.task = "nonsense";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  ExperimentConfig missing = config;
  missing.data = "/nonexistent/file.libsvm";
  CHECK_THROWS_AS(missing.validate(), ConfigError);
}

TEST_CASE("run writes metrics, trace and solution deterministically") {
  ExperimentConfig config;
  config.task = "sparse_group";
  config.solver = "nmapg";
  config.regularizer = "lsp:beta=1,theta=0.5";
  config.lambda = 0.2;
  config.mu = 0.0;
  config.max_iterations = 150;
  config.seed = 7;
  config.data = "synthetic:d=20,groups=4,n=40";
  config.out = (scratch_dir() / "out_a").string();

  const RunOutput first = run_experiment(config);
  CHECK(first.metrics.contains("objective"));
  CHECK(first.metrics.contains("rmse"));
  CHECK(first.metrics.contains("abs_error"));
  CHECK(first.metrics.contains("time_ms"));
  CHECK(fs::exists(first.dir / "trace.csv"));
  CHECK(fs::exists(first.dir / "metrics.json"));
  CHECK(fs::exists(first.dir / "solution.csv"));

  ExperimentConfig again = config;
  again.out = (scratch_dir() / "out_b").string();
  const RunOutput second = run_experiment(again);

  // Identical up to wall-clock fields.
  auto strip_time = [](nlohmann::json j) {
    j.erase("time_ms");
    return j;
  };
  CHECK(strip_time(first.metrics) == strip_time(second.metrics));
  CHECK(deterministic_trace_rows(first.dir / "trace.csv") ==
        deterministic_trace_rows(second.dir / "trace.csv"));
}

TEST_CASE("matcomp run reports the recovered rank") {
  ExperimentConfig config;
  config.task = "matcomp";
  config.solver = "fw";
  config.regularizer = "lsp:beta=1,theta=1";
  config.mu = 1.0;
  config.max_iterations = 6;
  config.seed = 2;
  config.data = "synthetic:m=12,n=10,rank=2,observe=0.6";
  config.out = (scratch_dir() / "out_mc").string();
  const RunOutput run = run_experiment(config);
  CHECK(run.metrics.contains("rank"));
  CHECK(fs::exists(run.dir / "solution.factors"));
  const FactoredMatrix factor = read_factors(run.dir / "solution.factors");
  CHECK(factor.rank() == run.metrics.at("rank").get<int>());
}

TEST_CASE("tv denoise rmse matches an independent recomputation") {
  ExperimentConfig config;
  config.task = "tv_denoise";
  config.solver = "inexact_nmapg";
  config.regularizer = "lsp:beta=1,theta=1";
  config.mu = 0.4;
  config.max_iterations = 60;
  config.seed = 4;
  config.data = "synthetic:m=8,n=8,corrupt=0.1";
  config.out = (scratch_dir() / "out_tv").string();
  const RunOutput run = run_experiment(config);
  REQUIRE(run.metrics.contains("rmse"));

  // Recompute from the written solution and the regenerated clean image.
  const Eigen::MatrixXd solution = ingest_csv_matrix(run.dir / "solution.csv");
  const DenoiseInstance inst = synth_denoise(8, 8, 0.1, 4);
  const double rmse = std::sqrt((solution - inst.clean.pixels).squaredNorm() /
                                static_cast<double>(solution.size()));
  CHECK(run.metrics.at("rmse").get<double>() == doctest::Approx(rmse).epsilon(1e-12));
  CHECK(fs::exists(run.dir / "solution.pgm"));
}

TEST_CASE("compare runs members and tabulates, tolerating failures") {
  ExperimentConfig good;
  good.task = "sparse_group";
  good.solver = "nmapg";
  good.regularizer = "lsp:beta=1,theta=0.5";
  good.lambda = 0.2;
  good.mu = 0.0;
  good.max_iterations = 80;
  good.seed = 5;
  good.data = "synthetic:d=12,groups=3,n=30";
  good.out = (scratch_dir() / "out_cmp").string();

  ExperimentConfig broken = good;
  broken.solver = "scp";
  broken.lambda = 0.2;
  broken.mu = 0.3;  // scp rejects the mixed split

  const auto table = scratch_dir() / "compare.csv";
  const auto rows = compare_experiments({good, broken}, table);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == "ok");
  CHECK(rows[1].status != "ok");
  CHECK(fs::exists(table));

  // Mismatched seeds are rejected.
  ExperimentConfig other_seed = good;
  other_seed.seed = 6;
  CHECK_THROWS_AS(compare_experiments({good, other_seed}, table), ConfigError);

  // Empty list produces an empty table.
  const auto empty_table = scratch_dir() / "empty.csv";
  CHECK(compare_experiments({}, empty_table).empty());
  CHECK(fs::exists(empty_table));
}

TEST_CASE("REDIST_OPT_THREADS caps compare parallelism") {
  setenv("REDIST_OPT_THREADS", "2", 1);
  CHECK(max_threads_from_env() == 2);
  setenv("REDIST_OPT_THREADS", "0", 1);
  CHECK(max_threads_from_env() >= 1);  // 0 = auto
  setenv("REDIST_OPT_THREADS", "junk", 1);
  CHECK(max_threads_from_env() >= 1);
  unsetenv("REDIST_OPT_THREADS");
  CHECK(max_threads_from_env() >= 1);
}

TEST_CASE("compare tabulates agreeing solvers on one instance") {
  ExperimentConfig base;
  base.task = "sparse_group";
  base.regularizer = "lsp:beta=1,theta=0.5";
  base.lambda = 0.0;
  base.mu = 2.0;
  base.max_iterations = 800;
  base.tolerance = 1e-16;
  base.seed = 9;
  base.data = "synthetic:d=40,groups=4,n=80";
  base.out = (scratch_dir() / "out_trio").string();

  std::vector<ExperimentConfig> configs;
  for (const char* solver : {"nmapg", "scp", "cccp"}) {
    ExperimentConfig c = base;
    c.solver = solver;
    configs.push_back(std::move(c));
  }
  const auto table = scratch_dir() / "trio.csv";
  const auto rows = compare_experiments(configs, table);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) REQUIRE(row.status == "ok");
  const double ref = rows[0].metrics.at("objective").get<double>();
  for (const auto& row : rows) {
    const double obj = row.metrics.at("objective").get<double>();
    CHECK(std::abs(obj - ref) <= 1e-4 * std::max(1.0, std::abs(ref)));
  }
  // The table carries one line per solver plus the header.
  std::ifstream in(table);
  std::string line;
  int lines = 0;
  bool header_ok = false;
  while (std::getline(in, line)) {
    if (lines == 0) header_ok = line.rfind("solver,status", 0) == 0;
    ++lines;
  }
  CHECK(header_ok);
  CHECK(lines == 4);
}

TEST_CASE("compare shows the nonconvex model beating the convex baseline") {
  ExperimentConfig base;
  base.task = "sparse_group";
  base.regularizer = "lsp:beta=1,theta=0.5";
  base.lambda = 0.0;
  base.max_iterations = 800;
  base.tolerance = 1e-16;
  base.seed = 1;
  base.data = "synthetic:d=100,groups=10,n=200";
  base.out = (scratch_dir() / "out_vs").string();

  ExperimentConfig nonconvex = base;
  nonconvex.solver = "nmapg";
  nonconvex.mu = 2.0;
  ExperimentConfig convex = base;
  convex.solver = "fista";
  convex.mu = 1.0;

  const auto rows = compare_experiments({nonconvex, convex},
                                        scratch_dir() / "vs.csv");
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].status == "ok");
  REQUIRE(rows[1].status == "ok");
  CHECK(rows[0].metrics.at("rmse").get<double>() <
        rows[1].metrics.at("rmse").get<double>());
}

TEST_CASE("cli binary exit codes") {
  // Config error: invalid task.
  CHECK(run_cli("run --task=bogus --solver=nmapg --data=synthetic:") == 2);
  // Data error: file vanishes between validate and ingest is hard to stage;
  // a malformed data file exercises the ingest path instead.
  const auto bad_file = scratch_dir() / "bad.libsvm";
  write_text(bad_file, "+1 nonsense\n");
  CHECK(run_cli("run --task=sparse_group --solver=nmapg --n_groups=1 --data=" +
                bad_file.string()) == 3);
  // Success path.
  const auto out = scratch_dir() / "cli_out";
  CHECK(run_cli("run --task=sparse_group --solver=nmapg "
                "--regularizer=lsp:beta=1,theta=0.5 --lambda=0.2 --mu=0 "
                "--T=40 --seed=1 --data=synthetic:d=10,groups=2,n=20 --out=" +
                out.string()) == 0);
}
