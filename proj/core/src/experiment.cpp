#include "redistopt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "redistopt/io.hpp"
#include "redistopt/models.hpp"
#include "redistopt/prox_dual.hpp"
#include "redistopt/solvers.hpp"

namespace redistopt {

namespace {

using nlohmann::json;

const std::map<std::string, std::set<std::string>>& task_solvers() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"sparse_group", {"nmapg", "fista", "scp", "cccp", "admm"}},
      {"tree", {"nmapg", "fista"}},
      {"matcomp", {"fw", "fw_convex"}},
      {"tv_denoise", {"inexact_nmapg", "cccp", "smoothing", "convex"}},
      {"rsc", {"inexact_nmapg", "convex"}},
  };
  return table;
}

std::map<std::string, double> parse_recipe(const std::string& data) {
  std::map<std::string, double> out;
  const std::string rest = data.substr(std::string("synthetic:").size());
  std::istringstream in(rest);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("synthetic recipe expects k=v, got '" + item + "'");
    }
    try {
      out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("synthetic recipe: bad number in '" + item + "'");
    }
  }
  return out;
}

double recipe_get(const std::map<std::string, double>& r, const std::string& key,
                  double fallback) {
  const auto it = r.find(key);
  return it == r.end() ? fallback : it->second;
}

bool is_synthetic(const std::string& data) {
  return data.rfind("synthetic:", 0) == 0 || data == "synthetic";
}

SolverParams make_params(const ExperimentConfig& config) {
  SolverParams params;
  params.max_iterations = config.max_iterations;
  params.tau = config.tau;
  params.tolerance = config.tolerance;
  params.eps_base = config.eps_base;
  params.seed = config.seed;
  return params;
}

double prediction_rmse(const Dataset& data, const Eigen::VectorXd& x) {
  if (data.samples() == 0) return 0.0;
  return std::sqrt((data.features * x - data.targets).squaredNorm() /
                   static_cast<double>(data.samples()));
}

void write_run_artifacts(const std::filesystem::path& dir,
                         const SolveTrace& trace, const json& metrics) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream trace_file(dir / "trace.csv");
    trace.write_csv(trace_file);
  }
  {
    std::ofstream metrics_file(dir / "metrics.json");
    metrics_file << metrics.dump(2) << "\n";
  }
}

struct SparseGroupSetup {
  Dataset train;
  Dataset test;
  GroupStructure groups;
  Eigen::VectorXd x_bar;
  bool has_truth = false;
};

SparseGroupSetup load_sparse_group(const ExperimentConfig& config) {
  SparseGroupSetup setup;
  if (is_synthetic(config.data)) {
    const auto recipe = parse_recipe(config.data == "synthetic"
                                         ? std::string("synthetic:")
                                         : config.data);
    const int d = static_cast<int>(recipe_get(recipe, "d", 100));
    const int groups = static_cast<int>(recipe_get(recipe, "groups", 10));
    const int n = static_cast<int>(recipe_get(recipe, "n", 200));
    const int n_test = std::max(1, n / 4);
    SparseGroupInstance inst = synth_sparse_group(
        d, groups, recipe_get(recipe, "zero_frac", 0.75),
        recipe_get(recipe, "within_zero", 0.25), n + n_test,
        recipe_get(recipe, "sigma", 0.05), config.seed);
    setup.train.features = inst.data.features.topRows(n);
    setup.train.targets = inst.data.targets.head(n);
    setup.test.features = inst.data.features.bottomRows(n_test);
    setup.test.targets = inst.data.targets.tail(n_test);
    setup.groups = inst.groups;
    setup.x_bar = inst.x_bar;
    setup.has_truth = true;
  } else {
    try {
      setup.train = ingest_libsvm(config.data);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    const Eigen::Index d = setup.train.dim();
    if (config.n_groups < 1 || d % config.n_groups != 0) {
      throw ConfigError("sparse_group: n_groups must divide the dimension");
    }
    const Eigen::Index size = d / config.n_groups;
    setup.groups.kind = GroupKind::disjoint;
    for (int g = 0; g < config.n_groups; ++g) {
      std::vector<int> idx(size);
      std::iota(idx.begin(), idx.end(), static_cast<int>(g * size));
      setup.groups.groups.push_back(std::move(idx));
      setup.groups.weights.push_back(1.0);
    }
  }
  for (double& w : setup.groups.weights) w *= config.mu;
  return setup;
}

json run_sparse_group(const ExperimentConfig& config,
                      const std::filesystem::path& dir, SolveTrace& trace_out) {
  const SparseGroupSetup setup = load_sparse_group(config);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(setup.train.dim());
  SolverParams params = make_params(config);

  SolveResult result;
  double objective = 0.0;
  if (config.solver == "fista") {
    CompositeProblem problem =
        build_sparse_group_convex(setup.train, config.lambda, setup.groups);
    result = fista(problem, x0, params);
    objective = problem.objective(result.point);
  } else if (config.solver == "nmapg") {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    CompositeProblem problem =
        build_sparse_group(setup.train, spec, config.lambda, setup.groups);
    result = nmapg(problem, x0, params);
    objective = problem.objective(result.point);
  } else if (config.solver == "scp" || config.solver == "cccp") {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    DcProblem problem;
    if (config.lambda > 0.0 && config.mu > 0.0) {
      throw ConfigError(
          "scp/cccp need a radially separable split: use lambda=0 (group "
          "penalty) or mu=0 (elementwise penalty)");
    }
    if (config.mu > 0.0) {
      problem = build_group_dc(setup.train, spec, setup.groups);
    } else {
      problem = build_lasso_dc(setup.train, spec, config.lambda);
    }
    if (config.solver == "scp") {
      result = scp(problem, x0, params);
    } else {
      CccpParams cp;
      cp.outer = params;
      cp.outer.max_iterations = std::min(config.max_iterations, 100);
      result = cccp(problem, x0, cp);
    }
    objective = problem.objective(result.point);
  } else {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    if (config.mu > 0.0) {
      throw ConfigError("admm supports the elementwise penalty only (mu=0)");
    }
    ConsensusProblem problem = build_consensus_least_squares(
        setup.train, &spec, config.lambda, config.shards);
    AdmmParams ap;
    ap.max_iterations = config.max_iterations;
    ap.tau = config.tau > 0.0 ? config.tau : 1.0;
    ap.residual_tolerance = std::max(config.tolerance, 1e-10);
    AdmmResult admm_result = admm_consensus(problem, x0, ap);
    result.point = admm_result.consensus;
    result.trace = std::move(admm_result.trace);
    objective = problem.report_objective(result.point);
  }

  if (result.trace.reason == TerminationReason::aborted) {
    write_run_artifacts(dir, result.trace, json{{"status", "aborted"}});
    throw SolverAbort("solver aborted with non-finite objective");
  }

  json metrics;
  metrics["objective"] = objective;
  metrics["rmse"] = prediction_rmse(
      setup.test.samples() > 0 ? setup.test : setup.train, result.point);
  if (setup.has_truth) {
    metrics["abs_error"] = (result.point - setup.x_bar).cwiseAbs().sum() /
                           static_cast<double>(setup.x_bar.size());
  }
  metrics["iterations"] = static_cast<int>(result.trace.rows.size());
  metrics["termination"] = to_string(result.trace.reason);
  write_csv_vector(dir / "solution.csv", result.point);
  trace_out = std::move(result.trace);
  return metrics;
}

json run_tree(const ExperimentConfig& config, const std::filesystem::path& dir,
              SolveTrace& trace_out) {
  if (!is_synthetic(config.data)) {
    throw ConfigError("tree task supports synthetic data only");
  }
  const auto recipe = parse_recipe(config.data == "synthetic"
                                       ? std::string("synthetic:")
                                       : config.data);
  const int n = static_cast<int>(recipe_get(recipe, "n", 200));
  const int n_test = std::max(1, n / 4);
  TreeInstance inst = synth_tree_logistic(
      n + n_test, recipe_get(recipe, "sigma", 0.5), config.seed);
  Dataset train, test;
  train.features = inst.data.features.topRows(n);
  train.targets = inst.data.targets.head(n);
  train.sample_weights = inst.data.sample_weights.head(n);
  test.features = inst.data.features.bottomRows(n_test);
  test.targets = inst.data.targets.tail(n_test);

  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(train.dim());
  SolverParams params = make_params(config);
  SolveResult result;
  double objective = 0.0;
  if (config.solver == "nmapg") {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    CompositeProblem problem = build_tree(train, spec, config.mu, inst.tree);
    result = nmapg(problem, x0, params);
    objective = problem.objective(result.point);
  } else {
    CompositeProblem problem = build_tree_convex(train, config.mu, inst.tree);
    result = fista(problem, x0, params);
    objective = problem.objective(result.point);
  }
  if (result.trace.reason == TerminationReason::aborted) {
    write_run_artifacts(dir, result.trace, json{{"status", "aborted"}});
    throw SolverAbort("solver aborted with non-finite objective");
  }

  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < test.samples(); ++i) {
    const double score = test.features.row(i).dot(result.point);
    if ((score >= 0.0 ? 1.0 : -1.0) == test.targets[i]) ++correct;
  }
  Eigen::Index nonzero = 0;
  for (Eigen::Index i = 0; i < result.point.size(); ++i) {
    if (std::abs(result.point[i]) > 1e-8) ++nonzero;
  }
  json metrics;
  metrics["objective"] = objective;
  metrics["accuracy"] =
      static_cast<double>(correct) / static_cast<double>(test.samples());
  metrics["sparsity"] = static_cast<double>(nonzero) /
                        static_cast<double>(result.point.size());
  metrics["iterations"] = static_cast<int>(result.trace.rows.size());
  metrics["termination"] = to_string(result.trace.reason);
  write_csv_vector(dir / "solution.csv", result.point);
  trace_out = std::move(result.trace);
  return metrics;
}

json run_tv_denoise(const ExperimentConfig& config,
                    const std::filesystem::path& dir, SolveTrace& trace_out) {
  ImageGrid noisy;
  ImageGrid clean;
  bool has_clean = false;
  if (is_synthetic(config.data)) {
    const auto recipe = parse_recipe(config.data == "synthetic"
                                         ? std::string("synthetic:")
                                         : config.data);
    DenoiseInstance inst = synth_denoise(
        static_cast<int>(recipe_get(recipe, "m", 8)),
        static_cast<int>(recipe_get(recipe, "n", 8)),
        recipe_get(recipe, "corrupt", 0.1), config.seed);
    noisy = inst.noisy;
    clean = inst.clean;
    has_clean = true;
  } else {
    try {
      noisy = ingest_pgm(config.data);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
  }
  const Eigen::Index m = noisy.pixels.rows();
  const Eigen::Index n = noisy.pixels.cols();
  const Eigen::VectorXd x0 =
      Eigen::Map<const Eigen::VectorXd>(noisy.pixels.data(), m * n);
  SolverParams params = make_params(config);

  SolveResult result;
  double objective = 0.0;
  if (config.solver == "inexact_nmapg") {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    CompositeProblem problem = build_tv_denoise(noisy, spec, config.mu);
    result = inexact_nmapg(problem, x0, params);
    objective = problem.objective(result.point);
  } else if (config.solver == "cccp") {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    DcProblem problem = build_tv_denoise_dc(noisy, spec, config.mu);
    CccpParams cp;
    cp.outer = params;
    cp.outer.max_iterations = std::min(config.max_iterations, 50);
    cp.outer.exact_prox_eps = 1e-9;
    cp.inner_max_iterations = 2000;
    cp.inner_tolerance = 1e-14;
    result = cccp(problem, x0, cp);
    objective = problem.objective(result.point);
  } else if (config.solver == "smoothing") {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    SmoothedProblem problem = build_tv_denoise_smoothed(noisy, spec, config.mu);
    SmoothingParams sp;
    sp.gradient_tolerance = config.smoothing_grad_tol;
    result = smoothing_solver(problem, x0, sp);
    objective = problem.true_objective(result.point);
  } else {
    CompositeProblem problem = build_tv_denoise_convex(noisy, config.mu);
    result = fista(problem, x0, params);
    objective = problem.objective(result.point);
  }
  if (result.trace.reason == TerminationReason::aborted) {
    write_run_artifacts(dir, result.trace, json{{"status", "aborted"}});
    throw SolverAbort("solver aborted with non-finite objective");
  }

  const Eigen::MatrixXd solution =
      Eigen::Map<const Eigen::MatrixXd>(result.point.data(), m, n);
  json metrics;
  metrics["objective"] = objective;
  if (has_clean) {
    metrics["rmse"] = std::sqrt((solution - clean.pixels).squaredNorm() /
                                static_cast<double>(m * n));
  }
  metrics["iterations"] = static_cast<int>(result.trace.rows.size());
  metrics["inner_iterations"] =
      static_cast<double>(result.trace.total_inner_iterations());
  metrics["termination"] = to_string(result.trace.reason);
  write_csv_matrix(dir / "solution.csv", solution);
  ImageGrid out_img;
  out_img.pixels = solution;
  write_pgm(dir / "solution.pgm", out_img);
  trace_out = std::move(result.trace);
  return metrics;
}

json run_rsc(const ExperimentConfig& config, const std::filesystem::path& dir,
             SolveTrace& trace_out) {
  Eigen::VectorXd y;
  Eigen::MatrixXd dict;
  Eigen::VectorXd x_bar;
  bool has_truth = false;
  if (is_synthetic(config.data)) {
    const auto recipe = parse_recipe(config.data == "synthetic"
                                         ? std::string("synthetic:")
                                         : config.data);
    RscInstance inst = synth_rsc(static_cast<int>(recipe_get(recipe, "m", 20)),
                                 static_cast<int>(recipe_get(recipe, "d", 30)),
                                 static_cast<int>(recipe_get(recipe, "sparsity", 3)),
                                 recipe_get(recipe, "outliers", 0.1), config.seed);
    y = inst.y;
    dict = inst.dictionary;
    x_bar = inst.x_bar;
    has_truth = true;
  } else {
    // CSV whose first column is y and remaining columns the dictionary.
    Eigen::MatrixXd packed;
    try {
      packed = ingest_csv_matrix(config.data);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    if (packed.cols() < 2) throw DataError("rsc csv needs y plus dictionary columns");
    y = packed.col(0);
    dict = packed.rightCols(packed.cols() - 1);
  }

  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dict.cols());
  SolverParams params = make_params(config);
  SolveResult result;
  double objective = 0.0;
  if (config.solver == "inexact_nmapg") {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    CompositeProblem problem = build_rsc(y, dict, spec, config.mu);
    result = inexact_nmapg(problem, x0, params);
    objective = problem.objective(result.point);
  } else {
    CompositeProblem problem = build_rsc_convex(y, dict, config.mu);
    result = fista(problem, x0, params);
    objective = problem.objective(result.point);
  }
  if (result.trace.reason == TerminationReason::aborted) {
    write_run_artifacts(dir, result.trace, json{{"status", "aborted"}});
    throw SolverAbort("solver aborted with non-finite objective");
  }

  json metrics;
  metrics["objective"] = objective;
  if (has_truth) {
    // Inexact dual proxes leave sub-threshold fuzz rather than exact zeros;
    // the support cut is relative to the solution scale.
    const double cut =
        std::max(1e-6, 1e-3 * result.point.cwiseAbs().maxCoeff());
    int tp = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < x_bar.size(); ++i) {
      const bool truth = std::abs(x_bar[i]) > 1e-8;
      const bool found = std::abs(result.point[i]) > cut;
      tp += truth && found;
      fp += !truth && found;
      fn += truth && !found;
    }
    metrics["support_f1"] =
        tp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  metrics["iterations"] = static_cast<int>(result.trace.rows.size());
  metrics["termination"] = to_string(result.trace.reason);
  write_csv_vector(dir / "solution.csv", result.point);
  trace_out = std::move(result.trace);
  return metrics;
}

json run_matcomp(const ExperimentConfig& config,
                 const std::filesystem::path& dir, SolveTrace& trace_out) {
  ObservedMatrix train;
  ObservedMatrix heldout;
  bool has_heldout = false;
  if (is_synthetic(config.data)) {
    const auto recipe = parse_recipe(config.data == "synthetic"
                                         ? std::string("synthetic:")
                                         : config.data);
    CompletionInstance inst = synth_completion(
        static_cast<int>(recipe_get(recipe, "m", 20)),
        static_cast<int>(recipe_get(recipe, "n", 15)),
        static_cast<int>(recipe_get(recipe, "rank", 3)),
        recipe_get(recipe, "observe", 0.5), recipe_get(recipe, "heldout", 0.2),
        recipe_get(recipe, "sigma", 0.01), config.seed);
    train = std::move(inst.train);
    heldout = std::move(inst.heldout);
    has_heldout = true;
  } else {
    try {
      train = ingest_triples(config.data);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
  }

  FwParams params;
  params.seed = config.seed;
  params.tolerance = config.tolerance;
  FwResult result;
  if (config.solver == "fw") {
    const KappaSpec spec = parse_kappa_spec(config.regularizer);
    result = fw_solve(train, &spec, config.mu, config.max_iterations, params);
  } else {
    result = fw_solve(train, nullptr, config.mu, config.max_iterations, params);
  }
  if (result.trace.reason == TerminationReason::aborted) {
    write_run_artifacts(dir, result.trace, json{{"status", "aborted"}});
    throw SolverAbort("solver aborted with non-finite objective");
  }

  json metrics;
  metrics["objective"] = result.trace.final_objective();
  metrics["rank"] = static_cast<int>(result.factor.rank());
  metrics["rmse"] = completion_rmse(result.factor,
                                    has_heldout ? heldout : train);
  metrics["iterations"] = static_cast<int>(result.trace.rows.size());
  metrics["termination"] = to_string(result.trace.reason);
  write_factors(dir / "solution.factors", result.factor);
  trace_out = std::move(result.trace);
  return metrics;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_json(j);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else {
      text = value.dump();
    }
    c.apply_flag(key, text);
  }
  return c;
}

void ExperimentConfig::apply_flag(const std::string& key,
                                  const std::string& value) {
  const auto as_double = [&]() {
    try {
      return std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError("bad numeric value for --" + key + ": '" + value + "'");
    }
  };
  const auto as_int = [&]() {
    try {
      return std::stoi(value);
    } catch (const std::exception&) {
      throw ConfigError("bad integer value for --" + key + ": '" + value + "'");
    }
  };
  if (key == "task") task = value;
  else if (key == "solver") solver = value;
  else if (key == "regularizer") regularizer = value;
  else if (key == "lambda") lambda = as_double();
  else if (key == "mu") mu = as_double();
  else if (key == "tau") tau = as_double();
  else if (key == "tolerance") tolerance = as_double();
  else if (key == "eps_base") eps_base = as_double();
  else if (key == "smoothing_grad_tol") smoothing_grad_tol = as_double();
  else if (key == "T" || key == "max_iterations") max_iterations = as_int();
  else if (key == "shards") shards = as_int();
  else if (key == "n_groups") n_groups = as_int();
  else if (key == "seed") {
    try {
      seed = std::stoull(value);
    } catch (const std::exception&) {
      throw ConfigError("bad seed value '" + value + "'");
    }
  } else if (key == "data") data = value;
  else if (key == "format") format = value;
  else if (key == "out") out = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
  const auto& table = task_solvers();
  const auto it = table.find(task);
  if (it == table.end()) {
    throw ConfigError("unknown task '" + task + "'");
  }
  if (!it->second.count(solver)) {
    throw ConfigError("solver '" + solver + "' is not valid for task '" + task + "'");
  }
  if (data.empty()) throw ConfigError("data is required (path or synthetic: recipe)");
  if (!is_synthetic(data) && !std::filesystem::exists(data)) {
    throw ConfigError("data path does not exist: " + data);
  }
  if (max_iterations < 1) throw ConfigError("max_iterations must be positive");
  if (!format.empty() && format != "libsvm" && format != "triples" &&
      format != "pgm" && format != "csv_matrix") {
    throw ConfigError("unknown data format '" + format + "'");
  }
  const bool needs_kappa = solver != "fista" && solver != "convex" &&
                           solver != "fw_convex";
  if (needs_kappa) {
    try {
      parse_kappa_spec(regularizer);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bad regularizer: ") + e.what());
    }
  }
  if (task == "tv_denoise" && solver == "smoothing") {
    if (parse_kappa_spec(regularizer).variant != KappaVariant::lsp) {
      throw ConfigError("smoothing supports the LSP regularizer only");
    }
  }
}

std::filesystem::path ExperimentConfig::run_dir() const {
  return std::filesystem::path(out) /
         (task + "_" + solver + "_" + std::to_string(seed));
}

RunOutput run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path dir = config.run_dir();
  std::filesystem::create_directories(dir);

  SolveTrace trace;
  json metrics;
  if (config.task == "sparse_group") {
    metrics = run_sparse_group(config, dir, trace);
  } else if (config.task == "tree") {
    metrics = run_tree(config, dir, trace);
  } else if (config.task == "tv_denoise") {
    metrics = run_tv_denoise(config, dir, trace);
  } else if (config.task == "rsc") {
    metrics = run_rsc(config, dir, trace);
  } else {
    metrics = run_matcomp(config, dir, trace);
  }
  metrics["time_ms"] = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  write_run_artifacts(dir, trace, metrics);
  return {metrics, dir};
}

int max_threads_from_env() {
  const char* env = std::getenv("REDIST_OPT_THREADS");
  int cap = 0;
  if (env != nullptr) {
    try {
      cap = std::stoi(env);
    } catch (const std::exception&) {
      cap = 0;
    }
  }
  if (cap <= 0) {
    cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap <= 0) cap = 1;
  }
  return cap;
}

std::vector<CompareRow> compare_experiments(
    const std::vector<ExperimentConfig>& configs,
    const std::filesystem::path& table_path) {
  std::vector<CompareRow> rows(configs.size());
  if (!configs.empty()) {
    const std::string& task = configs.front().task;
    const std::uint64_t seed = configs.front().seed;
    for (const auto& c : configs) {
      if (c.task != task || c.seed != seed) {
        throw ConfigError("compare members must share task and data seed");
      }
    }
  }

  const int cap = std::max(1, std::min<int>(max_threads_from_env(),
                                            static_cast<int>(configs.size())));
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      rows[i].solver = configs[i].solver;
      try {
        RunOutput run = run_experiment(configs[i]);
        rows[i].status = "ok";
        rows[i].metrics = std::move(run.metrics);
      } catch (const std::exception& e) {
        rows[i].status = e.what();
      }
    }
  };
  if (cap <= 1 || configs.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(cap);
    for (int i = 0; i < cap; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::set<std::string> keys;
  for (const auto& row : rows) {
    for (const auto& [key, value] : row.metrics.items()) keys.insert(key);
  }
  if (!table_path.empty()) {
    std::filesystem::create_directories(table_path.parent_path().empty()
                                            ? "."
                                            : table_path.parent_path());
    std::ofstream out(table_path);
    out << "solver,status";
    for (const auto& key : keys) out << "," << key;
    out << "\n";
    for (const auto& row : rows) {
      std::string status = row.status;
      std::replace(status.begin(), status.end(), ',', ';');
      out << row.solver << "," << status;
      for (const auto& key : keys) {
        out << ",";
        if (row.metrics.contains(key)) {
          const auto& v = row.metrics.at(key);
          if (v.is_string()) {
            out << v.get<std::string>();
          } else {
            out << v.dump();
          }
        }
      }
      out << "\n";
    }
  }
  return rows;
}

}  // namespace redistopt
