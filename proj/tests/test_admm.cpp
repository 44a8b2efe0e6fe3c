#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "redistopt/admm.hpp"
#include "redistopt/models.hpp"
#include "redistopt/solvers.hpp"

using namespace redistopt;

TEST_CASE("single-node lasso consensus equals the soft threshold") {
  for (const double a : {2.5, -1.7, 0.3}) {
    ConsensusProblem problem;
    problem.dim = 1;
    ConsensusProblem::LocalOracle local;
    local.value = [a](const Eigen::VectorXd& x) {
      return 0.5 * (x[0] - a) * (x[0] - a);
    };
    local.gradient = [a](const Eigen::VectorXd& x) {
      Eigen::VectorXd g(1);
      g[0] = x[0] - a;
      return g;
    };
    problem.locals.push_back(local);
    const double lam = 1.0;
    problem.convex_value = [lam](const Eigen::VectorXd& x) {
      return lam * std::abs(x[0]);
    };
    problem.convex_prox = [lam](const Eigen::VectorXd& z, double c, double) {
      ProxResult out;
      out.point = prox_l1(z, c * lam);
      return out;
    };

    AdmmParams params;
    params.max_iterations = 2000;
    params.residual_tolerance = 1e-11;
    AdmmResult result = admm_consensus(problem, Eigen::VectorXd::Zero(1), params);
    const double expected = oracles::sgn(a) * std::max(std::abs(a) - lam, 0.0);
    CHECK(std::abs(result.consensus[0] - expected) <= 1e-8);
    CHECK(result.max_residual < 1e-6);
  }
}

TEST_CASE("consensus of plain quadratics is the mean") {
  ConsensusProblem problem;
  problem.dim = 1;
  const std::vector<double> anchors = {1.0, 2.0, 6.0};
  for (const double a : anchors) {
    ConsensusProblem::LocalOracle local;
    local.value = [a](const Eigen::VectorXd& x) {
      return 0.5 * (x[0] - a) * (x[0] - a);
    };
    local.gradient = [a](const Eigen::VectorXd& x) {
      Eigen::VectorXd g(1);
      g[0] = x[0] - a;
      return g;
    };
    problem.locals.push_back(local);
  }
  problem.convex_value = [](const Eigen::VectorXd&) { return 0.0; };
  problem.convex_prox = [](const Eigen::VectorXd& z, double, double) {
    ProxResult out;
    out.point = z;
    return out;
  };

  AdmmParams params;
  params.max_iterations = 2000;
  params.residual_tolerance = 1e-10;
  AdmmResult result = admm_consensus(problem, Eigen::VectorXd::Zero(1), params);
  CHECK(result.consensus[0] == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("four-way split matches the undistributed nonconvex solve") {
  const KappaSpec spec(KappaVariant::lsp, 1.0, 0.5);
  SplitRng rng(17);
  Dataset data;
  data.features = oracles::random_matrix(rng, 40, 12);
  const Eigen::VectorXd truth = oracles::random_vector(rng, 12, 0.7);
  data.targets = data.features * truth + 0.05 * oracles::random_vector(rng, 40);
  const double lambda = 1.0;

  ConsensusProblem problem =
      build_consensus_least_squares(data, &spec, lambda, 4);
  AdmmParams params;
  params.max_iterations = 3000;
  params.tau = 60.0;
  params.residual_tolerance = 1e-9;
  AdmmResult distributed =
      admm_consensus(problem, Eigen::VectorXd::Zero(12), params);
  CHECK(distributed.max_residual < 1e-6);
  CHECK(distributed.trace.reason == TerminationReason::tolerance);

  GroupStructure no_groups;
  no_groups.kind = GroupKind::disjoint;
  CompositeProblem composite = build_sparse_group(data, spec, lambda, no_groups);
  SolverParams sp;
  sp.max_iterations = 5000;
  sp.tolerance = 1e-22;
  SolveResult central = nmapg(composite, Eigen::VectorXd::Zero(12), sp);

  const double f_admm = problem.report_objective(distributed.consensus);
  const double f_central = composite.objective(central.point);
  CHECK(std::abs(f_admm - f_central) <= 1e-3 * std::max(1.0, std::abs(f_central)));
}

TEST_CASE("trace feasibility residuals shrink") {
  const KappaSpec spec(KappaVariant::lsp, 1.0, 1.0);
  SplitRng rng(19);
  Dataset data;
  data.features = oracles::random_matrix(rng, 20, 6);
  data.targets = oracles::random_vector(rng, 20);
  ConsensusProblem problem = build_consensus_least_squares(data, &spec, 0.5, 2);
  AdmmParams params;
  params.max_iterations = 1500;
  params.tau = 10.0;
  params.residual_tolerance = 1e-8;
  AdmmResult result = admm_consensus(problem, Eigen::VectorXd::Zero(6), params);
  CHECK(result.max_residual < 1e-6);
  for (std::size_t i = 0; i < result.locals.size(); ++i) {
    CHECK((result.locals[i] - result.consensus).norm() < 1e-6);
  }
}
