#pragma once

#include "redistopt/composite.hpp"

namespace redistopt {

/// Consensus problem sum_i f_i(x^i) + g(y) subject to x^1 = ... = x^M = y.
/// Each local oracle is the augmented smooth part f_i + (1/M) * gbar; the
/// shared convex part has an exact prox.
struct ConsensusProblem {
  struct LocalOracle {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  };
  std::vector<LocalOracle> locals;
  std::function<double(const Eigen::VectorXd&)> convex_value;
  std::function<ProxResult(const Eigen::VectorXd&, double, double)> convex_prox;
  /// Original objective F(y) reported in traces; defaults to
  /// sum_i locals[i].value(y) + convex_value(y) when unset.
  std::function<double(const Eigen::VectorXd&)> report_objective;
  Eigen::Index dim = 0;
};

struct AdmmParams {
  int max_iterations = 500;
  double tau = 1.0;                ///< augmented Lagrangian penalty
  double residual_tolerance = 1e-8;  ///< max_i ||x^i - y|| at termination
  double inner_tolerance = 1e-8;   ///< gradient norm for the x^i updates
  int inner_max_iterations = 20000;
};

struct AdmmResult {
  Eigen::VectorXd consensus;
  std::vector<Eigen::VectorXd> locals;
  SolveTrace trace;
  double max_residual = 0.0;
};

/// Consensus ADMM on the transformed problem: x^i-updates minimize the local
/// augmented Lagrangian block by gradient descent, the y-update is the exact
/// augmented-Lagrangian minimizer prox_{g/(M tau)}(mean_i(x^i + p^i / tau)),
/// duals move by tau * (x^i - y).
AdmmResult admm_consensus(const ConsensusProblem& problem,
                          const Eigen::VectorXd& y0, const AdmmParams& params);

}  // namespace redistopt
