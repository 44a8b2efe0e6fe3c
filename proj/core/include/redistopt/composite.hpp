#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "redistopt/prox.hpp"

namespace redistopt {

/// Composite problem F(x) = smooth(x) + convex(x); smooth is Lipschitz
/// smooth (possibly nonconvex), convex is convex with a prox oracle that may
/// be inexact (prox(z, c, eps) approximates argmin 1/2||x-z||^2 + c*g(x)
/// with certified duality gap <= eps whenever the oracle supports it).
struct CompositeProblem {
  std::function<double(const Eigen::VectorXd&)> smooth_value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> smooth_gradient;
  std::function<double(const Eigen::VectorXd&)> convex_value;
  std::function<ProxResult(const Eigen::VectorXd&, double, double)> prox;
  double lipschitz = 1.0;
  Eigen::Index dim = 0;

  double objective(const Eigen::VectorXd& x) const {
    return smooth_value(x) + convex_value(x);
  }
};

/// DC-split problem F(x) = smooth(x) + convex_part(x) + concave_part(x)
/// with convex_part admitting an exact prox and concave_part smooth.
struct DcProblem {
  std::function<double(const Eigen::VectorXd&)> smooth_value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> smooth_gradient;
  std::function<double(const Eigen::VectorXd&)> convex_value;
  std::function<ProxResult(const Eigen::VectorXd&, double, double)> convex_prox;
  std::function<double(const Eigen::VectorXd&)> concave_value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> concave_gradient;
  double lipschitz = 1.0;  ///< modulus of the smooth part alone
  Eigen::Index dim = 0;

  double objective(const Eigen::VectorXd& x) const {
    return smooth_value(x) + convex_value(x) + concave_value(x);
  }
};

/// Family of smoothed surrogates F_lambda indexed by smoothing radius.
struct SmoothedProblem {
  std::function<double(const Eigen::VectorXd&, double)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> gradient;
  std::function<double(const Eigen::VectorXd&)> true_objective;
  Eigen::Index dim = 0;
};

struct SolverParams {
  int max_iterations = 1000;
  double tau = 0.0;        ///< stepsize parameter; 0 resolves to 1.05 * L
  double delta = 0.0;      ///< sufficient decrease margin; 0 -> 0.45*(tau - L)
  double eta = 0.8;        ///< nonmonotone averaging in [0, 1)
  double tolerance = 1e-10;  ///< termination threshold on d_t
  double eps_base = 0.95;  ///< inexact schedule eps_t = eps_base^t
  std::function<double(int)> eps_schedule;  ///< overrides eps_base when set
  double exact_prox_eps = 1e-12;  ///< gap request for nominally exact oracles
  std::uint64_t seed = 0;

  double resolve_tau(double lipschitz) const;
  double resolve_delta(double tau, double lipschitz) const;
  double eps_at(int t) const;
};

enum class TerminationReason { tolerance, max_iterations, aborted };

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double d_t = 0.0;           ///< squared step measure ||x_{t+1} - v_t||^2
  double gap = 0.0;           ///< prox duality gap used this iteration
  double elapsed_ms = 0.0;
  bool extrapolation_accepted = false;
  long inner_iterations = 0;
  int rank = -1;              ///< factor rank, low-rank solves only
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  TerminationReason reason = TerminationReason::max_iterations;

  long total_inner_iterations() const;
  double final_objective() const;
  /// Writes CSV with the pinned header "iter,objective,d_t,gap,elapsed_ms".
  void write_csv(std::ostream& os) const;
};

struct SolveResult {
  Eigen::VectorXd point;
  SolveTrace trace;
};

const char* to_string(TerminationReason r);

}  // namespace redistopt
