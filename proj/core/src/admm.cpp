#include "redistopt/admm.hpp"

#include <chrono>
#include <cmath>

#include "redistopt/solvers.hpp"

namespace redistopt {

namespace {
using Clock = std::chrono::steady_clock;
}

AdmmResult admm_consensus(const ConsensusProblem& problem,
                          const Eigen::VectorXd& y0, const AdmmParams& params) {
  const auto start = Clock::now();
  const std::size_t m = problem.locals.size();
  const double tau = params.tau;

  AdmmResult result;
  result.consensus = y0;
  result.locals.assign(m, y0);
  std::vector<Eigen::VectorXd> duals(m, Eigen::VectorXd::Zero(y0.size()));
  result.trace.reason = TerminationReason::max_iterations;

  const auto report = [&](const Eigen::VectorXd& y) {
    if (problem.report_objective) return problem.report_objective(y);
    double val = problem.convex_value(y);
    for (const auto& local : problem.locals) val += local.value(y);
    return val;
  };

  for (int t = 1; t <= params.max_iterations; ++t) {
    long inner = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& local = problem.locals[i];
      const Eigen::VectorXd& y = result.consensus;
      const Eigen::VectorXd& p = duals[i];
      GradientDescentResult gd = gradient_descent_armijo(
          [&](const Eigen::VectorXd& v) {
            return local.value(v) + p.dot(v - y) + 0.5 * tau * (v - y).squaredNorm();
          },
          [&](const Eigen::VectorXd& v) {
            return (local.gradient(v) + p + tau * (v - y)).eval();
          },
          result.locals[i], params.inner_tolerance, params.inner_max_iterations,
          1.0 / std::max(tau, 1.0));
      inner += gd.iterations;
      if (gd.gradient_norm > params.inner_tolerance) {
        result.trace.reason = TerminationReason::aborted;
        result.trace.rows.push_back({t, report(result.consensus), 0.0, 0.0,
                                     std::chrono::duration<double, std::milli>(
                                         Clock::now() - start)
                                         .count(),
                                     false, inner, -1});
        return result;
      }
      result.locals[i] = std::move(gd.point);
    }

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(y0.size());
    for (std::size_t i = 0; i < m; ++i) {
      mean += result.locals[i] + duals[i] / tau;
    }
    mean /= static_cast<double>(m);
    ProxResult yprox = problem.convex_prox(
        mean, 1.0 / (static_cast<double>(m) * tau), 1e-12);
    const double d_t = (yprox.point - result.consensus).squaredNorm();
    result.consensus = std::move(yprox.point);
    inner += yprox.inner_iterations;

    double max_residual = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      duals[i] += tau * (result.locals[i] - result.consensus);
      max_residual =
          std::max(max_residual, (result.locals[i] - result.consensus).norm());
    }
    result.max_residual = max_residual;

    const double fy = report(result.consensus);
    result.trace.rows.push_back(
        {t, fy, d_t, yprox.gap,
         std::chrono::duration<double, std::milli>(Clock::now() - start).count(),
         false, inner, -1});
    if (!std::isfinite(fy)) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }
    // Primal feasibility plus the dual residual tau * ||y_{t+1} - y_t||.
    if (max_residual < params.residual_tolerance &&
        tau * std::sqrt(d_t) < params.residual_tolerance) {
      result.trace.reason = TerminationReason::tolerance;
      break;
    }
  }
  return result;
}

}  // namespace redistopt
