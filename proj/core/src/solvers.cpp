#include "redistopt/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "redistopt/rng.hpp"

namespace redistopt {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double next_alpha(double alpha) {
  return 0.5 * (std::sqrt(4.0 * alpha * alpha + 1.0) + 1.0);
}

}  // namespace

double SolverParams::resolve_tau(double lipschitz) const {
  if (tau > 0.0) return tau;
  return 1.05 * std::max(lipschitz, 1e-12);
}

double SolverParams::resolve_delta(double tau_eff, double lipschitz) const {
  if (delta > 0.0) return delta;
  return 0.45 * std::max(tau_eff - lipschitz, 1e-12);
}

double SolverParams::eps_at(int t) const {
  if (eps_schedule) return eps_schedule(t);
  return std::pow(eps_base, t);
}

long SolveTrace::total_inner_iterations() const {
  long total = 0;
  for (const auto& row : rows) total += row.inner_iterations;
  return total;
}

double SolveTrace::final_objective() const {
  return rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                      : rows.back().objective;
}

void SolveTrace::write_csv(std::ostream& os) const {
  os << "iter,objective,d_t,gap,elapsed_ms\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", row.iter,
                  row.objective, row.d_t, row.gap, row.elapsed_ms);
    os << buf;
  }
}

const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::tolerance: return "tolerance";
    case TerminationReason::max_iterations: return "max_iterations";
    case TerminationReason::aborted: return "aborted";
  }
  return "?";
}

SolveResult nmapg(const CompositeProblem& problem, const Eigen::VectorXd& x0,
                  const SolverParams& params) {
  const auto start = Clock::now();
  const double tau = params.resolve_tau(problem.lipschitz);
  const double delta = params.resolve_delta(tau, problem.lipschitz);
  const double eta = params.eta;

  Eigen::VectorXd x_prev = x0;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd z = x0;
  double alpha_prev = 0.0;
  double alpha = 1.0;
  double fx = problem.objective(x);
  double c = fx;
  double q = 1.0;

  SolveResult result;
  result.trace.reason = TerminationReason::max_iterations;
  for (int t = 1; t <= params.max_iterations; ++t) {
    Eigen::VectorXd y = x + (alpha_prev / alpha) * (z - x) +
                        ((alpha_prev - 1.0) / alpha) * (x - x_prev);
    ProxResult step =
        problem.prox(y - problem.smooth_gradient(y) / tau, 1.0 / tau,
                     params.exact_prox_eps);
    Eigen::VectorXd z_next = std::move(step.point);
    const double fz = problem.objective(z_next);
    const double dist_zy = (z_next - y).squaredNorm();

    Eigen::VectorXd x_next;
    double fx_next;
    bool accepted = false;
    bool step_from_y = true;
    long inner = step.inner_iterations;
    if (fz <= c - 0.5 * delta * dist_zy) {
      x_next = z_next;
      fx_next = fz;
      accepted = true;
    } else {
      ProxResult fallback =
          problem.prox(x - problem.smooth_gradient(x) / tau, 1.0 / tau,
                       params.exact_prox_eps);
      inner += fallback.inner_iterations;
      const double fv = problem.objective(fallback.point);
      if (fz <= fv) {
        x_next = z_next;
        fx_next = fz;
      } else {
        x_next = std::move(fallback.point);
        fx_next = fv;
        step_from_y = false;
      }
    }

    const double d_t =
        step_from_y ? (x_next - y).squaredNorm() : (x_next - x).squaredNorm();

    const double alpha_next = next_alpha(alpha);
    const double q_next = eta * q + 1.0;
    c = (eta * q * c + fx_next) / q_next;
    q = q_next;

    x_prev = std::move(x);
    x = std::move(x_next);
    z = std::move(z_next);
    alpha_prev = alpha;
    alpha = alpha_next;
    fx = fx_next;

    result.trace.rows.push_back(
        {t, fx, d_t, step.gap, ms_since(start), accepted, inner, -1});
    if (!std::isfinite(fx)) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }
    if (d_t < params.tolerance) {
      result.trace.reason = TerminationReason::tolerance;
      break;
    }
  }
  result.point = x;
  return result;
}

SolveResult inexact_nmapg(const CompositeProblem& problem,
                          const Eigen::VectorXd& x0,
                          const SolverParams& params) {
  const auto start = Clock::now();
  const double tau = params.resolve_tau(problem.lipschitz);
  const double delta = params.resolve_delta(tau, problem.lipschitz);

  Eigen::VectorXd x_prev = x0;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd z = x0;
  double alpha_prev = 0.0;
  double alpha = 1.0;
  double fx = problem.objective(x);

  SolveResult result;
  result.trace.reason = TerminationReason::max_iterations;
  for (int t = 1; t <= params.max_iterations; ++t) {
    const double eps_t = params.eps_at(t);
    Eigen::VectorXd y = x + (alpha_prev / alpha) * (z - x) +
                        ((alpha_prev - 1.0) / alpha) * (x - x_prev);
    ProxResult step =
        problem.prox(y - problem.smooth_gradient(y) / tau, 1.0 / tau, eps_t);
    Eigen::VectorXd z_next = step.point;
    const double fz = problem.objective(z_next);
    const double dist_zy = (z_next - y).squaredNorm();

    Eigen::VectorXd x_next;
    double fx_next;
    double gap_used = step.gap;
    long inner = step.inner_iterations;
    bool accepted = false;
    if (fz <= fx - 0.5 * delta * dist_zy) {
      x_next = std::move(step.point);
      fx_next = fz;
      accepted = true;
    } else {
      ProxResult fallback =
          problem.prox(x - problem.smooth_gradient(x) / tau, 1.0 / tau, eps_t);
      x_next = std::move(fallback.point);
      fx_next = problem.objective(x_next);
      gap_used = fallback.gap;
      inner += fallback.inner_iterations;
    }

    const double d_t =
        accepted ? (x_next - y).squaredNorm() : (x_next - x).squaredNorm();

    x_prev = std::move(x);
    x = std::move(x_next);
    z = std::move(z_next);
    alpha_prev = alpha;
    alpha = next_alpha(alpha);
    fx = fx_next;

    result.trace.rows.push_back(
        {t, fx, d_t, gap_used, ms_since(start), accepted, inner, -1});
    if (!std::isfinite(fx)) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }
    if (d_t < params.tolerance) {
      result.trace.reason = TerminationReason::tolerance;
      break;
    }
  }
  result.point = x;
  return result;
}

SolveResult fista(const CompositeProblem& problem, const Eigen::VectorXd& x0,
                  const SolverParams& params) {
  const auto start = Clock::now();
  const double tau = params.resolve_tau(problem.lipschitz);

  Eigen::VectorXd x_prev = x0;
  Eigen::VectorXd x = x0;
  double alpha_prev = 1.0;
  double alpha = 1.0;

  SolveResult result;
  result.trace.reason = TerminationReason::max_iterations;
  for (int t = 1; t <= params.max_iterations; ++t) {
    Eigen::VectorXd y = x + ((alpha_prev - 1.0) / alpha) * (x - x_prev);
    ProxResult step =
        problem.prox(y - problem.smooth_gradient(y) / tau, 1.0 / tau,
                     params.exact_prox_eps);
    const double d_t = (step.point - y).squaredNorm();
    x_prev = std::move(x);
    x = std::move(step.point);
    alpha_prev = alpha;
    alpha = next_alpha(alpha);

    const double fx = problem.objective(x);
    result.trace.rows.push_back(
        {t, fx, d_t, step.gap, ms_since(start), true, step.inner_iterations, -1});
    if (!std::isfinite(fx)) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }
    if (d_t < params.tolerance) {
      result.trace.reason = TerminationReason::tolerance;
      break;
    }
  }
  result.point = x;
  return result;
}

SolveResult scp(const DcProblem& problem, const Eigen::VectorXd& x0,
                const SolverParams& params) {
  const auto start = Clock::now();
  const double lip = params.resolve_tau(problem.lipschitz);

  Eigen::VectorXd x = x0;
  SolveResult result;
  result.trace.reason = TerminationReason::max_iterations;
  for (int t = 1; t <= params.max_iterations; ++t) {
    const Eigen::VectorXd g =
        problem.smooth_gradient(x) + problem.concave_gradient(x);
    ProxResult step = problem.convex_prox(x - g / lip, 1.0 / lip,
                                          params.exact_prox_eps);
    const double d_t = (step.point - x).squaredNorm();
    x = std::move(step.point);
    const double fx = problem.objective(x);
    result.trace.rows.push_back(
        {t, fx, d_t, step.gap, ms_since(start), false, step.inner_iterations, -1});
    if (!std::isfinite(fx)) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }
    if (d_t < params.tolerance) {
      result.trace.reason = TerminationReason::tolerance;
      break;
    }
  }
  result.point = x;
  return result;
}

SolveResult cccp(const DcProblem& problem, const Eigen::VectorXd& x0,
                 const CccpParams& params) {
  const auto start = Clock::now();
  Eigen::VectorXd x = x0;

  SolveResult result;
  result.trace.reason = TerminationReason::max_iterations;
  for (int t = 1; t <= params.outer.max_iterations; ++t) {
    const Eigen::VectorXd s = problem.concave_gradient(x);
    const Eigen::VectorXd anchor = x;
    const double offset = problem.concave_value(anchor) - s.dot(anchor);

    CompositeProblem surrogate;
    surrogate.dim = problem.dim;
    surrogate.lipschitz = problem.lipschitz;
    surrogate.smooth_value = [&problem, s, offset](const Eigen::VectorXd& v) {
      return problem.smooth_value(v) + s.dot(v) + offset;
    };
    surrogate.smooth_gradient = [&problem, s](const Eigen::VectorXd& v) {
      return (problem.smooth_gradient(v) + s).eval();
    };
    surrogate.convex_value = problem.convex_value;
    surrogate.prox = problem.convex_prox;

    SolverParams inner = params.outer;
    inner.max_iterations = params.inner_max_iterations;
    inner.tolerance = params.inner_tolerance;
    inner.tau = 0.0;
    SolveResult inner_result = fista(surrogate, x, inner);
    if (inner_result.trace.reason == TerminationReason::aborted) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }

    const double d_t = (inner_result.point - x).squaredNorm();
    x = std::move(inner_result.point);
    const double fx = problem.objective(x);
    long inner_work = static_cast<long>(inner_result.trace.rows.size()) +
                      inner_result.trace.total_inner_iterations();
    result.trace.rows.push_back(
        {t, fx, d_t, 0.0, ms_since(start), false, inner_work, -1});
    if (!std::isfinite(fx)) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }
    if (d_t < params.outer.tolerance) {
      result.trace.reason = TerminationReason::tolerance;
      break;
    }
  }
  result.point = x;
  return result;
}

GradientDescentResult gradient_descent_armijo(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    Eigen::VectorXd x0, double tolerance, int max_iterations,
    double initial_step) {
  GradientDescentResult out;
  out.point = std::move(x0);
  double step = initial_step;
  double last_accepted_step = initial_step;
  double fx = value(out.point);
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Eigen::VectorXd g = gradient(out.point);
    out.gradient_norm = g.norm();
    if (out.gradient_norm <= tolerance) return out;
    const double slope = 1e-4 * g.squaredNorm();
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd cand = out.point - step * g;
      const double fc = value(cand);
      if (fc <= fx - step * slope && fc < fx) {
        out.point = std::move(cand);
        fx = fc;
        last_accepted_step = step;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    ++out.iterations;
    if (!moved) break;
    step *= 2.0;
  }
  // Value comparisons bottom out at machine precision long before tight
  // gradient tolerances; polish with fixed steps driven by the gradient
  // norm alone.
  if (it < max_iterations) {
    step = last_accepted_step;
    Eigen::VectorXd g = gradient(out.point);
    out.gradient_norm = g.norm();
    double prev_norm = out.gradient_norm;
    int rejected = 0;
    for (; it < max_iterations && out.gradient_norm > tolerance; ++it) {
      const Eigen::VectorXd cand = out.point - step * g;
      const Eigen::VectorXd cand_g = gradient(cand);
      const double cand_norm = cand_g.norm();
      ++out.iterations;
      if (cand_norm < prev_norm) {
        out.point = cand;
        g = cand_g;
        prev_norm = cand_norm;
        out.gradient_norm = cand_norm;
        step *= 1.5;
        rejected = 0;
      } else {
        step *= 0.5;
        if (++rejected > 60) break;
      }
    }
  }
  out.gradient_norm = gradient(out.point).norm();
  return out;
}

SolveResult smoothing_solver(const SmoothedProblem& problem,
                             const Eigen::VectorXd& x0,
                             const SmoothingParams& params) {
  const auto start = Clock::now();
  Eigen::VectorXd x = x0;
  double lambda = params.lambda0;
  double step_hint = 1.0;

  SolveResult result;
  result.trace.reason = TerminationReason::max_iterations;
  for (int stage = 1; stage <= params.max_stages; ++stage) {
    const double lam = lambda;
    GradientDescentResult gd = gradient_descent_armijo(
        [&problem, lam](const Eigen::VectorXd& v) { return problem.value(v, lam); },
        [&problem, lam](const Eigen::VectorXd& v) { return problem.gradient(v, lam); },
        x, params.gradient_tolerance, params.stage_max_iterations, step_hint);
    const double d_t = (gd.point - x).squaredNorm();
    x = std::move(gd.point);
    const double fx = problem.true_objective(x);
    result.trace.rows.push_back(
        {stage, fx, d_t, 0.0, ms_since(start), false, gd.iterations, -1});
    if (!std::isfinite(fx)) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }
    if (lambda < params.lambda_min &&
        gd.gradient_norm <= params.gradient_tolerance) {
      result.trace.reason = TerminationReason::tolerance;
      break;
    }
    if (lambda >= params.lambda_min) lambda *= params.nu;
  }
  result.point = x;
  return result;
}

double estimate_lipschitz_gram(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gram_apply,
    Eigen::Index dim, std::uint64_t seed, int iterations) {
  SplitRng rng = SplitRng(seed).split("lipschitz-power");
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  v.normalize();
  double eig = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd gv = gram_apply(v);
    eig = gv.norm();
    if (eig == 0.0) return 0.0;
    v = gv / eig;
  }
  return eig;
}

double estimate_lipschitz_sampling(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    Eigen::Index dim, std::uint64_t seed, int pairs) {
  SplitRng rng = SplitRng(seed).split("lipschitz-sampling");
  double best = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Eigen::VectorXd a(dim), b(dim);
    for (Eigen::Index i = 0; i < dim; ++i) a[i] = rng.normal();
    for (Eigen::Index i = 0; i < dim; ++i) b[i] = rng.normal();
    const double dist = (a - b).norm();
    if (dist == 0.0) continue;
    best = std::max(best, (gradient(a) - gradient(b)).norm() / dist);
  }
  return best > 0.0 ? best : 1.0;
}

}  // namespace redistopt
