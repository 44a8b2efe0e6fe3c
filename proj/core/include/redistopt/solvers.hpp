#pragma once

#include "redistopt/composite.hpp"

namespace redistopt {

/// Nonmonotone accelerated proximal gradient. Requires an exact prox oracle.
/// Extrapolated steps are accepted against the relaxed reference c_t; on
/// rejection a plain proximal step at x_t is taken and the lower-objective
/// candidate wins.
SolveResult nmapg(const CompositeProblem& problem, const Eigen::VectorXd& x0,
                  const SolverParams& params);

/// Variant of nmapg tolerating inexact proximal steps: the iteration-t prox
/// gap is kept below eps_t, acceptance is tested against F(x_t), and the
/// candidate comparison of the exact method is dropped.
SolveResult inexact_nmapg(const CompositeProblem& problem,
                          const Eigen::VectorXd& x0,
                          const SolverParams& params);

/// Accelerated proximal gradient for convex smooth parts.
SolveResult fista(const CompositeProblem& problem, const Eigen::VectorXd& x0,
                  const SolverParams& params);

/// Sequential convex programming: proximal step on the convex split part at
/// the gradient of the smooth-plus-linearized-concave model.
SolveResult scp(const DcProblem& problem, const Eigen::VectorXd& x0,
                const SolverParams& params);

/// Convex-concave procedure: linearizes the concave split part and solves
/// each convex surrogate with fista.
struct CccpParams {
  SolverParams outer;
  int inner_max_iterations = 5000;
  double inner_tolerance = 1e-16;  ///< d_t threshold of the inner fista
};
SolveResult cccp(const DcProblem& problem, const Eigen::VectorXd& x0,
                 const CccpParams& params);

/// Smoothing continuation: minimizes F_lambda for lambda_i = lambda0 * nu^i
/// by gradient descent with Armijo backtracking, warm starting each stage,
/// until lambda < lambda_min and the stage gradient norm is below tolerance.
struct SmoothingParams {
  double lambda0 = 0.1;
  double nu = 0.95;
  double lambda_min = 1e-4;
  double gradient_tolerance = 1e-6;
  int stage_max_iterations = 500;
  int max_stages = 2000;
};
SolveResult smoothing_solver(const SmoothedProblem& problem,
                             const Eigen::VectorXd& x0,
                             const SmoothingParams& params);

/// Top eigenvalue of a symmetric PSD operator (e.g. the data Gram map) by
/// power iteration.
double estimate_lipschitz_gram(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gram_apply,
    Eigen::Index dim, std::uint64_t seed, int iterations = 100);

/// Backtracking-compatible modulus estimate from random gradient-difference
/// ratios.
double estimate_lipschitz_sampling(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    Eigen::Index dim, std::uint64_t seed, int pairs = 10);

/// Gradient descent with Armijo backtracking until ||grad|| <= tolerance or
/// the iteration budget runs out. Returns the reached point and iterations.
struct GradientDescentResult {
  Eigen::VectorXd point;
  int iterations = 0;
  double gradient_norm = 0.0;
};
GradientDescentResult gradient_descent_armijo(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    Eigen::VectorXd x0, double tolerance, int max_iterations,
    double initial_step = 1.0);

}  // namespace redistopt
