// Test-only reference oracles, independent of the library's solution paths:
// projected subgradient descent for convex minimization, grid search, and
// finite differences.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "redistopt/rng.hpp"

namespace oracles {

// Subgradient descent with decreasing steps on a convex objective. The
// subgradient callback may return any element of the subdifferential.
inline Eigen::VectorXd subgradient_minimize(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& subgradient,
    Eigen::VectorXd x, int iterations, double step0) {
  Eigen::VectorXd best = x;
  double best_val = value(x);
  for (int k = 1; k <= iterations; ++k) {
    Eigen::VectorXd g = subgradient(x);
    const double norm = g.norm();
    if (norm == 0.0) break;
    x -= (step0 / std::sqrt(static_cast<double>(k))) * g / norm;
    const double v = value(x);
    if (v < best_val) {
      best_val = v;
      best = x;
    }
  }
  return best;
}

// sign with sign(0) = 0, the canonical l1 subgradient element.
inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Armijo gradient descent, independent of the library's solvers. Meant for
// eps-smoothed surrogates of nonsmooth convex objectives: replacing ||u||
// by sqrt(||u||^2 + eps^2) with eps ~ 1e-12 perturbs the minimizer by an
// amount far below the 1e-4 comparisons used in the tests.
inline Eigen::VectorXd armijo_minimize(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    Eigen::VectorXd x, int iterations = 5000, double grad_tol = 1e-11) {
  double step = 1.0;
  double fx = value(x);
  for (int k = 0; k < iterations; ++k) {
    const Eigen::VectorXd g = gradient(x);
    if (g.norm() <= grad_tol) break;
    const double slope = 1e-4 * g.squaredNorm();
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd cand = x - step * g;
      const double fc = value(cand);
      if (fc <= fx - step * slope) {
        x = std::move(cand);
        fx = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    step *= 2.0;
  }
  return x;
}

// sqrt(||u||^2 + eps^2) and its gradient, the smoothing used by the oracle.
inline double smooth_norm(const Eigen::VectorXd& u, double eps = 1e-12) {
  return std::sqrt(u.squaredNorm() + eps * eps);
}
inline double smooth_abs(double u, double eps = 1e-12) {
  return std::sqrt(u * u + eps * eps);
}

// One weighted analysis-l1 term w * sum_i |(A x - b)_i| of a composite.
struct L1Term {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double weight;
};

// Minimizes 1/2 ||x - z||^2 + sum_t w_t ||A_t x - b_t||_1 by damped Newton
// on an eps-smoothed surrogate with continuation eps -> 1e-11. Dense and
// cubic in the dimension; intended for instances of dimension <= 16.
inline Eigen::VectorXd newton_smoothed_l1(const Eigen::VectorXd& z,
                                          const std::vector<L1Term>& terms) {
  const Eigen::Index d = z.size();
  Eigen::VectorXd x = z;
  for (double eps = 1e-2; eps >= 0.9e-11; eps *= 0.1) {
    for (int it = 0; it < 60; ++it) {
      Eigen::VectorXd grad = x - z;
      Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(d, d);
      for (const auto& term : terms) {
        const Eigen::VectorXd u = term.a * x - term.b;
        Eigen::VectorXd psi1(u.size()), psi2(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          const double s = std::sqrt(u[i] * u[i] + eps * eps);
          psi1[i] = u[i] / s;
          psi2[i] = eps * eps / (s * s * s);
        }
        grad.noalias() += term.weight * (term.a.transpose() * psi1);
        hess.noalias() +=
            term.weight * (term.a.transpose() * psi2.asDiagonal() * term.a);
      }
      const Eigen::VectorXd step = hess.ldlt().solve(grad);
      if (step.norm() <= 1e-14 * (1.0 + x.norm())) break;
      const auto value = [&](const Eigen::VectorXd& v) {
        double val = 0.5 * (v - z).squaredNorm();
        for (const auto& term : terms) {
          const Eigen::VectorXd u = term.a * v - term.b;
          for (Eigen::Index i = 0; i < u.size(); ++i) {
            val += term.weight * std::sqrt(u[i] * u[i] + eps * eps);
          }
        }
        return val;
      };
      const double f0 = value(x);
      double t = 1.0;
      for (int bt = 0; bt < 50; ++bt) {
        if (value(x - t * step) < f0) break;
        t *= 0.5;
      }
      x -= t * step;
    }
  }
  return x;
}

// One weighted group term w * ||A x - b||_2.
struct L2Term {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double weight;
};

// Newton-with-continuation for 1/2||x-z||^2 + sum l1 terms + sum group
// terms, smoothing each norm as sqrt(||.||^2 + eps^2).
inline Eigen::VectorXd newton_smoothed_mixed(const Eigen::VectorXd& z,
                                             const std::vector<L1Term>& l1_terms,
                                             const std::vector<L2Term>& l2_terms) {
  const Eigen::Index d = z.size();
  Eigen::VectorXd x = z;
  for (double eps = 1e-2; eps >= 0.9e-11; eps *= 0.1) {
    for (int it = 0; it < 60; ++it) {
      Eigen::VectorXd grad = x - z;
      Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(d, d);
      for (const auto& term : l1_terms) {
        const Eigen::VectorXd u = term.a * x - term.b;
        Eigen::VectorXd psi1(u.size()), psi2(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          const double s = std::sqrt(u[i] * u[i] + eps * eps);
          psi1[i] = u[i] / s;
          psi2[i] = eps * eps / (s * s * s);
        }
        grad.noalias() += term.weight * (term.a.transpose() * psi1);
        hess.noalias() +=
            term.weight * (term.a.transpose() * psi2.asDiagonal() * term.a);
      }
      for (const auto& term : l2_terms) {
        const Eigen::VectorXd u = term.a * x - term.b;
        const double s = std::sqrt(u.squaredNorm() + eps * eps);
        grad.noalias() += term.weight * (term.a.transpose() * u) / s;
        const Eigen::MatrixXd au = term.a.transpose() * u;
        hess.noalias() += term.weight *
                          (term.a.transpose() * term.a / s -
                           au * au.transpose() / (s * s * s));
      }
      const Eigen::VectorXd step = hess.ldlt().solve(grad);
      if (step.norm() <= 1e-14 * (1.0 + x.norm())) break;
      const auto value = [&](const Eigen::VectorXd& v) {
        double val = 0.5 * (v - z).squaredNorm();
        for (const auto& term : l1_terms) {
          const Eigen::VectorXd u = term.a * v - term.b;
          for (Eigen::Index i = 0; i < u.size(); ++i) {
            val += term.weight * std::sqrt(u[i] * u[i] + eps * eps);
          }
        }
        for (const auto& term : l2_terms) {
          const Eigen::VectorXd u = term.a * v - term.b;
          val += term.weight * std::sqrt(u.squaredNorm() + eps * eps);
        }
        return val;
      };
      const double f0 = value(x);
      double t = 1.0;
      for (int bt = 0; bt < 50; ++bt) {
        if (value(x - t * step) < f0) break;
        t *= 0.5;
      }
      x -= t * step;
    }
  }
  return x;
}

// Same Newton-with-continuation oracle for least-squares composites
// 1/2 ||A x - y||^2 + sum_t w_t ||A_t x - b_t||_1.
inline Eigen::VectorXd newton_smoothed_lasso(const Eigen::MatrixXd& a,
                                             const Eigen::VectorXd& y,
                                             const std::vector<L1Term>& terms,
                                             Eigen::VectorXd x0) {
  const Eigen::Index d = a.cols();
  Eigen::VectorXd x = std::move(x0);
  const Eigen::MatrixXd gram = a.transpose() * a;
  for (double eps = 1e-2; eps >= 0.9e-11; eps *= 0.1) {
    for (int it = 0; it < 60; ++it) {
      Eigen::VectorXd grad = a.transpose() * (a * x - y);
      Eigen::MatrixXd hess = gram;
      for (const auto& term : terms) {
        const Eigen::VectorXd u = term.a * x - term.b;
        Eigen::VectorXd psi1(u.size()), psi2(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          const double s = std::sqrt(u[i] * u[i] + eps * eps);
          psi1[i] = u[i] / s;
          psi2[i] = eps * eps / (s * s * s);
        }
        grad.noalias() += term.weight * (term.a.transpose() * psi1);
        hess.noalias() +=
            term.weight * (term.a.transpose() * psi2.asDiagonal() * term.a);
      }
      hess.diagonal().array() += 1e-12;
      const Eigen::VectorXd step = hess.ldlt().solve(grad);
      if (step.norm() <= 1e-14 * (1.0 + x.norm())) break;
      const auto value = [&](const Eigen::VectorXd& v) {
        double val = 0.5 * (a * v - y).squaredNorm();
        for (const auto& term : terms) {
          const Eigen::VectorXd u = term.a * v - term.b;
          for (Eigen::Index i = 0; i < u.size(); ++i) {
            val += term.weight * std::sqrt(u[i] * u[i] + eps * eps);
          }
        }
        return val;
      };
      const double f0 = value(x);
      double t = 1.0;
      for (int bt = 0; bt < 50; ++bt) {
        if (value(x - t * step) < f0) break;
        t *= 0.5;
      }
      x -= t * step;
    }
  }
  return x;
}

// Dense matrix of a linear map given through its action, via basis probing.
inline Eigen::MatrixXd densify(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
    Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    e[j] = 1.0;
    out.col(j) = apply(e);
    e[j] = 0.0;
  }
  return out;
}

// Dense central finite differences of a scalar function.
inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = value(probe);
    probe[i] = x[i] - h;
    const double fm = value(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Best value of a 1-D function over a uniform grid.
inline double grid_minimize_1d(const std::function<double(double)>& f,
                               double lo, double hi, int points) {
  double best_x = lo;
  double best_f = f(lo);
  for (int i = 1; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return best_x;
}

inline Eigen::VectorXd random_vector(redistopt::SplitRng& rng, Eigen::Index n,
                                     double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Eigen::MatrixXd random_matrix(redistopt::SplitRng& rng, Eigen::Index m,
                                     Eigen::Index n, double scale = 1.0) {
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) a(i, j) = scale * rng.normal();
  }
  return a;
}

}  // namespace oracles
