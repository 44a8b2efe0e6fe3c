#pragma once

#include <Eigen/Core>

#include "redistopt/prox.hpp"

namespace redistopt {

/// Vertical forward differences: (D_v X)_{ij} = X_{i+1,j} - X_{ij},
/// shape (m-1) x n. Applied matrix-free.
Eigen::MatrixXd tv_dv(const Eigen::MatrixXd& x);

/// Adjoint of tv_dv: D_v^T P for P of shape (m-1) x n, result m x n.
Eigen::MatrixXd tv_dvt(const Eigen::MatrixXd& p);

/// Horizontal forward differences: (X D_h)_{ij} = X_{i,j+1} - X_{ij},
/// shape m x (n-1).
Eigen::MatrixXd tv_dh(const Eigen::MatrixXd& x);

/// Adjoint of tv_dh: Q D_h^T for Q of shape m x (n-1), result m x n.
Eigen::MatrixXd tv_dht(const Eigen::MatrixXd& q);

/// Anisotropic total variation ||D_v X||_1 + ||X D_h||_1.
double tv_value(const Eigen::MatrixXd& x);

struct TvProxResult {
  Eigen::MatrixXd point;
  double gap = 0.0;
  int inner_iterations = 0;
};

/// Solves argmin_X 1/2 ||X - Z||_F^2 + (1/tau) (||X - Y||_1 [if include_l1]
/// + mu * TV(X)) by accelerated projected gradient on the box-constrained
/// dual. Stops once the duality gap certified at the recovered primal point
/// drops below eps, or after max_inner iterations (then returns the best
/// iterate with its true gap).
TvProxResult prox_tv_inexact(const Eigen::MatrixXd& z, const Eigen::MatrixXd* y,
                             double mu, double tau, double eps,
                             bool include_l1, int max_inner = 10000);

/// Solves argmin_x 1/2 ||x - z||^2 + (1/tau) (||y - D x||_1 + mu ||x||_1)
/// through its box-constrained dual, same stopping contract as
/// prox_tv_inexact.
ProxResult prox_l1_analysis(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& d, double mu, double tau,
                            double eps, int max_inner = 10000);

}  // namespace redistopt
