#pragma once

#include <Eigen/Core>
#include <vector>

namespace redistopt {

enum class GroupKind { disjoint, tree };

/// Index groups over a d-vector with per-group weights. Disjoint structures
/// partition a subset of the dimensions; tree structures form a laminar
/// family (any two groups are disjoint or nested).
struct GroupStructure {
  std::vector<std::vector<int>> groups;  ///< 0-based indices
  std::vector<double> weights;
  GroupKind kind = GroupKind::disjoint;

  /// Throws std::invalid_argument if the structure violates its kind
  /// (overlap for disjoint, non-laminar for tree), has out-of-range
  /// indices for dimension d, or negative weights.
  void validate(Eigen::Index d) const;
};

/// Result of a proximal step. Closed-form operators report gap = 0 and
/// inner_iterations = 0; dual solvers report the certified duality gap.
struct ProxResult {
  Eigen::VectorXd point;
  double gap = 0.0;
  int inner_iterations = 0;
};

/// Componentwise soft threshold sign(z_i) * max(|z_i| - lam, 0).
Eigen::VectorXd prox_l1(const Eigen::VectorXd& z, double lam);

/// Block shrinkage max(1 - lam/||z||, 0) * z.
Eigen::VectorXd prox_group_l2(const Eigen::VectorXd& z, double lam);

/// Exact prox of lam*||x||_1 + sum_j w_j ||x_{G_j}||_2 over disjoint groups:
/// soft threshold everywhere, then shrink each group block by its weight.
/// Dimensions outside all groups receive the soft threshold only.
Eigen::VectorXd prox_sparse_group(const Eigen::VectorXd& z, double lam,
                                  const GroupStructure& groups);

/// Exact prox of sum_j w_j ||x_{G_j}||_2 over a laminar (tree) family,
/// applying group shrinkage leaves-to-root in one pass.
Eigen::VectorXd prox_tree(const Eigen::VectorXd& z,
                          const GroupStructure& groups);

/// Exact prox of c * (kappa(||x||) + (rho/2)||x||^2) -- the radial convex
/// part of the quadratic-convexification DC split. Reduces to a monotone
/// one-dimensional root find on the magnitude; solved to machine precision.
struct KappaSpec;
Eigen::VectorXd prox_convexified_group(const Eigen::VectorXd& z, double c,
                                       const KappaSpec& spec);

/// Scalar version of prox_convexified_group.
double prox_convexified_scalar(double z, double c, const KappaSpec& spec);

}  // namespace redistopt
