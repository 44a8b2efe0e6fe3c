#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "redistopt/composite.hpp"
#include "redistopt/kappa.hpp"

namespace redistopt {

/// Sparse observed entries of an m x n matrix, sorted by (row, col).
struct ObservedMatrix {
  struct Entry {
    int row;
    int col;
    double value;
  };
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<Entry> entries;

  /// Sorts entries and throws on out-of-range indices or duplicates.
  void finalize();
};

/// Low-rank factorization X = U B V^T with U, V orthonormal and B symmetric
/// positive semidefinite. An empty factor (rank 0) represents X = 0.
struct FactoredMatrix {
  Eigen::MatrixXd u;
  Eigen::MatrixXd b;
  Eigen::MatrixXd v;

  Eigen::Index rank() const { return b.rows(); }
  bool empty() const { return b.rows() == 0; }

  /// Largest violation of the orthonormality / symmetry / PSD invariants.
  double invariant_violation() const;
};

/// Squared inner product machinery: <X1, X2> through the factors only.
double factored_inner(const FactoredMatrix& a, const FactoredMatrix& b);
double factored_sq_norm(const FactoredMatrix& a);

/// 1/2 sum_{(i,j) in Omega} (X_ij - O_ij)^2 over observed entries only.
double completion_value(const FactoredMatrix& x, const ObservedMatrix& data);

/// Residual P_Omega(X - O), one value per observed entry (same order).
Eigen::VectorXd completion_residual(const FactoredMatrix& x,
                                    const ObservedMatrix& data);

/// Linear operator for nabla fbar(X): a sparse part living on the observed
/// entries plus an optional low-rank spectral part scale * P diag(w) Q^T.
struct GradOperator {
  const ObservedMatrix* pattern = nullptr;
  Eigen::VectorXd sparse_values;
  Eigen::MatrixXd p;
  Eigen::MatrixXd q;
  Eigen::VectorXd w;
  double scale = 0.0;

  Eigen::Index rows() const { return pattern->rows; }
  Eigen::Index cols() const { return pattern->cols; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd dense() const;
};

struct Rank1Triplet {
  Eigen::VectorXd u;
  double s = 0.0;
  Eigen::VectorXd v;
};

/// Leading singular triplet of the operator by power iteration (at most
/// max_iterations rounds, stopping when the singular value estimate is
/// stable to rel_tol). s >= 0; a zero operator returns s = 0 with arbitrary
/// unit vectors.
Rank1Triplet rank1_svd(const GradOperator& op, std::uint64_t seed,
                       int max_iterations = 100, double rel_tol = 1e-9);

/// Coefficients of the two-variable step-size program. All B-dependent
/// coefficients are zero when the factor is empty.
struct FwQpCoefficients {
  double b_fro_sq = 0.0;    ///< ||B_t||_F^2
  double cross = 0.0;       ///< (u^T U_t) B_t (V_t^T v)
  double s = 0.0;           ///< <u v^T, nabla fbar(X_t)> for the chosen atom
  double grad_inner = 0.0;  ///< <B_t, U_t^T nabla fbar(X_t) V_t>
  double b_nuclear = 0.0;   ///< tr(B_t)
};

struct FwStep {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Exact minimizer of the convex quadratic over the nonnegative quadrant via
/// KKT case enumeration (interior, both edges, origin).
FwStep fw_qp(const FwQpCoefficients& coeff, double lbar, double mubar);

struct WarmstartResult {
  FactoredMatrix factor;     ///< after symmetrization / PSD projection
  Eigen::MatrixXd u_basis;   ///< QR basis of [U, u] (pre-projection)
  Eigen::MatrixXd v_basis;   ///< QR basis of [V, v]
  Eigen::MatrixXd b_raw;     ///< R_U blockdiag(alpha B, beta) R_V^T
};

/// Expresses alpha * U B V^T + beta * u v^T in factored form via QR of the
/// augmented bases; u_basis * b_raw * v_basis^T reproduces it exactly, and
/// the returned factor is the PSD-projected (rank-pruned) version.
WarmstartResult warmstart(const FactoredMatrix& x, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v, double alpha, double beta);

/// Objective f(U B V^T) + gbar(B) + mubar * tr(B) of the factored local
/// problem; spec == nullptr selects the convex path (gbar = 0, mubar = mu).
double factored_objective(const FactoredMatrix& x, const ObservedMatrix& data,
                          const KappaSpec* spec, double mu);

/// Alternating descent on (U, B, V) with QR retraction for the orthonormal
/// blocks and PSD projection (with rank pruning) for B. Never increases the
/// objective; returns the input when no decreasing step exists.
FactoredMatrix local_optimize(const FactoredMatrix& x,
                              const ObservedMatrix& data,
                              const KappaSpec* spec, double mu, int sweeps);

struct FwParams {
  std::uint64_t seed = 0;
  int local_sweeps = 30;
  double tolerance = 0.0;  ///< stop when ||X_{t+1} - X_t||_F^2 < tolerance
};

struct FwResult {
  FactoredMatrix factor;
  SolveTrace trace;
  std::vector<double> warmstart_objectives;  ///< objective before local step
};

/// Frank-Wolfe on the transformed low-rank problem: per iteration a rank-one
/// SVD of the gradient operator, the two-variable program, QR warm-start and
/// factored local refinement. spec == nullptr runs the convex nuclear-norm
/// path (spectral weights identically zero).
FwResult fw_solve(const ObservedMatrix& data, const KappaSpec* spec, double mu,
                  int max_outer, const FwParams& params);

/// Distance of the factor from first-order criticality of the transformed
/// problem, combining the in-span stationarity residual with the out-of-span
/// spectral excess over mubar. Dense computation; intended for diagnostics
/// at desk scale.
double critical_residual(const FactoredMatrix& x, const ObservedMatrix& data,
                         const KappaSpec* spec, double mu);

}  // namespace redistopt
