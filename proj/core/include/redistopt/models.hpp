#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "redistopt/admm.hpp"
#include "redistopt/composite.hpp"
#include "redistopt/kappa.hpp"
#include "redistopt/lowrank.hpp"
#include "redistopt/prox.hpp"

namespace redistopt {

struct Dataset {
  Eigen::MatrixXd features;       ///< N x d design, one row per sample
  Eigen::VectorXd targets;        ///< reals, or +-1 labels for logistic tasks
  Eigen::VectorXd sample_weights; ///< empty means all-ones

  Eigen::Index samples() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

struct ImageGrid {
  Eigen::MatrixXd pixels;  ///< values in [0, 1]
  enum class Provenance { clean, corrupted } provenance = Provenance::clean;
};

/// Square-loss sparse group lasso with per-coordinate and per-group concave
/// penalties redistributed: smooth part carries the concave remainders, the
/// convex part is the kappa0-scaled sparse group norm with its exact prox.
CompositeProblem build_sparse_group(const Dataset& data, const KappaSpec& spec,
                                    double lambda, const GroupStructure& groups);

/// Convex sparse group lasso (kappa identity), the fista baseline.
CompositeProblem build_sparse_group_convex(const Dataset& data, double lambda,
                                           const GroupStructure& groups);

/// Weighted logistic loss with tree-structured concave group penalties;
/// the convex part's prox is the exact one-pass tree prox.
CompositeProblem build_tree(const Dataset& data, const KappaSpec& spec,
                            double mu, const GroupStructure& tree);

CompositeProblem build_tree_convex(const Dataset& data, double mu,
                                   const GroupStructure& tree);

/// Nonconvex TV denoising with nonconvex l1-type loss, both redistributed;
/// the convex part's prox is the duality-gap-controlled TV prox.
CompositeProblem build_tv_denoise(const ImageGrid& noisy, const KappaSpec& spec,
                                  double mu);

/// Convex baseline min ||X - Y||_1 + mu TV(X) as a composite with zero
/// smooth part (proximal point on the convex objective).
CompositeProblem build_tv_denoise_convex(const ImageGrid& noisy, double mu);

/// Robust sparse coding with nonconvex absolute loss and penalty.
CompositeProblem build_rsc(const Eigen::VectorXd& y, const Eigen::MatrixXd& d,
                           const KappaSpec& spec, double mu);

CompositeProblem build_rsc_convex(const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& d, double mu);

/// Quadratic-convexification DC split for the elementwise penalty
/// lambda * sum_i kappa(|x_i|) over a square loss.
DcProblem build_lasso_dc(const Dataset& data, const KappaSpec& spec,
                         double lambda);

/// Same split for the group penalty sum_j mu_j kappa(||x_{G_j}||)
/// (disjoint groups; dimensions outside groups are unpenalized).
DcProblem build_group_dc(const Dataset& data, const KappaSpec& spec,
                         const GroupStructure& groups);

/// DC split of the TV-denoising objective; the convex surrogate part is the
/// kappa0-scaled l1+TV whose prox is solved through the dual.
DcProblem build_tv_denoise_dc(const ImageGrid& noisy, const KappaSpec& spec,
                              double mu);

/// Smoothing-continuation surrogates (LSP only).
SmoothedProblem build_lasso_smoothed(const Dataset& data, const KappaSpec& spec,
                                     double lambda);
SmoothedProblem build_tv_denoise_smoothed(const ImageGrid& noisy,
                                          const KappaSpec& spec, double mu);

/// Consensus split of the regularized least-squares problem over M shards;
/// spec == nullptr builds the convex (plain l1) version.
ConsensusProblem build_consensus_least_squares(const Dataset& data,
                                               const KappaSpec* spec,
                                               double lambda, int shards);

struct SparseGroupInstance {
  Dataset data;
  Eigen::VectorXd x_bar;
  GroupStructure groups;
};

/// Group-sparse regression recipe: standard-normal design, a fraction of
/// groups zeroed, a fraction of features zeroed inside surviving groups,
/// Gaussian observation noise. Bit-identical for a fixed seed.
SparseGroupInstance synth_sparse_group(int d, int n_groups,
                                       double zero_group_frac,
                                       double within_zero_frac, int n_samples,
                                       double noise_sigma, std::uint64_t seed);

struct TreeInstance {
  Dataset data;
  Eigen::VectorXd x_bar;
  GroupStructure tree;  ///< weights set to 1/sqrt(|G|)
};

/// 64-dimensional 3-level balanced tree with a signal planted on a few leaf
/// subtrees; logistic labels with class-imbalance weights.
TreeInstance synth_tree_logistic(int n_samples, double noise_sigma,
                                 std::uint64_t seed);

struct DenoiseInstance {
  ImageGrid clean;
  ImageGrid noisy;
};

/// Piecewise-constant block image in [0, 1].
ImageGrid synth_block_image(int m, int n);

/// Salt-and-pepper corruption: the given fraction of pixels is set to 0 or 1
/// with equal probability.
DenoiseInstance synth_denoise(int m, int n, double corrupt_frac,
                              std::uint64_t seed);

struct RscInstance {
  Eigen::VectorXd y;
  Eigen::MatrixXd dictionary;
  Eigen::VectorXd x_bar;
};

RscInstance synth_rsc(int m, int d, int sparsity, double outlier_frac,
                      std::uint64_t seed);

struct CompletionInstance {
  ObservedMatrix train;
  ObservedMatrix heldout;
  Eigen::MatrixXd truth;
};

/// Planted rank-r matrix with a random observed subset split into train and
/// held-out parts.
CompletionInstance synth_completion(int m, int n, int rank,
                                    double observe_frac, double heldout_frac,
                                    double noise_sigma, std::uint64_t seed);

/// Test RMSE of a factored completion against held-out entries.
double completion_rmse(const FactoredMatrix& x, const ObservedMatrix& heldout);

}  // namespace redistopt
