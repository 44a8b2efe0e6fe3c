#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>

namespace redistopt {

/// Concave penalty generators. All are concave, non-decreasing on [0, inf)
/// with kappa(0) = 0 and a Lipschitz-continuous derivative; capped-l1 and l0
/// do not qualify and are excluded at the type level.
enum class KappaVariant { gp, lsp, mcp, laplace, scad };

/// One concave penalty with its shape parameters. beta scales the penalty,
/// theta controls where it flattens out.
struct KappaSpec {
  KappaVariant variant;
  double beta;
  double theta;

  KappaSpec(KappaVariant variant, double beta, double theta);
};

/// kappa(alpha) for alpha >= 0. Throws std::domain_error on negative input.
double kappa_value(const KappaSpec& spec, double alpha);

/// kappa'(alpha) for alpha >= 0. The piecewise variants (MCP, SCAD) have
/// branches that agree at the joints, so the derivative is continuous.
double kappa_derivative(const KappaSpec& spec, double alpha);

struct DerivedConstants {
  double kappa0;  ///< kappa'(0); slope of the convexified norm term.
  double rho;     ///< Lipschitz constant of kappa'.
};

DerivedConstants derived_constants(const KappaSpec& spec);

/// Scalar concave remainder kappa(|x|) - kappa0*|x| with its derivative.
/// Smooth everywhere, including x = 0 where the derivative vanishes.
struct ValueDeriv {
  double value;
  double derivative;
};

ValueDeriv bar_scalar(const KappaSpec& spec, double x);

/// Group concave remainder kappa(||z||) - kappa0*||z|| and its gradient.
/// Concave and 2*rho-Lipschitz smooth; the gradient at z = 0 is zero.
struct ValueGrad {
  double value;
  Eigen::VectorXd gradient;
};

ValueGrad bar_group(const KappaSpec& spec, const Eigen::VectorXd& z);

/// Spectral concave remainder mu * sum_i (kappa(sigma_i) - kappa0*sigma_i)
/// over a vector of singular values, plus the per-singular-value weights
/// w_i = kappa'(sigma_i) - kappa0 used to assemble the matrix gradient
/// mu * U diag(w) V^T. Weights are returned unscaled by mu.
struct SpectralBar {
  double value;
  Eigen::VectorXd weights;
};

SpectralBar bar_spectral(const KappaSpec& spec, const Eigen::VectorXd& sigma,
                         double mu);

/// LSP penalty with the kink at zero rounded off over radius lambda.
struct SmoothedKappaSpec {
  KappaSpec base;
  double lambda;

  SmoothedKappaSpec(KappaSpec base, double lambda);
};

/// Smoothed penalty value and derivative at any real x. Agrees with
/// kappa(|x|) whenever |x| >= lambda.
ValueDeriv smoothed_kappa(const SmoothedKappaSpec& spec, double x);

/// Parses "lsp:beta=0.5,theta=1.5" style selection strings.
KappaSpec parse_kappa_spec(std::string_view text);

std::string to_string(const KappaSpec& spec);
std::string_view variant_name(KappaVariant v);

}  // namespace redistopt
