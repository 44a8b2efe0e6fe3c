#include "redistopt/kappa.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace redistopt {

namespace {

void require_nonneg(double alpha) {
  if (alpha < 0.0) {
    throw std::domain_error("kappa: alpha must be non-negative");
  }
}

}  // namespace

KappaSpec::KappaSpec(KappaVariant variant, double beta, double theta)
    : variant(variant), beta(beta), theta(theta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("KappaSpec: beta must be positive");
  }
  if (!(theta > 0.0)) {
    throw std::invalid_argument("KappaSpec: theta must be positive");
  }
  if (variant == KappaVariant::scad && !(theta > 1.0)) {
    throw std::invalid_argument("KappaSpec: SCAD requires theta > 1");
  }
}

double kappa_value(const KappaSpec& spec, double alpha) {
  require_nonneg(alpha);
  const double beta = spec.beta;
  const double theta = spec.theta;
  switch (spec.variant) {
    case KappaVariant::gp:
      return beta * alpha / (theta + alpha);
    case KappaVariant::lsp:
      return beta * std::log1p(alpha / theta);
    case KappaVariant::mcp:
      if (alpha <= beta * theta) {
        return beta * alpha - alpha * alpha / (2.0 * theta);
      }
      return 0.5 * theta * beta * beta;
    case KappaVariant::laplace:
      return beta * (-std::expm1(-alpha / theta));
    case KappaVariant::scad:
      if (alpha <= beta) {
        return beta * alpha;
      }
      if (alpha <= theta * beta) {
        return (-alpha * alpha + 2.0 * theta * beta * alpha - beta * beta) /
               (2.0 * (theta - 1.0));
      }
      return beta * beta * (1.0 + theta) / 2.0;
  }
  throw std::logic_error("kappa_value: unknown variant");
}

double kappa_derivative(const KappaSpec& spec, double alpha) {
  require_nonneg(alpha);
  const double beta = spec.beta;
  const double theta = spec.theta;
  switch (spec.variant) {
    case KappaVariant::gp: {
      const double denom = theta + alpha;
      return beta * theta / (denom * denom);
    }
    case KappaVariant::lsp:
      return beta / (theta + alpha);
    case KappaVariant::mcp:
      if (alpha <= beta * theta) {
        return beta - alpha / theta;
      }
      return 0.0;
    case KappaVariant::laplace:
      return beta / theta * std::exp(-alpha / theta);
    case KappaVariant::scad:
      if (alpha <= beta) {
        return beta;
      }
      if (alpha <= theta * beta) {
        return (theta * beta - alpha) / (theta - 1.0);
      }
      return 0.0;
  }
  throw std::logic_error("kappa_derivative: unknown variant");
}

DerivedConstants derived_constants(const KappaSpec& spec) {
  const double beta = spec.beta;
  const double theta = spec.theta;
  switch (spec.variant) {
    case KappaVariant::gp:
      return {beta / theta, 2.0 * beta / (theta * theta)};
    case KappaVariant::lsp:
      return {beta / theta, beta / (theta * theta)};
    case KappaVariant::mcp:
      return {beta, 1.0 / theta};
    case KappaVariant::laplace:
      return {beta / theta, beta / (theta * theta)};
    case KappaVariant::scad:
      return {beta, 1.0 / (theta - 1.0)};
  }
  throw std::logic_error("derived_constants: unknown variant");
}

ValueDeriv bar_scalar(const KappaSpec& spec, double x) {
  const double kappa0 = derived_constants(spec).kappa0;
  const double a = std::abs(x);
  if (a == 0.0) {
    return {0.0, 0.0};
  }
  const double value = kappa_value(spec, a) - kappa0 * a;
  const double deriv = (x > 0.0 ? 1.0 : -1.0) * (kappa_derivative(spec, a) - kappa0);
  return {value, deriv};
}

ValueGrad bar_group(const KappaSpec& spec, const Eigen::VectorXd& z) {
  const double kappa0 = derived_constants(spec).kappa0;
  const double norm = z.norm();
  if (norm == 0.0) {
    return {0.0, Eigen::VectorXd::Zero(z.size())};
  }
  const double value = kappa_value(spec, norm) - kappa0 * norm;
  const double factor = (kappa_derivative(spec, norm) - kappa0) / norm;
  return {value, factor * z};
}

SpectralBar bar_spectral(const KappaSpec& spec, const Eigen::VectorXd& sigma,
                         double mu) {
  const double kappa0 = derived_constants(spec).kappa0;
  double value = 0.0;
  Eigen::VectorXd weights(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i];
    if (s < 0.0) {
      throw std::domain_error("bar_spectral: singular values must be non-negative");
    }
    value += kappa_value(spec, s) - kappa0 * s;
    weights[i] = kappa_derivative(spec, s) - kappa0;
  }
  return {mu * value, weights};
}

SmoothedKappaSpec::SmoothedKappaSpec(KappaSpec base, double lambda)
    : base(base), lambda(lambda) {
  if (base.variant != KappaVariant::lsp) {
    throw std::invalid_argument("SmoothedKappaSpec: only the LSP variant is supported");
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("SmoothedKappaSpec: lambda must be positive");
  }
}

ValueDeriv smoothed_kappa(const SmoothedKappaSpec& spec, double x) {
  const double beta = spec.base.beta;
  const double theta = spec.base.theta;
  const double lam = spec.lambda;
  const double a = std::abs(x);
  double h, dh;
  if (a >= lam) {
    h = a;
    dh = x > 0.0 ? 1.0 : -1.0;
  } else {
    h = x * x / (2.0 * lam) + lam / 2.0;
    dh = x / lam;
  }
  const double value = beta * std::log1p(h / theta);
  const double deriv = beta / (theta + h) * dh;
  return {value, deriv};
}

std::string_view variant_name(KappaVariant v) {
  switch (v) {
    case KappaVariant::gp: return "gp";
    case KappaVariant::lsp: return "lsp";
    case KappaVariant::mcp: return "mcp";
    case KappaVariant::laplace: return "laplace";
    case KappaVariant::scad: return "scad";
  }
  return "?";
}

KappaSpec parse_kappa_spec(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  KappaVariant variant;
  if (name == "gp") variant = KappaVariant::gp;
  else if (name == "lsp") variant = KappaVariant::lsp;
  else if (name == "mcp") variant = KappaVariant::mcp;
  else if (name == "laplace") variant = KappaVariant::laplace;
  else if (name == "scad") variant = KappaVariant::scad;
  else throw std::invalid_argument("parse_kappa_spec: unknown variant '" + std::string(name) + "'");

  double beta = 1.0;
  double theta = 1.0;
  bool have_beta = false, have_theta = false;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw std::invalid_argument("parse_kappa_spec: expected key=value in '" + std::string(item) + "'");
      }
      const std::string_view key = item.substr(0, eq);
      const std::string value_str(item.substr(eq + 1));
      std::size_t used = 0;
      const double value = std::stod(value_str, &used);
      if (used != value_str.size()) {
        throw std::invalid_argument("parse_kappa_spec: bad number '" + value_str + "'");
      }
      if (key == "beta") { beta = value; have_beta = true; }
      else if (key == "theta") { theta = value; have_theta = true; }
      else throw std::invalid_argument("parse_kappa_spec: unknown parameter '" + std::string(key) + "'");
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  if (!have_beta || !have_theta) {
    throw std::invalid_argument("parse_kappa_spec: beta and theta are both required");
  }
  return KappaSpec(variant, beta, theta);
}

std::string to_string(const KappaSpec& spec) {
  return std::string(variant_name(spec.variant)) + ":beta=" +
         std::to_string(spec.beta) + ",theta=" + std::to_string(spec.theta);
}

}  // namespace redistopt
