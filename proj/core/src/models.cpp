#include "redistopt/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "redistopt/prox_dual.hpp"
#include "redistopt/rng.hpp"
#include "redistopt/solvers.hpp"

namespace redistopt {

namespace {

Eigen::VectorXd resolve_weights(const Dataset& data) {
  if (data.sample_weights.size() == 0) {
    return Eigen::VectorXd::Ones(data.samples());
  }
  return data.sample_weights;
}

double square_loss(const Dataset& data, const Eigen::VectorXd& x) {
  return 0.5 * (data.features * x - data.targets).squaredNorm();
}

Eigen::VectorXd square_loss_grad(const Dataset& data, const Eigen::VectorXd& x) {
  return data.features.transpose() * (data.features * x - data.targets);
}

double square_loss_modulus(const Dataset& data) {
  return estimate_lipschitz_gram(
      [&data](const Eigen::VectorXd& v) {
        return (data.features.transpose() * (data.features * v)).eval();
      },
      data.dim(), 0x6772616dULL);
}

double log1pexp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double logistic_loss(const Dataset& data, const Eigen::VectorXd& w,
                     const Eigen::VectorXd& x) {
  const Eigen::VectorXd margins =
      data.targets.cwiseProduct(data.features * x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    loss += w[i] * log1pexp(-margins[i]);
  }
  return loss;
}

Eigen::VectorXd logistic_loss_grad(const Dataset& data, const Eigen::VectorXd& w,
                                   const Eigen::VectorXd& x) {
  const Eigen::VectorXd margins =
      data.targets.cwiseProduct(data.features * x);
  Eigen::VectorXd coeff(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    const double sigma = 1.0 / (1.0 + std::exp(margins[i]));
    coeff[i] = -w[i] * data.targets[i] * sigma;
  }
  return data.features.transpose() * coeff;
}

GroupStructure scale_weights(const GroupStructure& groups, double factor) {
  GroupStructure scaled = groups;
  for (double& w : scaled.weights) w *= factor;
  return scaled;
}

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[idx[k]];
  return out;
}

void scatter_add(Eigen::VectorXd& x, const std::vector<int>& idx,
                 const Eigen::VectorXd& values, double factor) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    x[idx[k]] += factor * values[static_cast<Eigen::Index>(k)];
  }
}

Eigen::Map<const Eigen::MatrixXd> as_matrix(const Eigen::VectorXd& x,
                                            Eigen::Index m, Eigen::Index n) {
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), m, n);
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
}

}  // namespace

CompositeProblem build_sparse_group(const Dataset& data, const KappaSpec& spec,
                                    double lambda, const GroupStructure& groups) {
  if (groups.kind != GroupKind::disjoint) {
    throw std::invalid_argument("build_sparse_group: disjoint groups required");
  }
  groups.validate(data.dim());
  const auto constants = derived_constants(spec);
  const double kappa0 = constants.kappa0;
  const double rho = constants.rho;
  const double max_group_weight =
      groups.weights.empty()
          ? 0.0
          : *std::max_element(groups.weights.begin(), groups.weights.end());

  CompositeProblem problem;
  problem.dim = data.dim();
  problem.lipschitz =
      square_loss_modulus(data) + 2.0 * rho * (lambda + max_group_weight);
  problem.smooth_value = [data, spec, lambda, groups](const Eigen::VectorXd& x) {
    double val = square_loss(data, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      val += lambda * bar_scalar(spec, x[i]).value;
    }
    for (std::size_t j = 0; j < groups.groups.size(); ++j) {
      val += groups.weights[j] * bar_group(spec, gather(x, groups.groups[j])).value;
    }
    return val;
  };
  problem.smooth_gradient = [data, spec, lambda, groups](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = square_loss_grad(data, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      g[i] += lambda * bar_scalar(spec, x[i]).derivative;
    }
    for (std::size_t j = 0; j < groups.groups.size(); ++j) {
      const auto vg = bar_group(spec, gather(x, groups.groups[j]));
      scatter_add(g, groups.groups[j], vg.gradient, groups.weights[j]);
    }
    return g;
  };
  problem.convex_value = [kappa0, lambda, groups](const Eigen::VectorXd& x) {
    double val = lambda * x.cwiseAbs().sum();
    for (std::size_t j = 0; j < groups.groups.size(); ++j) {
      val += groups.weights[j] * gather(x, groups.groups[j]).norm();
    }
    return kappa0 * val;
  };
  problem.prox = [kappa0, lambda, groups](const Eigen::VectorXd& z, double c,
                                          double) {
    ProxResult out;
    out.point = prox_sparse_group(z, c * kappa0 * lambda,
                                  scale_weights(groups, c * kappa0));
    return out;
  };
  return problem;
}

CompositeProblem build_sparse_group_convex(const Dataset& data, double lambda,
                                           const GroupStructure& groups) {
  groups.validate(data.dim());
  CompositeProblem problem;
  problem.dim = data.dim();
  problem.lipschitz = square_loss_modulus(data);
  problem.smooth_value = [data](const Eigen::VectorXd& x) {
    return square_loss(data, x);
  };
  problem.smooth_gradient = [data](const Eigen::VectorXd& x) {
    return square_loss_grad(data, x);
  };
  problem.convex_value = [lambda, groups](const Eigen::VectorXd& x) {
    double val = lambda * x.cwiseAbs().sum();
    for (std::size_t j = 0; j < groups.groups.size(); ++j) {
      val += groups.weights[j] * gather(x, groups.groups[j]).norm();
    }
    return val;
  };
  problem.prox = [lambda, groups](const Eigen::VectorXd& z, double c, double) {
    ProxResult out;
    out.point = prox_sparse_group(z, c * lambda, scale_weights(groups, c));
    return out;
  };
  return problem;
}

CompositeProblem build_tree(const Dataset& data, const KappaSpec& spec,
                            double mu, const GroupStructure& tree) {
  if (tree.kind != GroupKind::tree) {
    throw std::invalid_argument("build_tree: tree structure required");
  }
  tree.validate(data.dim());
  const auto constants = derived_constants(spec);
  const Eigen::VectorXd w = resolve_weights(data);
  const double weight_sum =
      std::accumulate(tree.weights.begin(), tree.weights.end(), 0.0);

  CompositeProblem problem;
  problem.dim = data.dim();
  problem.lipschitz =
      0.25 * estimate_lipschitz_gram(
                 [&data, &w](const Eigen::VectorXd& v) {
                   return (data.features.transpose() *
                           (w.asDiagonal() * (data.features * v)))
                       .eval();
                 },
                 data.dim(), 0x6772616dULL) +
      2.0 * constants.rho * mu * weight_sum;
  problem.smooth_value = [data, w, spec, mu, tree](const Eigen::VectorXd& x) {
    double val = logistic_loss(data, w, x);
    for (std::size_t j = 0; j < tree.groups.size(); ++j) {
      val += mu * tree.weights[j] * bar_group(spec, gather(x, tree.groups[j])).value;
    }
    return val;
  };
  problem.smooth_gradient = [data, w, spec, mu, tree](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = logistic_loss_grad(data, w, x);
    for (std::size_t j = 0; j < tree.groups.size(); ++j) {
      const auto vg = bar_group(spec, gather(x, tree.groups[j]));
      scatter_add(g, tree.groups[j], vg.gradient, mu * tree.weights[j]);
    }
    return g;
  };
  const double kappa0 = constants.kappa0;
  problem.convex_value = [kappa0, mu, tree](const Eigen::VectorXd& x) {
    double val = 0.0;
    for (std::size_t j = 0; j < tree.groups.size(); ++j) {
      val += tree.weights[j] * gather(x, tree.groups[j]).norm();
    }
    return kappa0 * mu * val;
  };
  problem.prox = [kappa0, mu, tree](const Eigen::VectorXd& z, double c, double) {
    ProxResult out;
    out.point = prox_tree(z, scale_weights(tree, c * kappa0 * mu));
    return out;
  };
  return problem;
}

CompositeProblem build_tree_convex(const Dataset& data, double mu,
                                   const GroupStructure& tree) {
  tree.validate(data.dim());
  const Eigen::VectorXd w = resolve_weights(data);
  CompositeProblem problem;
  problem.dim = data.dim();
  problem.lipschitz = 0.25 * estimate_lipschitz_gram(
                                 [&data, &w](const Eigen::VectorXd& v) {
                                   return (data.features.transpose() *
                                           (w.asDiagonal() * (data.features * v)))
                                       .eval();
                                 },
                                 data.dim(), 0x6772616dULL);
  problem.smooth_value = [data, w](const Eigen::VectorXd& x) {
    return logistic_loss(data, w, x);
  };
  problem.smooth_gradient = [data, w](const Eigen::VectorXd& x) {
    return logistic_loss_grad(data, w, x);
  };
  problem.convex_value = [mu, tree](const Eigen::VectorXd& x) {
    double val = 0.0;
    for (std::size_t j = 0; j < tree.groups.size(); ++j) {
      val += tree.weights[j] * gather(x, tree.groups[j]).norm();
    }
    return mu * val;
  };
  problem.prox = [mu, tree](const Eigen::VectorXd& z, double c, double) {
    ProxResult out;
    out.point = prox_tree(z, scale_weights(tree, c * mu));
    return out;
  };
  return problem;
}

CompositeProblem build_tv_denoise(const ImageGrid& noisy, const KappaSpec& spec,
                                  double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("build_tv_denoise: mu must be positive");
  const Eigen::MatrixXd y = noisy.pixels;
  const Eigen::Index m = y.rows();
  const Eigen::Index n = y.cols();
  const auto constants = derived_constants(spec);
  const double kappa0 = constants.kappa0;

  CompositeProblem problem;
  problem.dim = m * n;
  problem.lipschitz = 2.0 * constants.rho * (1.0 + 8.0 * mu);
  problem.smooth_value = [y, m, n, spec, mu](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    double val = 0.0;
    const Eigen::MatrixXd resid = y - x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
      val += bar_scalar(spec, resid(i)).value;
    }
    const Eigen::MatrixXd dv = tv_dv(x);
    for (Eigen::Index i = 0; i < dv.size(); ++i) {
      val += mu * bar_scalar(spec, dv(i)).value;
    }
    const Eigen::MatrixXd dh = tv_dh(x);
    for (Eigen::Index i = 0; i < dh.size(); ++i) {
      val += mu * bar_scalar(spec, dh(i)).value;
    }
    return val;
  };
  problem.smooth_gradient = [y, m, n, spec, mu](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    Eigen::MatrixXd resid = y - x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
      resid(i) = bar_scalar(spec, resid(i)).derivative;
    }
    Eigen::MatrixXd dv = tv_dv(x);
    for (Eigen::Index i = 0; i < dv.size(); ++i) {
      dv(i) = bar_scalar(spec, dv(i)).derivative;
    }
    Eigen::MatrixXd dh = tv_dh(x);
    for (Eigen::Index i = 0; i < dh.size(); ++i) {
      dh(i) = bar_scalar(spec, dh(i)).derivative;
    }
    const Eigen::MatrixXd grad = -resid + mu * tv_dvt(dv) + mu * tv_dht(dh);
    return flatten(grad);
  };
  problem.convex_value = [y, m, n, kappa0, mu](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    return kappa0 * ((x - y).cwiseAbs().sum() + mu * tv_value(x));
  };
  problem.prox = [y, m, n, kappa0, mu](const Eigen::VectorXd& zv, double c,
                                       double eps) {
    const auto z = as_matrix(zv, m, n);
    TvProxResult tv = prox_tv_inexact(z, &y, mu, 1.0 / (c * kappa0), eps, true);
    ProxResult out;
    out.point = flatten(tv.point);
    out.gap = tv.gap;
    out.inner_iterations = tv.inner_iterations;
    return out;
  };
  return problem;
}

CompositeProblem build_tv_denoise_convex(const ImageGrid& noisy, double mu) {
  const Eigen::MatrixXd y = noisy.pixels;
  const Eigen::Index m = y.rows();
  const Eigen::Index n = y.cols();

  CompositeProblem problem;
  problem.dim = m * n;
  problem.lipschitz = 1.0;  // proximal point on the convex objective
  problem.smooth_value = [](const Eigen::VectorXd&) { return 0.0; };
  problem.smooth_gradient = [dim = m * n](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(dim).eval();
  };
  problem.convex_value = [y, m, n, mu](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    return (x - y).cwiseAbs().sum() + mu * tv_value(x);
  };
  problem.prox = [y, m, n, mu](const Eigen::VectorXd& zv, double c, double eps) {
    const auto z = as_matrix(zv, m, n);
    TvProxResult tv = prox_tv_inexact(z, &y, mu, 1.0 / c, eps, true);
    ProxResult out;
    out.point = flatten(tv.point);
    out.gap = tv.gap;
    out.inner_iterations = tv.inner_iterations;
    return out;
  };
  return problem;
}

CompositeProblem build_rsc(const Eigen::VectorXd& y, const Eigen::MatrixXd& d,
                           const KappaSpec& spec, double mu) {
  if (d.rows() != y.size()) throw std::invalid_argument("build_rsc: shape mismatch");
  const auto constants = derived_constants(spec);
  const double kappa0 = constants.kappa0;
  const double d_norm_sq = estimate_lipschitz_gram(
      [&d](const Eigen::VectorXd& v) {
        return (d.transpose() * (d * v)).eval();
      },
      d.cols(), 0x6772616dULL);

  CompositeProblem problem;
  problem.dim = d.cols();
  problem.lipschitz = 2.0 * constants.rho * (d_norm_sq + mu);
  problem.smooth_value = [y, d, spec, mu](const Eigen::VectorXd& x) {
    double val = 0.0;
    const Eigen::VectorXd resid = y - d * x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
      val += bar_scalar(spec, resid[i]).value;
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      val += mu * bar_scalar(spec, x[i]).value;
    }
    return val;
  };
  problem.smooth_gradient = [y, d, spec, mu](const Eigen::VectorXd& x) {
    Eigen::VectorXd resid = y - d * x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
      resid[i] = bar_scalar(spec, resid[i]).derivative;
    }
    Eigen::VectorXd g = -d.transpose() * resid;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      g[i] += mu * bar_scalar(spec, x[i]).derivative;
    }
    return g;
  };
  problem.convex_value = [y, d, kappa0, mu](const Eigen::VectorXd& x) {
    return kappa0 * ((y - d * x).cwiseAbs().sum() + mu * x.cwiseAbs().sum());
  };
  problem.prox = [y, d, kappa0, mu](const Eigen::VectorXd& z, double c,
                                    double eps) {
    return prox_l1_analysis(z, y, d, mu, 1.0 / (c * kappa0), eps);
  };
  return problem;
}

CompositeProblem build_rsc_convex(const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& d, double mu) {
  CompositeProblem problem;
  problem.dim = d.cols();
  problem.lipschitz = 1.0;
  problem.smooth_value = [](const Eigen::VectorXd&) { return 0.0; };
  problem.smooth_gradient = [dim = d.cols()](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(dim).eval();
  };
  problem.convex_value = [y, d, mu](const Eigen::VectorXd& x) {
    return (y - d * x).cwiseAbs().sum() + mu * x.cwiseAbs().sum();
  };
  problem.prox = [y, d, mu](const Eigen::VectorXd& z, double c, double eps) {
    return prox_l1_analysis(z, y, d, mu, 1.0 / c, eps);
  };
  return problem;
}

DcProblem build_lasso_dc(const Dataset& data, const KappaSpec& spec,
                         double lambda) {
  const double rho = derived_constants(spec).rho;
  DcProblem problem;
  problem.dim = data.dim();
  problem.lipschitz = square_loss_modulus(data);
  problem.smooth_value = [data](const Eigen::VectorXd& x) {
    return square_loss(data, x);
  };
  problem.smooth_gradient = [data](const Eigen::VectorXd& x) {
    return square_loss_grad(data, x);
  };
  problem.convex_value = [spec, lambda, rho](const Eigen::VectorXd& x) {
    double val = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double a = std::abs(x[i]);
      val += kappa_value(spec, a) + 0.5 * rho * a * a;
    }
    return lambda * val;
  };
  problem.convex_prox = [spec, lambda](const Eigen::VectorXd& z, double c,
                                       double) {
    ProxResult out;
    out.point.resize(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      out.point[i] = prox_convexified_scalar(z[i], c * lambda, spec);
    }
    return out;
  };
  problem.concave_value = [lambda, rho](const Eigen::VectorXd& x) {
    return -0.5 * lambda * rho * x.squaredNorm();
  };
  problem.concave_gradient = [lambda, rho](const Eigen::VectorXd& x) {
    return (-lambda * rho * x).eval();
  };
  return problem;
}

DcProblem build_group_dc(const Dataset& data, const KappaSpec& spec,
                         const GroupStructure& groups) {
  if (groups.kind != GroupKind::disjoint) {
    throw std::invalid_argument("build_group_dc: disjoint groups required");
  }
  groups.validate(data.dim());
  const double rho = derived_constants(spec).rho;

  DcProblem problem;
  problem.dim = data.dim();
  problem.lipschitz = square_loss_modulus(data);
  problem.smooth_value = [data](const Eigen::VectorXd& x) {
    return square_loss(data, x);
  };
  problem.smooth_gradient = [data](const Eigen::VectorXd& x) {
    return square_loss_grad(data, x);
  };
  problem.convex_value = [spec, groups, rho](const Eigen::VectorXd& x) {
    double val = 0.0;
    for (std::size_t j = 0; j < groups.groups.size(); ++j) {
      const double r = gather(x, groups.groups[j]).norm();
      val += groups.weights[j] * (kappa_value(spec, r) + 0.5 * rho * r * r);
    }
    return val;
  };
  problem.convex_prox = [spec, groups](const Eigen::VectorXd& z, double c,
                                       double) {
    ProxResult out;
    out.point = z;
    for (std::size_t j = 0; j < groups.groups.size(); ++j) {
      const Eigen::VectorXd block = gather(z, groups.groups[j]);
      const Eigen::VectorXd shrunk =
          prox_convexified_group(block, c * groups.weights[j], spec);
      for (std::size_t k = 0; k < groups.groups[j].size(); ++k) {
        out.point[groups.groups[j][k]] = shrunk[static_cast<Eigen::Index>(k)];
      }
    }
    return out;
  };
  problem.concave_value = [groups, rho](const Eigen::VectorXd& x) {
    double val = 0.0;
    for (std::size_t j = 0; j < groups.groups.size(); ++j) {
      val += groups.weights[j] * gather(x, groups.groups[j]).squaredNorm();
    }
    return -0.5 * rho * val;
  };
  problem.concave_gradient = [groups, rho](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (std::size_t j = 0; j < groups.groups.size(); ++j) {
      scatter_add(g, groups.groups[j], gather(x, groups.groups[j]),
                  -rho * groups.weights[j]);
    }
    return g;
  };
  return problem;
}

DcProblem build_tv_denoise_dc(const ImageGrid& noisy, const KappaSpec& spec,
                              double mu) {
  const Eigen::MatrixXd y = noisy.pixels;
  const Eigen::Index m = y.rows();
  const Eigen::Index n = y.cols();
  const auto constants = derived_constants(spec);
  const double kappa0 = constants.kappa0;
  const double rho = constants.rho;

  // s(u) = kappa(|u|) - kappa0 |u| + rho/2 u^2, the smooth remainder of the
  // convex surrogate part; |s''| <= rho.
  const auto s_value = [spec, rho](double u) {
    return bar_scalar(spec, u).value + 0.5 * rho * u * u;
  };
  const auto s_deriv = [spec, rho](double u) {
    return bar_scalar(spec, u).derivative + rho * u;
  };

  DcProblem problem;
  problem.dim = m * n;
  problem.lipschitz = rho * (1.0 + 8.0 * mu);
  problem.smooth_value = [y, m, n, mu, s_value](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    double val = 0.0;
    const Eigen::MatrixXd resid = y - x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) val += s_value(resid(i));
    const Eigen::MatrixXd dv = tv_dv(x);
    for (Eigen::Index i = 0; i < dv.size(); ++i) val += mu * s_value(dv(i));
    const Eigen::MatrixXd dh = tv_dh(x);
    for (Eigen::Index i = 0; i < dh.size(); ++i) val += mu * s_value(dh(i));
    return val;
  };
  problem.smooth_gradient = [y, m, n, mu, s_deriv](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    Eigen::MatrixXd resid = y - x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) resid(i) = s_deriv(resid(i));
    Eigen::MatrixXd dv = tv_dv(x);
    for (Eigen::Index i = 0; i < dv.size(); ++i) dv(i) = s_deriv(dv(i));
    Eigen::MatrixXd dh = tv_dh(x);
    for (Eigen::Index i = 0; i < dh.size(); ++i) dh(i) = s_deriv(dh(i));
    return flatten((-resid + mu * tv_dvt(dv) + mu * tv_dht(dh)).eval());
  };
  problem.convex_value = [y, m, n, kappa0, mu](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    return kappa0 * ((x - y).cwiseAbs().sum() + mu * tv_value(x));
  };
  problem.convex_prox = [y, m, n, kappa0, mu](const Eigen::VectorXd& zv,
                                              double c, double eps) {
    const auto z = as_matrix(zv, m, n);
    TvProxResult tv = prox_tv_inexact(z, &y, mu, 1.0 / (c * kappa0), eps, true);
    ProxResult out;
    out.point = flatten(tv.point);
    out.gap = tv.gap;
    out.inner_iterations = tv.inner_iterations;
    return out;
  };
  problem.concave_value = [y, m, n, mu, rho](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    return -0.5 * rho *
           ((y - x).squaredNorm() + mu * tv_dv(x).squaredNorm() +
            mu * tv_dh(x).squaredNorm());
  };
  problem.concave_gradient = [y, m, n, mu, rho](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    const Eigen::MatrixXd grad = rho * (y - x) -
                                 rho * mu * tv_dvt(tv_dv(x)) -
                                 rho * mu * tv_dht(tv_dh(x));
    return flatten(grad);
  };
  return problem;
}

SmoothedProblem build_lasso_smoothed(const Dataset& data, const KappaSpec& spec,
                                     double lambda) {
  SmoothedProblem problem;
  problem.dim = data.dim();
  problem.value = [data, spec, lambda](const Eigen::VectorXd& x, double lam) {
    const SmoothedKappaSpec sk(spec, lam);
    double val = square_loss(data, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      val += lambda * smoothed_kappa(sk, x[i]).value;
    }
    return val;
  };
  problem.gradient = [data, spec, lambda](const Eigen::VectorXd& x, double lam) {
    const SmoothedKappaSpec sk(spec, lam);
    Eigen::VectorXd g = square_loss_grad(data, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      g[i] += lambda * smoothed_kappa(sk, x[i]).derivative;
    }
    return g;
  };
  problem.true_objective = [data, spec, lambda](const Eigen::VectorXd& x) {
    double val = square_loss(data, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      val += lambda * kappa_value(spec, std::abs(x[i]));
    }
    return val;
  };
  return problem;
}

SmoothedProblem build_tv_denoise_smoothed(const ImageGrid& noisy,
                                          const KappaSpec& spec, double mu) {
  const Eigen::MatrixXd y = noisy.pixels;
  const Eigen::Index m = y.rows();
  const Eigen::Index n = y.cols();

  SmoothedProblem problem;
  problem.dim = m * n;
  problem.value = [y, m, n, spec, mu](const Eigen::VectorXd& xv, double lam) {
    const SmoothedKappaSpec sk(spec, lam);
    const auto x = as_matrix(xv, m, n);
    double val = 0.0;
    const Eigen::MatrixXd resid = y - x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
      val += smoothed_kappa(sk, resid(i)).value;
    }
    const Eigen::MatrixXd dv = tv_dv(x);
    for (Eigen::Index i = 0; i < dv.size(); ++i) {
      val += mu * smoothed_kappa(sk, dv(i)).value;
    }
    const Eigen::MatrixXd dh = tv_dh(x);
    for (Eigen::Index i = 0; i < dh.size(); ++i) {
      val += mu * smoothed_kappa(sk, dh(i)).value;
    }
    return val;
  };
  problem.gradient = [y, m, n, spec, mu](const Eigen::VectorXd& xv, double lam) {
    const SmoothedKappaSpec sk(spec, lam);
    const auto x = as_matrix(xv, m, n);
    Eigen::MatrixXd resid = y - x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
      resid(i) = smoothed_kappa(sk, resid(i)).derivative;
    }
    Eigen::MatrixXd dv = tv_dv(x);
    for (Eigen::Index i = 0; i < dv.size(); ++i) {
      dv(i) = smoothed_kappa(sk, dv(i)).derivative;
    }
    Eigen::MatrixXd dh = tv_dh(x);
    for (Eigen::Index i = 0; i < dh.size(); ++i) {
      dh(i) = smoothed_kappa(sk, dh(i)).derivative;
    }
    return flatten((-resid + mu * tv_dvt(dv) + mu * tv_dht(dh)).eval());
  };
  problem.true_objective = [y, m, n, spec, mu](const Eigen::VectorXd& xv) {
    const auto x = as_matrix(xv, m, n);
    double val = 0.0;
    const Eigen::MatrixXd resid = y - x;
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
      val += kappa_value(spec, std::abs(resid(i)));
    }
    const Eigen::MatrixXd dv = tv_dv(x);
    for (Eigen::Index i = 0; i < dv.size(); ++i) {
      val += mu * kappa_value(spec, std::abs(dv(i)));
    }
    const Eigen::MatrixXd dh = tv_dh(x);
    for (Eigen::Index i = 0; i < dh.size(); ++i) {
      val += mu * kappa_value(spec, std::abs(dh(i)));
    }
    return val;
  };
  return problem;
}

ConsensusProblem build_consensus_least_squares(const Dataset& data,
                                               const KappaSpec* spec,
                                               double lambda, int shards) {
  if (shards < 1) throw std::invalid_argument("build_consensus_least_squares: shards >= 1");
  const Eigen::Index n = data.samples();
  const double kappa0 = spec ? derived_constants(*spec).kappa0 : 1.0;
  const double inv_m = 1.0 / static_cast<double>(shards);

  ConsensusProblem problem;
  problem.dim = data.dim();
  for (int s = 0; s < shards; ++s) {
    const Eigen::Index lo = n * s / shards;
    const Eigen::Index hi = n * (s + 1) / shards;
    Dataset shard;
    shard.features = data.features.middleRows(lo, hi - lo);
    shard.targets = data.targets.segment(lo, hi - lo);
    ConsensusProblem::LocalOracle local;
    if (spec) {
      const KappaSpec k = *spec;
      local.value = [shard, k, lambda, inv_m](const Eigen::VectorXd& x) {
        double val = square_loss(shard, x);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          val += inv_m * lambda * bar_scalar(k, x[i]).value;
        }
        return val;
      };
      local.gradient = [shard, k, lambda, inv_m](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = square_loss_grad(shard, x);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          g[i] += inv_m * lambda * bar_scalar(k, x[i]).derivative;
        }
        return g;
      };
    } else {
      local.value = [shard](const Eigen::VectorXd& x) {
        return square_loss(shard, x);
      };
      local.gradient = [shard](const Eigen::VectorXd& x) {
        return square_loss_grad(shard, x);
      };
    }
    problem.locals.push_back(std::move(local));
  }
  problem.convex_value = [kappa0, lambda](const Eigen::VectorXd& x) {
    return kappa0 * lambda * x.cwiseAbs().sum();
  };
  problem.convex_prox = [kappa0, lambda](const Eigen::VectorXd& z, double c,
                                         double) {
    ProxResult out;
    out.point = prox_l1(z, c * kappa0 * lambda);
    return out;
  };
  if (spec) {
    const KappaSpec k = *spec;
    problem.report_objective = [data, k, lambda](const Eigen::VectorXd& y) {
      double val = square_loss(data, y);
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        val += lambda * kappa_value(k, std::abs(y[i]));
      }
      return val;
    };
  } else {
    problem.report_objective = [data, lambda](const Eigen::VectorXd& y) {
      return square_loss(data, y) + lambda * y.cwiseAbs().sum();
    };
  }
  return problem;
}

SparseGroupInstance synth_sparse_group(int d, int n_groups,
                                       double zero_group_frac,
                                       double within_zero_frac, int n_samples,
                                       double noise_sigma, std::uint64_t seed) {
  if (d <= 0 || n_groups <= 0 || d % n_groups != 0) {
    throw std::invalid_argument("synth_sparse_group: d must be divisible by n_groups");
  }
  if (zero_group_frac < 0.0 || zero_group_frac > 1.0 ||
      within_zero_frac < 0.0 || within_zero_frac > 1.0) {
    throw std::invalid_argument("synth_sparse_group: fractions must lie in [0, 1]");
  }
  const int group_size = d / n_groups;
  SplitRng rng(seed);

  SparseGroupInstance out;
  out.groups.kind = GroupKind::disjoint;
  for (int j = 0; j < n_groups; ++j) {
    std::vector<int> idx(group_size);
    std::iota(idx.begin(), idx.end(), j * group_size);
    out.groups.groups.push_back(std::move(idx));
    out.groups.weights.push_back(1.0);
  }

  // Deterministic shuffle of group labels, then zero the first chunk.
  std::vector<int> order(n_groups);
  std::iota(order.begin(), order.end(), 0);
  SplitRng select = rng.split("select");
  for (int i = n_groups - 1; i > 0; --i) {
    const auto j = static_cast<int>(select.uniform_int(0, i));
    std::swap(order[i], order[j]);
  }
  const int n_zero = static_cast<int>(std::lround(zero_group_frac * n_groups));

  out.x_bar = Eigen::VectorXd::Zero(d);
  SplitRng signal = rng.split("signal");
  for (int pos = n_zero; pos < n_groups; ++pos) {
    const int g = order[pos];
    std::vector<int> members(group_size);
    std::iota(members.begin(), members.end(), 0);
    for (int i = group_size - 1; i > 0; --i) {
      const auto j = static_cast<int>(signal.uniform_int(0, i));
      std::swap(members[i], members[j]);
    }
    const int n_inner_zero =
        static_cast<int>(std::lround(within_zero_frac * group_size));
    for (int k = n_inner_zero; k < group_size; ++k) {
      out.x_bar[g * group_size + members[k]] = signal.normal();
    }
  }

  SplitRng design = rng.split("design");
  out.data.features.resize(n_samples, d);
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out.data.features(i, j) = design.normal();
    }
  }
  SplitRng noise = rng.split("noise");
  out.data.targets = out.data.features * out.x_bar;
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    out.data.targets[i] += noise_sigma * noise.normal();
  }
  return out;
}

TreeInstance synth_tree_logistic(int n_samples, double noise_sigma,
                                 std::uint64_t seed) {
  constexpr int d = 64;
  TreeInstance out;
  out.tree.kind = GroupKind::tree;
  auto add_group = [&out](int lo, int size) {
    std::vector<int> idx(size);
    std::iota(idx.begin(), idx.end(), lo);
    out.tree.groups.push_back(std::move(idx));
    out.tree.weights.push_back(1.0 / std::sqrt(static_cast<double>(size)));
  };
  add_group(0, d);
  for (int c = 0; c < 4; ++c) add_group(c * 16, 16);
  for (int c = 0; c < 16; ++c) add_group(c * 4, 4);

  SplitRng rng(seed);
  SplitRng signal = rng.split("signal");
  out.x_bar = Eigen::VectorXd::Zero(d);
  // Signal lives on two of the sixteen leaf subtrees.
  for (int leaf : {1, 10}) {
    for (int k = 0; k < 4; ++k) {
      out.x_bar[leaf * 4 + k] = signal.normal() + (signal.uniform() < 0.5 ? -1.0 : 1.0);
    }
  }

  SplitRng design = rng.split("design");
  out.data.features.resize(n_samples, d);
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out.data.features(i, j) = design.normal();
    }
  }
  SplitRng noise = rng.split("noise");
  out.data.targets.resize(n_samples);
  Eigen::Index positives = 0;
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    const double score =
        out.data.features.row(i).dot(out.x_bar) + noise_sigma * noise.normal();
    out.data.targets[i] = score >= 0.0 ? 1.0 : -1.0;
    if (out.data.targets[i] > 0.0) ++positives;
  }
  const Eigen::Index negatives = n_samples - positives;
  out.data.sample_weights.resize(n_samples);
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    out.data.sample_weights[i] =
        out.data.targets[i] > 0.0
            ? 1.0 / std::max<Eigen::Index>(positives, 1)
            : 1.0 / std::max<Eigen::Index>(negatives, 1);
  }
  return out;
}

ImageGrid synth_block_image(int m, int n) {
  // Quadrants with distinct structure: two ramps, one flat block and one
  // fine checkerboard, so that total-variation denoising has a genuine
  // bias-variance tradeoff instead of an exactly recoverable target.
  ImageGrid img;
  img.pixels.resize(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const int bi = i * 2 / m;
      const int bj = j * 2 / n;
      double v;
      if (bi == 0 && bj == 0) {
        v = 0.15 + 0.6 * j / std::max(1, n - 1);
      } else if (bi == 0 && bj == 1) {
        v = 0.85;
      } else if (bi == 1 && bj == 0) {
        v = 0.7 - 0.4 * i / std::max(1, m - 1);
      } else {
        v = ((i + j) % 2 == 0) ? 0.35 : 0.5;
      }
      img.pixels(i, j) = v;
    }
  }
  img.provenance = ImageGrid::Provenance::clean;
  return img;
}

DenoiseInstance synth_denoise(int m, int n, double corrupt_frac,
                              std::uint64_t seed) {
  DenoiseInstance out;
  out.clean = synth_block_image(m, n);
  out.noisy = out.clean;
  out.noisy.provenance = ImageGrid::Provenance::corrupted;
  SplitRng rng = SplitRng(seed).split("salt-pepper");
  const int total = m * n;
  const int n_corrupt = static_cast<int>(std::lround(corrupt_frac * total));
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (int i = total - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(order[i], order[j]);
  }
  for (int k = 0; k < n_corrupt; ++k) {
    const int idx = order[k];
    out.noisy.pixels(idx % m, idx / m) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  return out;
}

RscInstance synth_rsc(int m, int d, int sparsity, double outlier_frac,
                      std::uint64_t seed) {
  SplitRng rng(seed);
  RscInstance out;
  SplitRng dict = rng.split("dictionary");
  out.dictionary.resize(m, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) out.dictionary(i, j) = dict.normal();
    out.dictionary.col(j).normalize();
  }
  out.x_bar = Eigen::VectorXd::Zero(d);
  SplitRng code = rng.split("code");
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  for (int i = d - 1; i > 0; --i) {
    const auto j = static_cast<int>(code.uniform_int(0, i));
    std::swap(order[i], order[j]);
  }
  // Coefficients reach down toward the noise floor so that support
  // recovery is a real discriminator rather than trivially perfect.
  for (int k = 0; k < sparsity; ++k) {
    out.x_bar[order[k]] = (code.uniform() < 0.5 ? -1.0 : 1.0) * (0.35 + 0.9 * code.uniform());
  }
  out.y = out.dictionary * out.x_bar;
  SplitRng noise = rng.split("outliers");
  const int n_outliers = static_cast<int>(std::lround(outlier_frac * m));
  std::vector<int> rows(m);
  std::iota(rows.begin(), rows.end(), 0);
  for (int i = m - 1; i > 0; --i) {
    const auto j = static_cast<int>(noise.uniform_int(0, i));
    std::swap(rows[i], rows[j]);
  }
  for (int k = 0; k < n_outliers; ++k) {
    out.y[rows[k]] += (noise.uniform() < 0.5 ? -1.0 : 1.0) * (2.0 + 2.0 * noise.uniform());
  }
  for (Eigen::Index i = 0; i < m; ++i) out.y[i] += 0.03 * noise.normal();
  return out;
}

CompletionInstance synth_completion(int m, int n, int rank,
                                    double observe_frac, double heldout_frac,
                                    double noise_sigma, std::uint64_t seed) {
  SplitRng rng(seed);
  SplitRng factors = rng.split("factors");
  Eigen::MatrixXd p(m, rank), q(n, rank);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int k = 0; k < rank; ++k) p(i, k) = factors.normal();
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int k = 0; k < rank; ++k) q(j, k) = factors.normal();
  }
  CompletionInstance out;
  out.truth = p * q.transpose();

  const int total = m * n;
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  SplitRng pick = rng.split("observe");
  for (int i = total - 1; i > 0; --i) {
    const auto j = static_cast<int>(pick.uniform_int(0, i));
    std::swap(order[i], order[j]);
  }
  const int n_obs = static_cast<int>(std::lround(observe_frac * total));
  const int n_train = n_obs - static_cast<int>(std::lround(heldout_frac * n_obs));
  SplitRng noise = rng.split("noise");
  out.train.rows = out.heldout.rows = m;
  out.train.cols = out.heldout.cols = n;
  for (int k = 0; k < n_obs; ++k) {
    const int idx = order[k];
    const int row = idx % m;
    const int col = idx / m;
    const double val = out.truth(row, col) + noise_sigma * noise.normal();
    if (k < n_train) {
      out.train.entries.push_back({row, col, val});
    } else {
      out.heldout.entries.push_back({row, col, out.truth(row, col)});
    }
  }
  out.train.finalize();
  out.heldout.finalize();
  return out;
}

double completion_rmse(const FactoredMatrix& x, const ObservedMatrix& heldout) {
  if (heldout.entries.empty()) return 0.0;
  const Eigen::VectorXd r = completion_residual(x, heldout);
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

}  // namespace redistopt
