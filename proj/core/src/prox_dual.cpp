#include "redistopt/prox_dual.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "redistopt/rng.hpp"

namespace redistopt {

Eigen::MatrixXd tv_dv(const Eigen::MatrixXd& x) {
  const Eigen::Index m = x.rows();
  return x.bottomRows(m - 1) - x.topRows(m - 1);
}

Eigen::MatrixXd tv_dvt(const Eigen::MatrixXd& p) {
  const Eigen::Index m = p.rows() + 1;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, p.cols());
  out.topRows(m - 1) -= p;
  out.bottomRows(m - 1) += p;
  return out;
}

Eigen::MatrixXd tv_dh(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.cols();
  return x.rightCols(n - 1) - x.leftCols(n - 1);
}

Eigen::MatrixXd tv_dht(const Eigen::MatrixXd& q) {
  const Eigen::Index n = q.cols() + 1;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(q.rows(), n);
  out.leftCols(n - 1) -= q;
  out.rightCols(n - 1) += q;
  return out;
}

double tv_value(const Eigen::MatrixXd& x) {
  return tv_dv(x).cwiseAbs().sum() + tv_dh(x).cwiseAbs().sum();
}

namespace {

struct DualOutcome {
  Eigen::VectorXd dual;
  double gap = 0.0;
  int iterations = 0;
};

// Accelerated projected gradient on min Psi(v) over the box ||v||_inf <= 1,
// where Psi is convex quadratic with gradient `grad` and modulus `lipschitz`.
// `gap_at` certifies the duality gap of the primal point recovered from v.
DualOutcome apg_box(Eigen::VectorXd v0, double lipschitz, double eps,
                    int max_inner,
                    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                    const std::function<double(const Eigen::VectorXd&)>& gap_at) {
  DualOutcome out;
  out.dual = v0;
  out.gap = gap_at(v0);
  if (out.gap <= eps || v0.size() == 0) return out;

  const double step = 1.0 / lipschitz;
  Eigen::VectorXd w = v0;
  Eigen::VectorXd w_prev = v0;
  double t_prev = 1.0;
  double t = 1.0;
  for (int it = 1; it <= max_inner; ++it) {
    const double momentum = (t_prev - 1.0) / t;
    Eigen::VectorXd y = w + momentum * (w - w_prev);
    Eigen::VectorXd w_next =
        (y - step * grad(y)).cwiseMax(-1.0).cwiseMin(1.0);
    w_prev.swap(w);
    w = std::move(w_next);
    t_prev = t;
    t = 0.5 * (std::sqrt(4.0 * t * t + 1.0) + 1.0);
    const double g = gap_at(w);
    out.iterations = it;
    if (g < out.gap) {
      out.gap = g;
      out.dual = w;
    }
    if (out.gap <= eps) break;
  }
  return out;
}

// Largest curvature of the affine-gradient map via power iteration.
double dual_lipschitz(Eigen::Index dim,
                      const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad) {
  const Eigen::VectorXd grad0 = grad(Eigen::VectorXd::Zero(dim));
  SplitRng rng(0x70776572ULL);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  double norm = v.norm();
  if (norm == 0.0) return 0.0;
  v /= norm;
  double eig = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd hv = grad(v) - grad0;
    eig = hv.norm();
    if (eig <= 0.0) return 0.0;
    v = hv / eig;
  }
  return 1.05 * eig;
}

}  // namespace

TvProxResult prox_tv_inexact(const Eigen::MatrixXd& z, const Eigen::MatrixXd* y,
                             double mu, double tau, double eps,
                             bool include_l1, int max_inner) {
  if (!(tau > 0.0) || !(eps > 0.0) || mu < 0.0) {
    throw std::domain_error("prox_tv_inexact: need tau > 0, eps > 0, mu >= 0");
  }
  if (include_l1 && (y == nullptr || y->rows() != z.rows() || y->cols() != z.cols())) {
    throw std::invalid_argument("prox_tv_inexact: Y must match Z when include_l1 is set");
  }
  const Eigen::Index m = z.rows();
  const Eigen::Index n = z.cols();
  const Eigen::Index nw = include_l1 ? m * n : 0;
  const Eigen::Index np = (m - 1) * n;
  const Eigen::Index nq = m * (n - 1);
  const Eigen::Index dim = nw + np + nq;

  const auto unpack_w = [&](const Eigen::VectorXd& v) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, n);
  };
  const auto unpack_p = [&](const Eigen::VectorXd& v) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data() + nw, m - 1, n);
  };
  const auto unpack_q = [&](const Eigen::VectorXd& v) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data() + nw + np, m, n - 1);
  };

  const auto assemble_g = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
    Eigen::MatrixXd g = mu * tv_dvt(unpack_p(v)) + mu * tv_dht(unpack_q(v));
    if (include_l1) g += unpack_w(v);
    return g;
  };

  const Eigen::MatrixXd dvz = tv_dv(z);
  const Eigen::MatrixXd zdh = tv_dh(z);

  // Psi(v) = 1/(2 tau^2) ||G||^2 - (1/tau)(<Z - Y, W> + mu<D_v Z, P> + mu<Z D_h, Q>)
  const auto grad = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const Eigen::MatrixXd g = assemble_g(v);
    Eigen::VectorXd out(dim);
    if (include_l1) {
      Eigen::Map<Eigen::MatrixXd>(out.data(), m, n) =
          g / (tau * tau) - (z - *y) / tau;
    }
    Eigen::Map<Eigen::MatrixXd>(out.data() + nw, m - 1, n) =
        (mu / (tau * tau)) * tv_dv(g) - (mu / tau) * dvz;
    Eigen::Map<Eigen::MatrixXd>(out.data() + nw + np, m, n - 1) =
        (mu / (tau * tau)) * tv_dh(g) - (mu / tau) * zdh;
    return out;
  };

  const auto primal_value = [&](const Eigen::MatrixXd& x) {
    double val = 0.5 * (x - z).squaredNorm();
    double reg = mu * tv_value(x);
    if (include_l1) reg += (x - *y).cwiseAbs().sum();
    return val + reg / tau;
  };

  const auto gap_at = [&](const Eigen::VectorXd& v) {
    const Eigen::MatrixXd g = assemble_g(v);
    const Eigen::MatrixXd x = z - g / tau;
    double linear = mu * (dvz.cwiseProduct(unpack_p(v)).sum() +
                          zdh.cwiseProduct(unpack_q(v)).sum());
    if (include_l1) linear += (z - *y).cwiseProduct(unpack_w(v)).sum();
    const double dual_value = -g.squaredNorm() / (2.0 * tau * tau) + linear / tau;
    return primal_value(x) - dual_value;
  };

  TvProxResult result;
  if (dim == 0) {
    result.point = z;
    return result;
  }
  const double lip = dual_lipschitz(dim, grad);
  if (lip == 0.0) {
    result.point = z;
    result.gap = gap_at(Eigen::VectorXd::Zero(dim));
    return result;
  }
  DualOutcome outcome = apg_box(Eigen::VectorXd::Zero(dim), lip, eps, max_inner, grad, gap_at);
  result.point = z - assemble_g(outcome.dual) / tau;
  result.gap = outcome.gap;
  result.inner_iterations = outcome.iterations;
  return result;
}

ProxResult prox_l1_analysis(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& d, double mu, double tau,
                            double eps, int max_inner) {
  if (!(tau > 0.0) || !(eps > 0.0) || mu < 0.0) {
    throw std::domain_error("prox_l1_analysis: need tau > 0, eps > 0, mu >= 0");
  }
  if (d.rows() != y.size() || d.cols() != z.size()) {
    throw std::invalid_argument("prox_l1_analysis: shape mismatch between D, y, z");
  }
  const Eigen::Index mrows = d.rows();
  const Eigen::Index dcols = d.cols();
  const Eigen::Index dim = mrows + dcols;

  const auto assemble_g = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return d.transpose() * v.head(mrows) + mu * v.tail(dcols);
  };

  const Eigen::VectorXd dz = d * z;

  // Psi(p, q) = 1/(2 tau^2) ||D^T p + mu q||^2 - (1/tau)(<g, z> - <p, y>)
  const auto grad = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const Eigen::VectorXd g = assemble_g(v);
    Eigen::VectorXd out(dim);
    out.head(mrows) = (d * g) / (tau * tau) - (dz - y) / tau;
    out.tail(dcols) = (mu / (tau * tau)) * g - (mu / tau) * z;
    return out;
  };

  const auto gap_at = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd g = assemble_g(v);
    const Eigen::VectorXd x = z - g / tau;
    const double primal = 0.5 * (x - z).squaredNorm() +
                          ((y - d * x).cwiseAbs().sum() + mu * x.cwiseAbs().sum()) / tau;
    const double dual = -g.squaredNorm() / (2.0 * tau * tau) +
                        (g.dot(z) - v.head(mrows).dot(y)) / tau;
    return primal - dual;
  };

  ProxResult result;
  const double lip = dual_lipschitz(dim, grad);
  if (lip == 0.0) {
    result.point = z;
    result.gap = gap_at(Eigen::VectorXd::Zero(dim));
    return result;
  }
  DualOutcome outcome = apg_box(Eigen::VectorXd::Zero(dim), lip, eps, max_inner, grad, gap_at);
  result.point = z - assemble_g(outcome.dual) / tau;
  result.gap = outcome.gap;
  result.inner_iterations = outcome.iterations;
  return result;
}

}  // namespace redistopt
